class InputError(ValueError):
    """Invalid arguments: bad dimensions, out-of-range parameters, malformed files."""


class DegeneratePairError(InputError):
    """A pair (x, y) with x == y, or so close that the ratio is a 0/0 form."""


class NumericalError(RuntimeError):
    """An internal numerical step failed (e.g. a completeness self-check)."""


class DegenerateArrangementWarning(UserWarning):
    """Two weight rows define the same hyperplane."""
