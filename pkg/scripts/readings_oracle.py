"""Which normalization of the literature lower bound on L survives the n <= 2 oracle?

For each test matrix and scale c the script prints the oracle's upper bound
L_hi on L next to each candidate lower bound, flagging candidates that exceed
it (a refutation). L is 1-homogeneous in A, so a consistent bound must scale
linearly with c as well.

    python3 scripts/readings_oracle.py
"""

import warnings

import numpy as np

from relucond.errors import DegenerateArrangementWarning
from relucond.exact import bound_readings_check
from relucond.numerics import gaussian_matrix

MATRICES = {
    "[[1],[-1]]": np.array([[1.0], [-1.0]]),
    "square cross": np.array([[1.0, 0], [0, 1], [-1, 0], [0, -1]]),
    "gaussian 8x2": gaussian_matrix(8, 2, 11),
    "gaussian 12x2": gaussian_matrix(12, 2, 12),
}


def main():
    warnings.simplefilter("ignore", DegenerateArrangementWarning)
    for name, A in MATRICES.items():
        for c in (0.25, 1.0, 4.0):
            out = bound_readings_check(c * A, resolution=1024)
            refuted = [k for k, v in out["refuted"].items() if v]
            claims = "  ".join(f"{k}={v:.4f}" for k, v in out["claims"].items())
            print(f"{name:14s} c={c:<5} L_hi={out['L_hi']:.4f}  {claims}  refuted={refuted}")


if __name__ == "__main__":
    main()
