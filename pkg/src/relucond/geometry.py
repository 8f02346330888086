"""Closed-form quantities of a ReLU layer x -> relu(Ax + b) / sqrt(m).

Everything here is a pure function of its arguments. Scalar functions take
1-d vectors; the ``*_batch`` variants take one pair per row and are what the
Monte-Carlo code uses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePairError, InputError
from .numerics import as_matrix, as_vector

# Pairs closer than this (relative to the larger norm) make phi a 0/0 form.
NEAR_PAIR_RTOL = 1e-13
# Below this angle sin(t) - t cos(t) is evaluated from its Taylor series.
_SERIES_ANGLE = 1e-2

RAMP_KINDS = ("tail_beta", "relaxed_alpha", "strict_alpha")


@dataclass(frozen=True)
class LayerMap:
    A: np.ndarray
    b: np.ndarray = field(default=None)

    def __post_init__(self):
        A = as_matrix(self.A)
        b = np.zeros(A.shape[0]) if self.b is None else as_vector(self.b, "b")
        if b.shape[0] != A.shape[0]:
            raise InputError(f"bias has length {b.shape[0]}, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def unbiased(self) -> bool:
        return not np.any(self.b)

    def scaled(self, c: float) -> "LayerMap":
        return LayerMap(c * self.A, c * self.b)

    def __call__(self, x) -> np.ndarray:
        return layer_apply(self, x)


def relu(v) -> np.ndarray:
    return np.maximum(np.asarray(v, dtype=float), 0.0)


def layer_apply(layer: LayerMap, x) -> np.ndarray:
    """relu(Ax + b), without the 1/sqrt(m) factor."""
    x = as_vector(x)
    if x.shape[0] != layer.n:
        raise InputError(f"input has dimension {x.shape[0]}, layer expects {layer.n}")
    return relu(layer.A @ x + layer.b)


def pairwise_ratio(layer: LayerMap, x, y) -> float:
    """||relu(Ax+b) - relu(Ay+b)|| / (sqrt(m) ||x - y||)."""
    x, y = as_vector(x), as_vector(y)
    diff = np.linalg.norm(x - y)
    if diff == 0.0:
        raise DegeneratePairError("pairwise ratio is undefined for x == y")
    out = np.linalg.norm(layer_apply(layer, x) - layer_apply(layer, y))
    return float(out / (np.sqrt(layer.m) * diff))


def pair_ratios(A: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise ``pairwise_ratio`` for pairs (X[i], Y[i]); NaN where X[i] == Y[i]."""
    FX = relu(X @ A.T + b)
    FY = relu(Y @ A.T + b)
    return ratios_from_images(FX, FY, X, Y)


def ratios_from_images(FX, FY, X, Y) -> np.ndarray:
    m = FX.shape[1]
    num = np.linalg.norm(FX - FY, axis=1)
    den = np.linalg.norm(X - Y, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / (np.sqrt(m) * den)
    r[den == 0.0] = np.nan
    return r


def image_distances(A: np.ndarray, b: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row norms of relu(X A^T + b) - relu(Y A^T + b), using two m-wide buffers."""
    P = X @ A.T
    Q = Y @ A.T
    if b is not None and np.any(b):
        P += b
        Q += b
    np.maximum(P, 0.0, out=P)
    np.maximum(Q, 0.0, out=Q)
    P -= Q
    return np.sqrt(np.einsum("ij,ij->i", P, P))


def blocked_image_distances(A, b, X, Y, cells: int = 1 << 22) -> np.ndarray:
    """``image_distances`` over row blocks holding at most ``cells`` image entries each."""
    block = max(1, cells // A.shape[0])
    if X.shape[0] <= block:
        return image_distances(A, b, X, Y)
    return np.concatenate(
        [image_distances(A, b, X[s : s + block], Y[s : s + block]) for s in range(0, X.shape[0], block)]
    )


def _sin_minus_t_cos(t):
    """sin(t) - t cos(t) without cancellation near t = 0."""
    t = np.asarray(t, dtype=float)
    t2 = t * t
    series = t * t2 * (1.0 / 3.0 - t2 * (1.0 / 30.0 - t2 * (1.0 / 840.0 - t2 / 45360.0)))
    return np.where(t < _SERIES_ANGLE, series, np.sin(t) - t * np.cos(t))


def _angle_between_units(u, v):
    # 2 atan2(|u - v|, |u + v|): accurate for nearly parallel and nearly antipodal pairs
    return 2.0 * np.arctan2(
        np.linalg.norm(u - v, axis=-1), np.linalg.norm(u + v, axis=-1)
    )


def angle_theta(x, y) -> float:
    """Angle between x and y in [0, pi]."""
    x, y = as_vector(x), as_vector(y)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise InputError("angle is undefined for a zero vector")
    return float(_angle_between_units(x / nx, y / ny))


def angle_batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise angles; NaN where either row is zero."""
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    ok = (nx > 0) & (ny > 0)
    out = np.full(X.shape[0], np.nan)
    out[ok] = _angle_between_units(X[ok] / nx[ok, None], Y[ok] / ny[ok, None])
    return out


def _check_pair(x, y):
    x, y = as_vector(x), as_vector(y)
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    nd = np.linalg.norm(x - y)
    scale = max(np.linalg.norm(x), np.linalg.norm(y))
    if nd == 0.0:
        raise DegeneratePairError("phi is undefined for x == y")
    if nd < NEAR_PAIR_RTOL * scale:
        raise DegeneratePairError(
            f"|x - y| = {nd:.3g} is below {NEAR_PAIR_RTOL:g} * max(|x|, |y|)"
        )
    return x, y, nd


def _psi_unchecked(X, Y):
    """(sin t - t cos t) |x| |y| / pi, which equals phi * |x - y|^2; zero if x or y is 0."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    theta = angle_batch(X, Y)
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Y, axis=1)
    val = _sin_minus_t_cos(np.nan_to_num(theta)) / np.pi * nx * ny
    return np.where(np.isnan(theta), 0.0, val)


def phi(x, y) -> float:
    x, y, nd = _check_pair(x, y)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        return 0.0
    theta = _angle_between_units(x / nx, y / ny)
    return float(_sin_minus_t_cos(theta) / np.pi * (nx / nd) * (ny / nd))


def phi_batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise phi; NaN for coincident or near-coincident rows."""
    nd = np.linalg.norm(X - Y, axis=1)
    scale = np.maximum(np.linalg.norm(X, axis=1), np.linalg.norm(Y, axis=1))
    bad = (nd == 0.0) | (nd < NEAR_PAIR_RTOL * scale)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = _psi_unchecked(X, Y) / nd**2
    out[bad] = np.nan
    return out


def psi(x, y) -> float:
    x, y, nd = _check_pair(x, y)
    return float(_psi_unchecked(x, y)[0])


def expected_sq_distance(x, y) -> float:
    """E[(relu(<a,x>) - relu(<a,y>))^2] for a ~ N(0, I): |x - y|^2 / 2 - psi(x, y)."""
    x, y = as_vector(x), as_vector(y)
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if np.array_equal(x, y):
        return 0.0
    return float(0.5 * np.sum((x - y) ** 2) - _psi_unchecked(x, y)[0])


def expected_sq_distance_batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    out = 0.5 * np.sum((X - Y) ** 2, axis=1) - _psi_unchecked(X, Y)
    out[np.all(X == Y, axis=1)] = 0.0
    return out


def predicted_cos_angle(theta) -> float:
    """Predicted cosine between relu(Ax) and relu(Ay) for inputs at angle theta."""
    t = float(theta)
    if not (0.0 <= t <= np.pi):
        raise InputError(f"theta must lie in [0, pi], got {theta}")
    return float(np.cos(t) + _sin_minus_t_cos(t) / np.pi)


def predicted_cos_angle_batch(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.cos(theta) + _sin_minus_t_cos(theta) / np.pi


def smoothing_ramp(t, kind: str, param: float):
    """Piecewise-quadratic surrogates for the indicators used in the concentration arguments.

    ``tail_beta`` smooths 1{t >= beta} from below over [0.9 beta, beta];
    ``relaxed_alpha`` smooths 1{t >= -alpha} over [-1.1 alpha, -alpha];
    ``strict_alpha`` smooths 1{t >= 1.1 alpha} over [alpha, 1.1 alpha].
    Accepts scalars or arrays; values lie in [0, 1].
    """
    if kind not in RAMP_KINDS:
        raise InputError(f"unknown ramp kind {kind!r}; expected one of {RAMP_KINDS}")
    if not param > 0:
        raise InputError(f"ramp parameter must be positive, got {param}")
    t_arr = np.asarray(t, dtype=float)
    width = 0.1 * param
    if kind == "tail_beta":
        start, stop = 0.9 * param, param
    elif kind == "relaxed_alpha":
        start, stop = -1.1 * param, -param
    else:
        start, stop = param, 1.1 * param
    out = np.where(
        t_arr >= stop, 1.0, np.where(t_arr >= start, ((t_arr - start) / width) ** 2, 0.0)
    )
    return float(out) if np.ndim(t) == 0 else out


def ramp_root(t, kind: str, param: float):
    """sqrt of ``smoothing_ramp``: a piecewise-linear ramp with slope 1 / (0.1 param)."""
    return np.sqrt(smoothing_ramp(t, kind, param))
