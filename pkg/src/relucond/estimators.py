"""Sampling-based brackets on the bi-Lipschitz constants of a ReLU layer.

Every number produced here is a witness-backed one-sided bound: a sampled
ratio is a lower bound on U and an upper bound on L, so U_lo / L_hi is a
certified lower bound on the condition number beta = U / L.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DegeneratePairError, InputError
from .geometry import LayerMap, blocked_image_distances, pair_ratios, pairwise_ratio, relu
from .numerics import (
    RngSeed,
    SeedLike,
    as_matrix,
    as_seed,
    as_vector,
    chunk_bounds,
    ordered_map,
    sphere_points,
)

SQRT2 = math.sqrt(2.0)
# L_hi below this is treated as a collapsed region: beta_lo is reported as infinite.
COLLAPSE_TOL = 1e-13
NEAR_EPS = 1e-3
PAIR_CHUNK = 4096
# Index i of a sampled pair selects its kind via _MIXTURE[i % len(_MIXTURE)].
_MIXTURE = ("sphere", "sphere", "antipodal", "near", "zero")


@dataclass
class BiLipBracket:
    U_lo: float
    L_hi: float
    U_hi: Optional[float] = None
    L_lo: Optional[float] = None
    sample_count: int = 0
    seed: Optional[RngSeed] = None
    witness_max: Optional[tuple] = field(default=None, repr=False)
    witness_min: Optional[tuple] = field(default=None, repr=False)

    @property
    def collapsed(self) -> bool:
        return self.L_hi < COLLAPSE_TOL

    @property
    def beta_lo(self) -> float:
        if self.collapsed:
            return math.inf
        return self.U_lo / self.L_hi

    @property
    def beta_hi(self) -> Optional[float]:
        """U_hi / L_lo when both theory-side bounds are known."""
        if self.U_hi is None or self.L_lo is None:
            return None
        return math.inf if self.L_lo <= 0 else self.U_hi / self.L_lo

    def to_dict(self) -> dict:
        out = {
            "U_lo": self.U_lo,
            "L_hi": self.L_hi,
            "U_hi": self.U_hi,
            "L_lo": self.L_lo,
            "beta_lo": self.beta_lo,
            "collapsed": self.collapsed,
            "sample_count": self.sample_count,
        }
        if self.seed is not None:
            out["seed"] = {"seed": self.seed.seed, "stream_id": list(self.seed.stream_id)}
        for key in ("witness_max", "witness_min"):
            w = getattr(self, key)
            if w is not None:
                out[key] = {"x": np.asarray(w[0]).tolist(), "y": np.asarray(w[1]).tolist()}
        return out

_KIND_CODE = {"sphere": 0, "antipodal": 1, "near": 2, "zero": 3}


def _pair_kinds(start: int, stop: int, include_structured: bool) -> np.ndarray:
    if not include_structured:
        return np.zeros(stop - start, dtype=np.int8)
    idx = np.arange(start, stop) % len(_MIXTURE)
    codes = np.array([_KIND_CODE[k] for k in _MIXTURE], dtype=np.int8)
    return codes[idx]


def _draw_chunk(n: int, start: int, stop: int, seed: RngSeed, include_structured: bool):
    """Pairs ``start..stop-1``; each chunk draws a full PAIR_CHUNK block so prefixes are stable."""
    rng = seed.generator()
    X = sphere_points(PAIR_CHUNK, n, rng)[: stop - start]
    Y = sphere_points(PAIR_CHUNK, n, rng)[: stop - start]
    if include_structured:
        U = sphere_points(PAIR_CHUNK, n, rng)[: stop - start]
        kinds = _pair_kinds(start, stop, True)
        Y[kinds == 1] = -X[kinds == 1]
        near = kinds == 2
        Y[near] = X[near] + NEAR_EPS * U[near]
        Y[kinds == 3] = 0.0
    return X, Y


def _chunk_extremes(layer: LayerMap, X: np.ndarray, Y: np.ndarray):
    num = blocked_image_distances(layer.A, layer.b, X, Y)
    den = np.linalg.norm(X - Y, axis=1)
    ok = den > 0
    r = np.full(X.shape[0], np.nan)
    r[ok] = num[ok] / (math.sqrt(layer.m) * den[ok])
    valid = int(ok.sum())
    if valid == 0:
        return (-math.inf, -1), (math.inf, -1), 0
    i_hi = int(np.nanargmax(r))
    i_lo = int(np.nanargmin(r))
    return (float(r[i_hi]), i_hi), (float(r[i_lo]), i_lo), valid


def sampled_bilip(
    layer: LayerMap,
    pair_count: int,
    seed: SeedLike,
    include_structured: bool = True,
    workers: int = 1,
    U_hi: Optional[float] = None,
    L_lo: Optional[float] = None,
) -> BiLipBracket:
    """Extreme pairwise ratios over a seeded pair sample.

    With ``include_structured`` pair i is sphere x sphere, antipodal (x, -x),
    near-coincident (x, x + 1e-3 u) or (x, 0) according to ``i mod 5``
    (weights 40/20/20/20); otherwise every pair is sphere x sphere. Chunk k
    of the sample uses substream ``seed.spawn(k)``, so the result does not
    depend on ``workers`` and a longer sample extends a shorter one.
    """
    if not isinstance(layer, LayerMap):
        layer = LayerMap(layer)
    if pair_count < 1:
        raise InputError(f"pair_count must be positive, got {pair_count}")
    seed = as_seed(seed)
    n = layer.n

    def run(chunk):
        k, start, stop = chunk
        X, Y = _draw_chunk(n, start, stop, seed.spawn(k), include_structured)
        hi, lo, valid = _chunk_extremes(layer, X, Y)
        w_hi = (X[hi[1]], Y[hi[1]]) if hi[1] >= 0 else None
        w_lo = (X[lo[1]], Y[lo[1]]) if lo[1] >= 0 else None
        return hi[0], w_hi, lo[0], w_lo, valid

    results = ordered_map(run, chunk_bounds(pair_count, PAIR_CHUNK), workers)
    U_lo, L_hi = -math.inf, math.inf
    w_max = w_min = None
    total = 0
    for hi, w_hi, lo, w_lo, valid in results:
        total += valid
        if hi > U_lo:
            U_lo, w_max = hi, w_hi
        if lo < L_hi:
            L_hi, w_min = lo, w_lo
    if total == 0:
        raise DegeneratePairError("every sampled pair was degenerate")
    if U_hi is None:
        U_hi = float(np.linalg.norm(layer.A, 2) / math.sqrt(layer.m))
    return BiLipBracket(
        U_lo=U_lo,
        L_hi=L_hi,
        U_hi=U_hi,
        L_lo=L_lo,
        sample_count=total,
        seed=seed,
        witness_max=w_max,
        witness_min=w_min,
    )


def refine_extreme(layer: LayerMap, x, y, direction: str, iters: int = 40):
    """Coordinate search on (x, y) that only ever accepts improving moves.

    Returns ``(x, y, ratio)``; with ``iters=0`` the inputs come back unchanged.
    """
    if direction not in ("min", "max"):
        raise InputError(f"direction must be 'min' or 'max', got {direction!r}")
    if not isinstance(layer, LayerMap):
        layer = LayerMap(layer)
    x, y = as_vector(x).copy(), as_vector(y).copy()
    best = pairwise_ratio(layer, x, y)
    if iters <= 0:
        return x, y, best
    better = (lambda v: v > best) if direction == "max" else (lambda v: v < best)
    z = np.concatenate([x, y])
    n = x.shape[0]
    step = 0.1 * max(float(np.max(np.abs(z))), 1e-12)
    for _ in range(iters):
        improved = False
        for i in range(2 * n):
            for sgn in (1.0, -1.0):
                cand = z.copy()
                cand[i] += sgn * step
                try:
                    val = pairwise_ratio(layer, cand[:n], cand[n:])
                except DegeneratePairError:
                    continue
                if better(val):
                    z, best, improved = cand, val, True
                    break
        if not improved:
            step *= 0.5
    return z[:n], z[n:], best


@dataclass
class Sqrt2Certificate:
    probe: np.ndarray
    r_plus: float
    r_minus: float
    U_lb: float
    L_ub: float
    cert_ratio: float
    probe_count: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["probe"] = np.asarray(self.probe).tolist()
        return out


def sqrt2_certificate(A, probe_count: int, seed: SeedLike) -> Sqrt2Certificate:
    """Witness-backed lower bound U_lb / L_ub on the condition number of x -> relu(Ax).

    U_lb is the largest |relu(Ax)| / sqrt(m) over the probes and their
    negations (ratios of (x, 0) pairs). L_ub is the ratio of the antipodal
    pair (x2, -x2) at the probe x2 with the smallest such value; because
    relu(A x2) and relu(-A x2) are orthogonal, L_ub^2 = (r_plus^2 + r_minus^2) / 4,
    which forces U_lb / L_ub >= sqrt(2).
    """
    A = as_matrix(A)
    if probe_count < 1:
        raise InputError(f"probe_count must be positive, got {probe_count}")
    if not np.any(A):
        raise InputError("the certificate is undefined for the zero matrix")
    m, n = A.shape
    P = sphere_points(probe_count, n, as_seed(seed).generator())
    P = np.vstack([P, -P])
    r = np.linalg.norm(relu(P @ A.T), axis=1) / math.sqrt(m)
    i = int(np.argmin(r))
    x2 = P[i]
    j = i + probe_count if i < probe_count else i - probe_count
    r_plus, r_minus = float(r[i]), float(r[j])
    U_lb = float(r.max())
    L_ub = math.sqrt((r_plus**2 + r_minus**2) / 4.0)
    cert = math.inf if L_ub == 0.0 else U_lb / L_ub
    return Sqrt2Certificate(x2, r_plus, r_minus, U_lb, L_ub, cert, probe_count)


def scale_invariance_check(layer: LayerMap, c: float, pairs) -> dict:
    """Compare ratios and beta_lo of ``layer`` and ``layer.scaled(c)`` on the same pairs."""
    if not c > 0:
        raise InputError(f"scale factor must be positive, got {c}")
    if not isinstance(layer, LayerMap):
        layer = LayerMap(layer)
    X, Y = pairs
    X, Y = np.atleast_2d(np.asarray(X, float)), np.atleast_2d(np.asarray(Y, float))
    scaled = layer.scaled(c)
    r0 = pair_ratios(layer.A, layer.b, X, Y)
    r1 = pair_ratios(scaled.A, scaled.b, X, Y)
    ok = ~np.isnan(r0) & (r0 > 0)
    dev = np.abs(r1[ok] - c * r0[ok]) / (c * r0[ok])
    max_dev = float(dev.max()) if dev.size else 0.0
    beta0 = float(np.nanmax(r0) / np.nanmin(r0)) if np.nanmin(r0) > 0 else math.inf
    beta1 = float(np.nanmax(r1) / np.nanmin(r1)) if np.nanmin(r1) > 0 else math.inf
    if math.isinf(beta0) or math.isinf(beta1):
        beta_dev = 0.0 if beta0 == beta1 else math.inf
    else:
        beta_dev = abs(beta1 - beta0) / beta0
    return {
        "c": c,
        "pairs": int(X.shape[0]),
        "max_ratio_rel_dev": max_dev,
        "beta_lo": beta0,
        "beta_lo_scaled": beta1,
        "beta_rel_dev": beta_dev,
        "passed": max_dev <= 1e-12 and beta_dev <= 1e-12,
    }
