"""Exact analysis of x -> relu(Ax) for small layers (b = 0).

The map is linear on every open cell of the central hyperplane arrangement
{<a_j, x> = 0}, with Jacobian D_S A where S is the set of active rows. Cells
are enumerated recursively: each cell of an essential central arrangement has
an extreme ray on some intersection line d, and the cells touching d are in
bijection with the cells of the lower-dimensional arrangement formed by the
hyperplanes through d, viewed inside the orthogonal complement of d.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateArrangementWarning, InputError, NumericalError
from .estimators import BiLipBracket
from .geometry import relu
from .numerics import as_matrix, padded_sigma_min, singular_extremes

MAX_ROWS = 24
MAX_COLS = 4
PATTERN_TOL = 1e-9
PARALLEL_TOL = 1e-10
# Hyperplanes within this (unit-normal) distance of a line are taken to contain it.
_ON_LINE_TOL = 1e-10
# Witnesses with a smaller margin are re-centred by a small LP.
_POLISH_BELOW = 1e-6


@dataclass(frozen=True)
class ActivationPattern:
    """Rows active (strictly positive) on one open cell, with a point inside it.

    Row indices are 0-based. ``margin`` is min_j |<a_j, w>| / |a_j| over the
    nonzero rows, with ``w`` normalized to unit length.
    """

    active: frozenset
    witness: np.ndarray
    margin: float

    @property
    def bitmask(self) -> int:
        return sum(1 << j for j in self.active)

    def __len__(self) -> int:
        return len(self.active)


def _check_limits(A: np.ndarray) -> None:
    m, n = A.shape
    if n > MAX_COLS or m > MAX_ROWS:
        raise InputError(
            f"exact analysis is limited to m <= {MAX_ROWS}, n <= {MAX_COLS}; got {m}x{n}"
        )


def distinct_hyperplanes(A: np.ndarray) -> tuple[np.ndarray, list[list[int]]]:
    """Unit normals of the distinct hyperplanes {<a_j, x> = 0} and the rows on each.

    Zero rows define no hyperplane and are dropped. Parallel and antiparallel
    rows share a hyperplane.
    """
    norms = np.linalg.norm(A, axis=1)
    normals: list[np.ndarray] = []
    groups: list[list[int]] = []
    for j in np.flatnonzero(norms > 0):
        u = A[j] / norms[j]
        for k, c in enumerate(normals):
            if min(np.linalg.norm(u - c), np.linalg.norm(u + c)) <= PARALLEL_TOL:
                groups[k].append(int(j))
                break
        else:
            normals.append(u)
            groups.append([int(j)])
    n = A.shape[1]
    H = np.array(normals) if normals else np.zeros((0, n))
    return H, groups


def _orth_complement(d: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the complement of unit vector d."""
    _, _, vt = np.linalg.svd(d[None, :])
    return vt[1:]


def _line_key(d: np.ndarray) -> tuple:
    # canonical orientation so that d and -d share a key
    k = int(np.argmax(np.abs(d)))
    d = d if d[k] > 0 else -d
    return tuple(np.round(d, 9))


def _cell_witnesses(H: np.ndarray, dim: int) -> np.ndarray:
    """Points (rows) covering every open cell of the central arrangement with unit normals H.

    Several rows may land in the same cell; callers deduplicate by sign pattern.
    """
    if H.shape[0] == 0:
        e = np.zeros((1, dim))
        e[0, 0] = 1.0
        return e
    _, s, vt = np.linalg.svd(H)
    rank = int(np.sum(s > s[0] * 1e-10))
    if rank < dim:
        # non-essential: the common intersection is a lineality space; work in its complement
        Q = vt[:rank]
        Hq = H @ Q.T
        Hq /= np.linalg.norm(Hq, axis=1)[:, None]
        return _cell_witnesses(Hq, rank) @ Q
    if dim == 1:
        return np.array([[1.0], [-1.0]])

    lines: dict[tuple, np.ndarray] = {}
    for subset in itertools.combinations(range(H.shape[0]), dim - 1):
        _, s_sub, vt_sub = np.linalg.svd(H[list(subset)])
        if s_sub[-1] <= 1e-10:
            continue
        d = vt_sub[-1]
        lines.setdefault(_line_key(d), d)

    out = []
    for d in lines.values():
        dots = H @ d
        on = np.abs(dots) <= _ON_LINE_TOL
        off = ~on
        eps = 0.5 * float(np.min(np.abs(dots[off]))) if np.any(off) else 1.0
        B = _orth_complement(d)
        local = H[on] @ B.T
        local /= np.linalg.norm(local, axis=1)[:, None]
        W = _cell_witnesses(local, dim - 1) @ B
        W /= np.linalg.norm(W, axis=1)[:, None]
        out.append(d + eps * W)
        out.append(-d + eps * W)
    return np.vstack(out)


def _polish(A_unit: np.ndarray, signs: np.ndarray) -> tuple[np.ndarray, float]:
    """Point of the cell {signs_j <a_j, w> > 0} with maximal margin inside the unit box."""
    k, n = A_unit.shape
    # variables (w, t); maximize t subject to -signs_j <a_j, w> + t <= 0
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-signs[:, None] * A_unit, np.ones((k, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(k),
        bounds=[(-1.0, 1.0)] * n + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0:
        raise NumericalError(f"witness LP failed: {res.message}")
    w = res.x[:n]
    return w / np.linalg.norm(w), float(res.x[-1]) / float(np.linalg.norm(w))


def enumerate_cells(A, pattern_tol: float = PATTERN_TOL) -> list[ActivationPattern]:
    """Every activation pattern realized on an open cell of {<a_j, x> = 0}.

    Patterns are returned sorted by bitmask. Zero rows are never active.
    Each pattern carries a unit witness whose margin is at least
    ``pattern_tol`` on every nonzero row (a warning is raised for cells too
    thin to certify at that margin).
    """
    A = as_matrix(A)
    _check_limits(A)
    m, n = A.shape
    H, groups = distinct_hyperplanes(A)
    if n >= 2 and any(len(g) > 1 for g in groups):
        dup = [g for g in groups if len(g) > 1]
        warnings.warn(
            f"rows {dup} are parallel and share a hyperplane; deduplicated",
            DegenerateArrangementWarning,
            stacklevel=2,
        )

    norms = np.linalg.norm(A, axis=1)
    nz = norms > 0
    A_unit = A[nz] / norms[nz, None]
    rows = np.flatnonzero(nz)

    W = _cell_witnesses(H, n)
    W = np.vstack([W, -W])
    W /= np.linalg.norm(W, axis=1)[:, None]
    dots = W @ A_unit.T
    margins = np.min(np.abs(dots), axis=1) if rows.size else np.ones(W.shape[0])
    keys = (dots > 0).astype(np.int64) @ (np.int64(1) << rows.astype(np.int64))
    keep = margins > 0
    W, dots, margins, keys = W[keep], dots[keep], margins[keep], keys[keep]

    # best-margin witness per sign pattern
    order = np.lexsort((-margins, keys))
    first = np.ones(order.size, dtype=bool)
    first[1:] = keys[order][1:] != keys[order][:-1]
    found: dict[int, ActivationPattern] = {}
    for i in order[first]:
        w, margin = W[i], float(margins[i])
        if margin < _POLISH_BELOW:
            w, margin = _polish(A_unit, np.sign(dots[i]))
        active = frozenset(int(j) for j in rows[dots[i] > 0])
        found[int(keys[i])] = ActivationPattern(active, w, margin)

    patterns = [found[k] for k in sorted(found)]
    thin = [p for p in patterns if p.margin < pattern_tol]
    if thin:
        warnings.warn(
            f"{len(thin)} cells have witness margin below {pattern_tol:g}",
            DegenerateArrangementWarning,
            stacklevel=2,
        )
    expected = _closed_form_cell_count(H, n)
    if expected is not None and len(patterns) != expected:
        raise NumericalError(
            f"cell enumeration found {len(patterns)} cells, expected {expected}"
        )
    return patterns


def _closed_form_cell_count(H: np.ndarray, n: int):
    """Cell count when it is known in closed form: n <= 2, or no hyperplanes at all."""
    k = H.shape[0]
    if k == 0:
        return 1
    if n == 1:
        return 2
    if n == 2:
        return 2 * k
    return None


def lambda_details(A) -> tuple[float, bool, frozenset]:
    """(lambda(A), whether an empty cell exists, a minimizing pattern)."""
    A = as_matrix(A)
    patterns = enumerate_cells(A)
    has_empty = any(len(p) == 0 for p in patterns)
    best, arg = math.inf, frozenset()
    for p in patterns:
        if len(p) == 0:
            continue
        val = padded_sigma_min(A[sorted(p.active)])
        if val < best:
            best, arg = val, p.active
    if best is math.inf:
        best = 0.0
    return best, has_empty, arg


def lambda_of_A(A) -> float:
    """Minimum over nonempty realizable patterns S of the n-padded sigma_min(A_S)."""
    return lambda_details(A)[0]


def exact_upper_lipschitz(A) -> float:
    """U_{A,0} = max over cells of sigma_max(A_S) / sqrt(m)."""
    A = as_matrix(A)
    best = 0.0
    for p in enumerate_cells(A):
        if len(p):
            best = max(best, float(np.linalg.norm(A[sorted(p.active)], 2)))
    return best / math.sqrt(A.shape[0])


@dataclass
class BoundsReport:
    """Quantities from the related literature for a layer with b = 0.

    ``lambda_max`` is the largest singular value of A and ``lambda_A`` is
    lambda(A). Two readings of the literature lower bound on L are reported
    because their normalizations disagree: ``L_lower_reading1`` is
    sqrt(lambda_A / (2m)) and ``L_bracket_reading2`` is
    (sqrt(lambda_A) / 2, sqrt(lambda_A)). Under A -> cA the singular values
    scale by c, the readings by sqrt(c), and ``beta_upper`` is unchanged.
    """

    m: int
    n: int
    lambda_max: float
    lambda_A: float
    L_lower_reading1: float
    L_bracket_reading2: tuple[float, float]
    beta_upper: float
    has_empty_cell: bool
    U_exact: float

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "lambda_max": self.lambda_max,
            "lambda_A": self.lambda_A,
            "L_lower_reading1": self.L_lower_reading1,
            "L_bracket_reading2": list(self.L_bracket_reading2),
            "beta_upper": self.beta_upper,
            "has_empty_cell": self.has_empty_cell,
            "U_exact": self.U_exact,
        }


def related_bounds(A) -> BoundsReport:
    A = as_matrix(A)
    m, n = A.shape
    lam_max, _ = singular_extremes(A)
    lam, has_empty, _ = lambda_details(A)
    beta_upper = math.inf if lam == 0.0 else 2.0 * math.sqrt(lam_max / lam)
    return BoundsReport(
        m=m,
        n=n,
        lambda_max=lam_max,
        lambda_A=lam,
        L_lower_reading1=math.sqrt(lam / (2 * m)),
        L_bracket_reading2=(0.5 * math.sqrt(lam), math.sqrt(lam)),
        beta_upper=beta_upper,
        has_empty_cell=has_empty,
        U_exact=exact_upper_lipschitz(A),
    )


# ---------------------------------------------------------------------------
# brute-force oracle for n <= 2


def _points(params: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map oracle parameters to (x, y) pairs, one per row.

    n = 1: params (sx, y) with x = sx in {-1, 1}, y in [-1, 1].
    n = 2: params (tx, ty, r) with x = (cos tx, sin tx), y = r (cos ty, sin ty).
    """
    if n == 1:
        return params[:, :1], params[:, 1:2]
    X = np.column_stack([np.cos(params[:, 0]), np.sin(params[:, 0])])
    Y = params[:, 2:3] * np.column_stack([np.cos(params[:, 1]), np.sin(params[:, 1])])
    return X, Y


def _oracle_ratio(A: np.ndarray, params: np.ndarray, n: int) -> np.ndarray:
    X, Y = _points(np.atleast_2d(params), n)
    return _ratios_b0(A, X, Y)


def _ratios_b0(A, X, Y):
    FX = relu(X @ A.T)
    FY = relu(Y @ A.T)
    m = A.shape[0]
    num = np.linalg.norm(FX - FY, axis=1)
    den = np.linalg.norm(X - Y, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / (math.sqrt(m) * den)
    r[~(den > 1e-12)] = np.nan
    return r


def _clip_params(p: np.ndarray, n: int) -> np.ndarray:
    p = p.copy()
    if n == 1:
        p[1] = min(max(p[1], -1.0), 1.0)
    else:
        p[2] = min(max(p[2], 0.0), 1.0)
    return p


def _descend(A, p0, steps, n, sense, iters):
    """Coordinate search on oracle parameters; steps halve after a failed sweep."""
    p = np.array(p0, dtype=float)
    best = _oracle_ratio(A, p, n)[0]
    steps = np.array(steps, dtype=float)
    free = [1] if n == 1 else [0, 1, 2]
    for _ in range(iters):
        improved = False
        for i in free:
            for direction in (1.0, -1.0):
                q = p.copy()
                q[i] += direction * steps[i]
                q = _clip_params(q, n)
                val = _oracle_ratio(A, q, n)[0]
                if np.isnan(val):
                    continue
                if (val > best) if sense > 0 else (val < best):
                    p, best, improved = q, val, True
                    break
        if not improved:
            steps *= 0.5
    return p, float(best)


def brute_force_bilip(
    A,
    resolution: int = 4096,
    refine_iters: int = 40,
    max_grid: int = 1024,
    starts: int = 8,
) -> BiLipBracket:
    """Grid-plus-refinement oracle for L_{A,0} and U_{A,0} when n <= 2.

    By positive homogeneity it suffices to take x on the unit sphere and y
    in the unit ball. For n = 1 the y grid has ``resolution`` points. For
    n = 2 the pair grid is x at ``resolution`` angles times y at
    ``resolution`` angles and ``resolution // 10`` radii, with each angular
    count capped at ``max_grid`` (radii at max_grid // 32) to keep the
    product tractable; the best ``starts`` grid pairs for each extreme are
    then refined by coordinate search. The returned bracket carries the
    exact U from the cell enumeration as ``U_hi``.
    """
    A = as_matrix(A)
    m, n = A.shape
    if n > 2:
        raise InputError(f"brute-force oracle supports n <= 2, got n = {n}")
    if resolution < 2:
        raise InputError("resolution must be at least 2")

    if n == 1:
        ys = np.linspace(-1.0, 1.0, resolution)
        params = np.array([(sx, y) for sx in (1.0, -1.0) for y in ys])
        steps = np.array([0.0, 2.0 / (resolution - 1)])
        ratios = _oracle_ratio(A, params, n)
    else:
        n_x = min(resolution, max_grid)
        n_ty = min(resolution, max_grid // 2)
        n_r = max(1, min(resolution // 10, max_grid // 32))
        tx = 2 * np.pi * np.arange(n_x) / n_x
        ty = 2 * np.pi * np.arange(n_ty) / n_ty
        rs = np.arange(1, n_r + 1) / n_r
        Yp = np.array([(t, r) for t in ty for r in rs] + [(0.0, 0.0)])
        X = np.column_stack([np.cos(tx), np.sin(tx)])
        Y = Yp[:, 1:2] * np.column_stack([np.cos(Yp[:, 0]), np.sin(Yp[:, 0])])
        ratios, params = _grid_ratios(A, X, Y, tx, Yp)
        steps = np.array([2 * np.pi / n_x, 2 * np.pi / n_ty, 1.0 / n_r])

    ok = np.flatnonzero(~np.isnan(ratios))
    vals = ratios[ok]
    k = min(starts, ok.size)
    top = ok[np.argpartition(-vals, k - 1)[:k]]
    bottom = ok[np.argpartition(vals, k - 1)[:k]]
    best_max = (None, -math.inf)
    best_min = (None, math.inf)
    for idx in top:
        p, v = _descend(A, params[idx], steps, n, +1, refine_iters)
        if v > best_max[1]:
            best_max = (p, v)
    for idx in bottom:
        p, v = _descend(A, params[idx], steps, n, -1, refine_iters)
        if v < best_min[1]:
            best_min = (p, v)

    xs, ys_ = _points(np.vstack([best_max[0], best_min[0]]), n)
    return BiLipBracket(
        U_lo=best_max[1],
        L_hi=best_min[1],
        U_hi=exact_upper_lipschitz(A),
        sample_count=int(ok.size),
        witness_max=(xs[0], ys_[0]),
        witness_min=(xs[1], ys_[1]),
    )


def _grid_ratios(A, X, Y, tx, Yp, block: int = 64):
    """All pairwise ratios between x-grid and y-grid via Gram matrices, block by block.

    The Gram identity loses accuracy for nearly coincident pairs; the grid
    only seeds the refinement, which re-evaluates ratios directly.
    """
    m = A.shape[0]
    FX = relu(X @ A.T)
    FY = relu(Y @ A.T)
    fy2 = np.sum(FY**2, axis=1)
    y2 = np.sum(Y**2, axis=1)
    out = np.empty((X.shape[0], Y.shape[0]))
    for s in range(0, X.shape[0], block):
        fx = FX[s : s + block]
        x = X[s : s + block]
        num = np.sum(fx**2, axis=1)[:, None] + fy2[None, :] - 2.0 * fx @ FY.T
        den = np.sum(x**2, axis=1)[:, None] + y2[None, :] - 2.0 * x @ Y.T
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.sqrt(np.maximum(num, 0.0) / (m * den))
        r[den <= 1e-10] = np.nan
        out[s : s + block] = r
    ii, jj = np.meshgrid(np.arange(X.shape[0]), np.arange(Y.shape[0]), indexing="ij")
    params = np.column_stack([tx[ii.ravel()], Yp[jj.ravel(), 0], Yp[jj.ravel(), 1]])
    return out.ravel(), params


def bound_readings_check(A, resolution: int = 4096) -> dict:
    """Confront both literature readings of the lower bound on L with the n <= 2 oracle.

    The oracle's L_hi is an upper bound on L, so a claimed lower bound above
    it is refuted. Readings are also evaluated with lambda taken as an
    eigenvalue of A_S^T A_S (the squared singular value) for comparison.
    """
    A = as_matrix(A)
    m = A.shape[0]
    rep = related_bounds(A)
    oracle = brute_force_bilip(A, resolution=resolution)
    lam = rep.lambda_A
    slack = 1e-6 * max(oracle.L_hi, 1e-300)
    claims = {
        "reading1": rep.L_lower_reading1,
        "reading2": rep.L_bracket_reading2[0],
        "reading1_squared": math.sqrt(lam**2 / (2 * m)),
        "reading2_squared_normalized": 0.5 * lam / math.sqrt(m),
    }
    return {
        "L_hi": oracle.L_hi,
        "U_exact": oracle.U_hi,
        "lambda_A": lam,
        "claims": claims,
        "refuted": {k: v > oracle.L_hi + slack for k, v in claims.items()},
    }
