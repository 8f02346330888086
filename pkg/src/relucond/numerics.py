"""Small dense numerics and seeded randomness shared by every other module.

Random streams are addressed by ``(seed, stream_id)`` where ``stream_id`` is a
tuple path. Each path maps to an independent PCG64 stream through numpy's
``SeedSequence`` spawn keys, so a computation partitioned into chunks can give
every chunk its own stream and stay bit-identical however the chunks are
scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream_id: tuple[int, ...] = ()

    def __post_init__(self):
        if not (0 <= int(self.seed) < _SEED_LIMIT):
            raise InputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if any(int(s) < 0 for s in self.stream_id):
            raise InputError(f"stream ids must be nonnegative, got {self.stream_id}")

    def spawn(self, *ids: int) -> "RngSeed":
        """Child stream; ``spawn(a).spawn(b) == spawn(a, b)``."""
        return RngSeed(self.seed, self.stream_id + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.stream_id)
        return np.random.Generator(np.random.PCG64(ss))


SeedLike = Union[int, RngSeed]


def as_seed(seed: SeedLike) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    if isinstance(seed, (bool, float)) or seed is None:
        raise InputError(f"seed must be an integer, got {seed!r}")
    return RngSeed(int(seed))


def as_matrix(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise InputError(f"{name} must be a nonempty 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} has non-finite entries")
    return A


def as_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.ndim != 1 or x.size < 1:
        raise InputError(f"{name} must be a nonempty 1-d array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} has non-finite entries")
    return x


def gaussian_matrix(m: int, n: int, seed: SeedLike) -> np.ndarray:
    """m x n matrix of i.i.d. standard normals drawn from ``seed``."""
    if m < 1 or n < 1:
        raise InputError(f"dimensions must be positive, got {m}x{n}")
    return as_seed(seed).generator().standard_normal((m, n))


def sphere_points(count: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform points on the unit sphere in R^n, one per row.

    Rows whose Gaussian draw is exactly zero are redrawn.
    """
    X = rng.standard_normal((count, n))
    norms = np.linalg.norm(X, axis=1)
    bad = norms == 0.0
    while np.any(bad):
        X[bad] = rng.standard_normal((int(bad.sum()), n))
        norms[bad] = np.linalg.norm(X[bad], axis=1)
        bad = norms == 0.0
    return X / norms[:, None]


def sample_unit_sphere(n: int, seed: SeedLike) -> np.ndarray:
    if n < 1:
        raise InputError(f"dimension must be positive, got {n}")
    return sphere_points(1, n, as_seed(seed).generator())[0]


def rank_tol(s: np.ndarray, shape: tuple[int, int]) -> float:
    """numpy's matrix_rank threshold for singular values ``s`` of a matrix of ``shape``."""
    if s.size == 0:
        return 0.0
    return float(s[0]) * max(shape) * np.finfo(float).eps


def padded_sigma_min(A: np.ndarray) -> float:
    """n-th largest singular value of A (m x n); zero when rank(A) < n."""
    m, n = A.shape
    if m < n:
        return 0.0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0.0 or s[n - 1] <= rank_tol(s, A.shape):
        return 0.0
    return float(s[n - 1])


def singular_extremes(A) -> tuple[float, float]:
    """Largest singular value and the n-padded smallest singular value of A.

    The second value treats A as a map R^n -> R^m, so it is exactly zero
    whenever A is rank deficient (in particular whenever m < n).
    """
    A = as_matrix(A)
    m, n = A.shape
    s = np.linalg.svd(A, compute_uv=False)
    sigma_max = float(s[0])
    if m < n or sigma_max == 0.0 or s[n - 1] <= rank_tol(s, A.shape):
        return sigma_max, 0.0
    return sigma_max, float(s[n - 1])


@dataclass
class Moments:
    """Count, mean and centred sum of squares; merged in a fixed order (Chan et al.)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls()
        mu = float(values.mean())
        return cls(int(values.size), mu, float(np.sum((values - mu) ** 2)))

    @classmethod
    def of_columns(cls, V: np.ndarray) -> "Moments":
        """Column-wise moments of a 2-d array; mean and m2 are arrays."""
        V = np.asarray(V, dtype=float)
        mu = V.mean(axis=0)
        return cls(int(V.shape[0]), mu, np.sum((V - mu) ** 2, axis=0))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def se(self):
        if self.count == 0:
            return float("nan")
        out = np.sqrt(self.variance / self.count)
        return float(out) if np.ndim(out) == 0 else out


def ordered_map(fn, items, workers: int = 1) -> list:
    """``[fn(i) for i in items]``, optionally on a thread pool; results keep input order.

    Callers give every item its own random stream, so the output never
    depends on ``workers``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, items))


def chunk_bounds(total: int, chunk: int) -> list[tuple[int, int, int]]:
    """``(index, start, stop)`` for consecutive chunks covering ``range(total)``."""
    return [(k, s, min(s + chunk, total)) for k, s in enumerate(range(0, total, chunk))]
