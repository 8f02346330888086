import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relucond.errors import InputError
from relucond.numerics import (
    Moments,
    RngSeed,
    chunk_bounds,
    gaussian_matrix,
    ordered_map,
    sample_unit_sphere,
    singular_extremes,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
matrices = st.tuples(st.integers(1, 6), st.integers(1, 4)).flatmap(
    lambda s: arrays(np.float64, s, elements=finite)
)


def test_gaussian_matrix_is_deterministic():
    assert np.array_equal(gaussian_matrix(2, 2, 5), gaussian_matrix(2, 2, 5))
    assert not np.array_equal(gaussian_matrix(2, 2, 5), gaussian_matrix(2, 2, 6))


def test_substreams_are_distinct_and_reproducible():
    s = RngSeed(3)
    a = gaussian_matrix(4, 4, s.spawn(1))
    assert np.array_equal(a, gaussian_matrix(4, 4, RngSeed(3, (1,))))
    assert not np.array_equal(a, gaussian_matrix(4, 4, s.spawn(2)))
    assert s.spawn(1).spawn(2) == s.spawn(1, 2)


def test_gaussian_matrix_moments():
    x = gaussian_matrix(1000, 1, 11).ravel()
    assert abs(x.mean()) <= 4 / np.sqrt(1000)
    assert 0.85 <= x.var(ddof=1) <= 1.15


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, None])
def test_seed_validation(bad):
    with pytest.raises(InputError):
        gaussian_matrix(2, 2, bad)


def test_unit_sphere_n1():
    for s in range(20):
        assert sample_unit_sphere(1, s)[0] in (-1.0, 1.0)


def test_unit_sphere_norm():
    for s in range(20):
        assert abs(np.linalg.norm(sample_unit_sphere(3, s)) - 1) <= 1e-12


def test_unit_sphere_symmetry():
    from relucond.numerics import sphere_points

    X = sphere_points(100_000, 2, RngSeed(4).generator())
    assert abs(X[:, 0].mean()) <= 4 / np.sqrt(2 * 100_000)


def test_singular_extremes_examples():
    assert singular_extremes(np.eye(2)) == pytest.approx((1, 1))
    assert singular_extremes([[1, 0]]) == (1.0, 0.0)
    assert singular_extremes([[3, 0], [0, 4]]) == pytest.approx((4, 3))


def test_singular_extremes_rank_deficient():
    assert singular_extremes([[1, 1], [2, 2], [3, 3]])[1] == 0.0


def test_singular_extremes_rejects_nonfinite():
    with pytest.raises(InputError):
        singular_extremes([[np.nan, 0]])


@given(matrices, st.randoms(use_true_random=False))
def test_singular_extremes_row_permutation(A, rnd):
    perm = list(range(A.shape[0]))
    rnd.shuffle(perm)
    a = singular_extremes(A)
    b = singular_extremes(A[perm])
    scale = max(a[0], 1.0)
    assert abs(a[0] - b[0]) <= 1e-10 * scale
    assert abs(a[1] - b[1]) <= 1e-10 * scale


@given(matrices, st.floats(1e-3, 1e3))
def test_sigma_max_homogeneous(A, c):
    a, _ = singular_extremes(A)
    b, _ = singular_extremes(c * A)
    assert abs(b - c * a) <= 1e-10 * max(c * a, 1e-300)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.integers(1, 49))
def test_moments_merge_matches_direct(values, cut):
    v = np.array(values)
    cut = min(cut, len(v))
    merged = Moments.of(v[:cut]).merge(Moments.of(v[cut:]))
    direct = Moments.of(v)
    assert merged.count == direct.count
    assert merged.mean == pytest.approx(direct.mean, abs=1e-9)
    assert merged.m2 == pytest.approx(direct.m2, rel=1e-9, abs=1e-6)


def test_ordered_map_keeps_order():
    items = list(range(50))
    assert ordered_map(lambda i: i * i, items, workers=4) == [i * i for i in items]


def test_chunk_bounds_cover():
    b = chunk_bounds(10, 4)
    assert b == [(0, 0, 4), (1, 4, 8), (2, 8, 10)]
