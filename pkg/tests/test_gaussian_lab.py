import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from relucond.errors import InputError
from relucond.gaussian_lab import (
    ConeSpec,
    ExperimentConfig,
    angle_preservation_check,
    beta_sweep,
    epsilon_net_sphere,
    expectation_identity_pairs,
    gaussian_width_mc,
    mc_lemma_checks,
    rip_check,
    small_distance_profile,
    theorem_band_check,
)
from relucond.numerics import RngSeed

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def test_width_max_examples():
    assert ConeSpec.full_space(2).width_max([3.0, 4.0])[0] == pytest.approx(5.0)
    assert ConeSpec.sparse_cone(3, 1).width_max([1.0, -2.0, 0.5])[0] == pytest.approx(math.sqrt(5))


@given(st.integers(1, 8), st.data())
def test_sparse_width_equals_full_when_2k_covers_n(n, data):
    k = data.draw(st.integers(math.ceil(n / 2), n))
    g = data.draw(arrays(np.float64, n, elements=finite))
    assert ConeSpec.sparse_cone(n, k).width_max(g)[0] == pytest.approx(ConeSpec.full_space(n).width_max(g)[0])


@given(arrays(np.float64, 5, elements=finite), st.floats(1e-3, 1e3))
def test_membership_is_scale_invariant(x, t):
    cones = [
        ConeSpec.full_space(5),
        ConeSpec.sparse_cone(5, 2),
        ConeSpec.custom_halfspaces([[1, 0, 0, 0, 0], [0, 1, -1, 0, 0]]),
    ]
    for c in cones:
        assert c.member(x) == c.member(t * x)


@pytest.mark.parametrize(
    "cone",
    [
        ConeSpec.full_space(4),
        ConeSpec.sparse_cone(4, 2),
        ConeSpec.custom_halfspaces([[1, 0, 0, 0], [0, 1, 0, 0]]),
        ConeSpec.custom_halfspaces([[1, 0, 0, 0], [-1, 0, 0, 0]]),
    ],
)
def test_cone_samples_are_unit_members(cone):
    rng = RngSeed(0).generator()
    X = cone.sample_sphere(500, rng)
    assert np.allclose(np.linalg.norm(X, axis=1), 1.0)
    assert all(cone.member(x) for x in X)
    Y = X + 1e-3 * cone.near_directions(X, rng)
    assert all(cone.member(y) for y in Y)


def test_halfspace_width_and_interior():
    open_cone = ConeSpec.custom_halfspaces([[1, 0, 0], [0, 1, 0]])
    assert not open_cone.empty_interior
    g = np.array([3.0, 4.0, 12.0])
    assert open_cone.width_max(g)[0] == pytest.approx(13.0)
    flat = ConeSpec.custom_halfspaces([[1, 0, 0], [-1, 0, 0], [0, 1, 0]])
    assert flat.empty_interior and flat.dimension == 2
    assert flat.width_max(g)[0] == pytest.approx(math.hypot(4, 12))


def test_trivial_cone_cannot_be_sampled():
    point = ConeSpec.custom_halfspaces([[1.0], [-1.0]])
    assert point.dimension == 0
    with pytest.raises(InputError):
        point.sample_sphere(1, RngSeed(0).generator())


def test_cone_validation():
    with pytest.raises(InputError):
        ConeSpec.sparse_cone(3, 0)
    with pytest.raises(InputError):
        ConeSpec("ball", 3)
    with pytest.raises(InputError):
        ConeSpec.parse("sparse:x", 3)


def test_config_windows():
    with pytest.raises(InputError):
        ExperimentConfig(n=3, cone=ConeSpec.full_space(4))
    with pytest.raises(InputError):
        ExperimentConfig(delta=-1.0)
    with pytest.raises(InputError):
        theorem_band_check(ExperimentConfig(delta=0.6, m=10, pair_count=5))
    with pytest.raises(InputError):
        mc_lemma_checks(ExperimentConfig(alpha=1.5, mc_rows=10, pair_count=1))
    with pytest.raises(InputError):
        mc_lemma_checks(ExperimentConfig(beta_param=5.0, mc_rows=10, pair_count=1))
    with pytest.raises(InputError):
        rip_check(ExperimentConfig(delta=1.5, m=10, pair_count=5))


def test_width_closed_forms():
    mean, se = gaussian_width_mc(ConeSpec.full_space(1), 50_000, 3)
    assert abs(mean - math.sqrt(2 / math.pi)) <= 4 * se
    with pytest.raises(InputError):
        gaussian_width_mc(ConeSpec.full_space(1), 1, 3)


def test_width_worker_independent():
    spec = ConeSpec.sparse_cone(20, 3)
    assert gaussian_width_mc(spec, 150_000, 1) == gaussian_width_mc(spec, 150_000, 1, workers=3)


def test_net_on_zero_sphere():
    net = epsilon_net_sphere(1, 1.0, 0)
    assert sorted(net.net.ravel().tolist()) == [-1.0, 1.0] and net.verified


def test_net_on_circle():
    net = epsilon_net_sphere(2, 0.1, 0)
    base = math.ceil(2 * math.pi / 0.2)
    assert 0.5 * base <= net.size <= 2 * base
    assert net.verified
    assert net.sudakov == pytest.approx(0.1 * math.sqrt(math.log(net.size)))


def test_net_reports_uncovered_point():
    net = epsilon_net_sphere(3, 0.3, 0, probes=2000, pool=5)
    assert not net.verified
    assert net.uncovered is not None and net.worst_probe_distance > 0.3


def test_net_limits():
    with pytest.raises(InputError):
        epsilon_net_sphere(7, 0.5, 0)
    with pytest.raises(InputError):
        epsilon_net_sphere(2, 2.5, 0)


def test_lemma_checks_small():
    rep = mc_lemma_checks(ExperimentConfig(n=4, pair_count=3, mc_rows=200_000, seed=2))
    assert rep.passed
    assert {r["quantity"] for r in rep.rows} == {"E1", "E2", "E2_neg", "tail", "lower", "upper"}


def test_lemma_checks_worker_independent():
    cfg = dict(n=4, pair_count=2, mc_rows=150_000, seed=8)
    a = mc_lemma_checks(ExperimentConfig(**cfg)).rows
    b = mc_lemma_checks(ExperimentConfig(workers=4, **cfg)).rows
    assert a == b


def test_lemma_se_shrinks_like_root_n():
    def e1_se(rows):
        cfg = ExperimentConfig(n=4, pair_count=1, mc_rows=rows, seed=4)
        return next(r["se"] for r in mc_lemma_checks(cfg).rows if r["quantity"] == "E1")

    ratio = e1_se(200_000) / e1_se(400_000)
    assert abs(ratio - math.sqrt(2)) <= 0.1 * math.sqrt(2)


def test_identity_equal_pair_is_exactly_zero():
    x = np.array([0.3, -1.0, 2.0])
    (row,) = expectation_identity_pairs(x[None], x[None], 10_000, 0)
    assert row["mc_mean"] == 0.0 and row["exact"] == 0.0 and row["z"] == 0.0


def test_identity_antipodal_pair():
    x = np.array([1.0, 0, 0, 0, 0])
    (row,) = expectation_identity_pairs(x[None], -x[None], 400_000, 1)
    assert abs(row["mc_mean"] - 1.0) <= 4 * row["se"]


def test_band_small_layer():
    rep = theorem_band_check(ExperimentConfig(n=4, m=3000, pair_count=6000, seed=1))
    assert rep.passed
    overall = rep.rows[-1]
    assert overall["pairs"] == 6000
    assert overall["mean_within_quarter_half"]
    assert {r["regime"] for r in rep.rows} == {"large", "small", "all"}


def test_band_narrow_delta_is_informational():
    rep = theorem_band_check(ExperimentConfig(n=4, m=300, pair_count=2000, delta=0.01, seed=1))
    assert rep.rows[-1]["violations"] > 0


def test_band_on_sparse_cone():
    cfg = ExperimentConfig(n=20, m=3000, pair_count=3000, seed=2, cone=ConeSpec.sparse_cone(20, 3))
    assert theorem_band_check(cfg).passed


def test_small_profile_is_flat():
    rep = small_distance_profile(ExperimentConfig(n=10, m=3000, pair_count=200, seed=3))
    means = [r["mean"] for r in rep.rows]
    assert max(means) - min(means) <= 0.05
    assert all(abs(mu - 0.5) <= 0.05 for mu in means)


def test_small_ratio_homogeneous():
    from relucond.geometry import blocked_image_distances
    from relucond.numerics import gaussian_matrix

    A = gaussian_matrix(500, 5, 1)
    rng = RngSeed(2).generator()
    X = rng.standard_normal((20, 5))
    Y = X + 1e-3 * rng.standard_normal((20, 5))
    z = np.zeros(500)

    def q(X, Y):
        return blocked_image_distances(A, z, X, Y) ** 2 / np.sum((X - Y) ** 2, axis=1)

    assert np.allclose(q(X, Y), q(7.5 * X, 7.5 * Y), rtol=1e-12)


def test_sweep_rows_do_not_depend_on_list():
    a = beta_sweep(3, [50, 200], 1, pair_count=3000, probes=50).rows[1]
    b = beta_sweep(3, [200], 1, pair_count=3000, probes=50).rows[0]
    assert a == b
    with pytest.raises(InputError):
        beta_sweep(3, [200, 50], 1)


def test_angle_special_pairs():
    rep = angle_preservation_check(ExperimentConfig(n=6, m=4000, pair_count=100, seed=5))
    by = {r["kind"]: r for r in rep.rows}
    assert by["equal"]["max_deviation"] == 0.0
    assert by["antipodal"]["max_deviation"] <= 1e-12
    assert by["all"]["pairs"] == 100


def test_rip_small():
    rep = rip_check(ExperimentConfig(n=5, m=2000, pair_count=3000, delta=0.3, seed=6))
    assert rep.passed
    assert rep.rows[1]["check"] == "chi2"
