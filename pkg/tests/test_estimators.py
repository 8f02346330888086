import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relucond.errors import InputError
from relucond.estimators import (
    refine_extreme,
    sampled_bilip,
    scale_invariance_check,
    sqrt2_certificate,
)
from relucond.geometry import LayerMap, pair_ratios
from relucond.numerics import RngSeed, gaussian_matrix, sphere_points

OPTIMAL = LayerMap([[1.0], [-1.0]])


def test_optimal_layer_bracket():
    br = sampled_bilip(OPTIMAL, 100_000, 3)
    assert 1.40 <= br.beta_lo <= 1.4143
    assert br.U_lo <= br.U_hi + 1e-15


def test_identity_collapses():
    br = sampled_bilip(LayerMap(np.eye(2)), 1000, 0)
    assert br.L_hi == 0.0 and br.collapsed and math.isinf(br.beta_lo)


def test_same_seed_same_bracket():
    layer = LayerMap(gaussian_matrix(20, 3, 1), np.linspace(-1, 1, 20))
    a = sampled_bilip(layer, 9000, 42).to_dict()
    b = sampled_bilip(layer, 9000, 42, workers=3).to_dict()
    assert a == b


def test_sphere_only_mixture_has_no_zero_pairs():
    br = sampled_bilip(LayerMap(np.eye(3)), 5000, 1, include_structured=False)
    x, y = br.witness_max
    assert np.linalg.norm(y) == pytest.approx(1.0)


@given(st.integers(1, 6000), st.integers(1, 6000))
@settings(max_examples=15)
def test_longer_samples_only_tighten(a, b):
    layer = LayerMap(gaussian_matrix(10, 3, 7))
    short, long = sorted((a, b))
    s = sampled_bilip(layer, short, 5)
    t = sampled_bilip(layer, long, 5)
    assert t.U_lo >= s.U_lo and t.L_hi <= s.L_hi


def test_beta_lo_below_theory_ratio():
    br = sampled_bilip(OPTIMAL, 20_000, 9, U_hi=1 / math.sqrt(2), L_lo=0.5)
    assert br.beta_lo <= br.beta_hi + 1e-12


def test_pair_count_validated():
    with pytest.raises(InputError):
        sampled_bilip(OPTIMAL, 0, 1)


def test_refine_reaches_optimal_max():
    br = sampled_bilip(OPTIMAL, 500, 2)
    x, y, r = refine_extreme(OPTIMAL, *br.witness_max, "max", 40)
    assert r == pytest.approx(1 / math.sqrt(2), abs=1e-6)


@pytest.mark.parametrize("direction", ["min", "max"])
def test_refine_is_monotone(direction):
    layer = LayerMap(gaussian_matrix(6, 2, 3), [0.2, -0.1, 0, 0.5, 0, 0])
    rng = RngSeed(1).generator()
    for _ in range(5):
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        start = pair_ratios(layer.A, layer.b, x[None], y[None])[0]
        _, _, r = refine_extreme(layer, x, y, direction, 15)
        assert (r >= start) if direction == "max" else (r <= start)


def test_refine_zero_iterations():
    x, y = np.array([0.3, -1.0]), np.array([1.0, 2.0])
    x2, y2, r = refine_extreme(LayerMap(np.eye(2)), x, y, "min", 0)
    assert np.array_equal(x2, x) and np.array_equal(y2, y)


def test_refine_bad_direction():
    with pytest.raises(InputError):
        refine_extreme(OPTIMAL, [1.0], [2.0], "up", 1)


def test_certificate_identity():
    assert sqrt2_certificate(np.eye(2), 50, 0).cert_ratio >= math.sqrt(2) - 1e-9


def test_certificate_optimal_layer_is_tight():
    cert = sqrt2_certificate([[1.0], [-1.0]], 2, 1)
    assert cert.r_plus == pytest.approx(1 / math.sqrt(2))
    assert cert.r_minus == pytest.approx(1 / math.sqrt(2))
    assert cert.L_ub == pytest.approx(0.5)
    assert cert.U_lb == pytest.approx(1 / math.sqrt(2))
    assert cert.cert_ratio == pytest.approx(math.sqrt(2), abs=1e-12)


def test_certificate_random_layers():
    for s in range(100):
        assert sqrt2_certificate(gaussian_matrix(8, 3, s), 32, s).cert_ratio >= math.sqrt(2) - 1e-9


def test_certificate_fields_are_consistent():
    cert = sqrt2_certificate(gaussian_matrix(5, 2, 3), 100, 4)
    assert cert.L_ub == pytest.approx(math.sqrt((cert.r_plus**2 + cert.r_minus**2) / 4))
    assert cert.U_lb >= max(cert.r_plus, cert.r_minus)
    assert np.linalg.norm(cert.probe) == pytest.approx(1.0)


def test_certificate_zero_matrix():
    with pytest.raises(InputError):
        sqrt2_certificate(np.zeros((3, 2)), 10, 0)


def shared_pairs(n, count, seed):
    rng = RngSeed(seed).generator()
    return sphere_points(count, n, rng), sphere_points(count, n, rng) * rng.random((count, 1))


def test_scale_check_c_one_is_exact():
    layer = LayerMap(gaussian_matrix(12, 4, 0), np.linspace(-1, 1, 12))
    rep = scale_invariance_check(layer, 1.0, shared_pairs(4, 1000, 1))
    assert rep["max_ratio_rel_dev"] == 0.0 and rep["beta_rel_dev"] == 0.0


@pytest.mark.parametrize("c", [3.5, 1e-8])
def test_scale_check(c):
    layer = LayerMap(gaussian_matrix(12, 4, 0), np.linspace(-1, 1, 12))
    rep = scale_invariance_check(layer, c, shared_pairs(4, 1000, 1))
    assert rep["passed"]


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_scale_check_rejects_nonpositive(c):
    with pytest.raises(InputError):
        scale_invariance_check(OPTIMAL, c, shared_pairs(1, 3, 0))


@pytest.mark.parametrize("seed", range(5))
def test_bias_vanishes_at_large_scale(seed):
    A = gaussian_matrix(10, 3, seed)
    b = RngSeed(seed + 100).generator().standard_normal(10)
    X, Y = shared_pairs(3, 2000, seed)
    r0 = pair_ratios(A, np.zeros(10), X, Y)
    rb = pair_ratios(A, b, 1e6 * X, 1e6 * Y)
    beta0 = np.nanmax(r0) / np.nanmin(r0)
    betab = np.nanmax(rb) / np.nanmin(rb)
    assert abs(betab - beta0) <= 1e-4
