"""Bi-Lipschitz constants and condition numbers of ReLU layers x -> relu(Ax + b) / sqrt(m)."""

from .errors import DegenerateArrangementWarning, DegeneratePairError, InputError, NumericalError
from .estimators import BiLipBracket, Sqrt2Certificate, refine_extreme, sampled_bilip, scale_invariance_check, sqrt2_certificate
from .exact import (
    ActivationPattern,
    BoundsReport,
    brute_force_bilip,
    enumerate_cells,
    exact_upper_lipschitz,
    lambda_of_A,
    related_bounds,
)
from .gaussian_lab import (
    ConeSpec,
    ExperimentConfig,
    ExperimentReport,
    angle_preservation_check,
    beta_sweep,
    epsilon_net_sphere,
    expectation_identity_check,
    gaussian_width_mc,
    mc_lemma_checks,
    rip_check,
    small_distance_profile,
    theorem_band_check,
)
from .geometry import (
    LayerMap,
    angle_theta,
    expected_sq_distance,
    layer_apply,
    pairwise_ratio,
    phi,
    predicted_cos_angle,
    psi,
    relu,
    smoothing_ramp,
)
from .numerics import RngSeed, gaussian_matrix, sample_unit_sphere, singular_extremes

__version__ = "0.1.0"
