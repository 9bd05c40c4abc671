"""Numerical laboratory for variational p-capacities, Caccioppoli-type energy
estimates, weak Harnack ratios, and power-law growth exponents of functions
vanishing on fat sets."""

from .geometry import (
    ScalarField,
    SetMask,
    UniformGrid,
    ball_mask,
    extend_by_zero,
    gradient,
    half_space_mask,
    hyperplane_slab_mask,
    integrate,
    make_grid,
    truncate,
)
from .capacity import (
    CapacityEstimate,
    CondenserProblem,
    cap_ball_annulus,
    capacity_density,
    fatness_ratio,
    segment_capacity_lower_bound,
    sine_power_integral,
    variational_capacity,
)
from .counterexamples import (
    Cone3D,
    Meyers2D,
    Quartic4D,
    exact_growth,
    make_family,
)
from .degiorgi import (
    HarnackReport,
    LogEstimateReport,
    compose_convex,
    degiorgi_lemma_check,
    degiorgi_lemma_threshold,
    log_estimate_report,
    log_gradient_data,
    sup_bound_ratio,
    sup_contraction_factor,
    weak_harnack_ratio,
)
from .growth import (
    FitResult,
    GrowthCurve,
    fit_exponent,
    iteration_exponent,
    sup_growth_curve,
    worst_case_contraction,
)
from .solver import DirichletProblem, caccioppoli_data, solve_linear

__version__ = "0.1.0"
