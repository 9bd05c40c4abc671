"""Verifiers for the structural estimates satisfied by energy-class functions.

Every ratio-style check here renders a one-sided inequality with a
qualitative constant as measurable data: the function returns the two sides
(or their ratio) and the caller asserts boundedness across sampled scales,
never a specific constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    ScalarField,
    ball_mask,
    gradient,
    integrate,
    mask_measure,
    masked_inf,
    masked_sup,
    mean_over,
)

DEFAULT_TAU = 0.1


def default_log_sigma(p: float) -> float:
    """Default exponent for the logarithmic estimate: 0.4 (p-1)/p, safely
    inside the admissible open interval (0, (p-1)/p)."""
    return 0.4 * (p - 1.0) / p


def degiorgi_lemma_threshold(n: int, p: float, gamma_hat: float, beta: float) -> float:
    """Critical measure fraction in the level-set shrinking lemma.

    ``min(5^(N+1) omega_N / (N 6^(N+1)),
          omega_N^N / (N^N 6^(4N+2N^2) gamma_hat^(N/p) beta^N))``;
    strictly decreasing in both ``gamma_hat`` and ``beta``.
    """
    value, _ = degiorgi_lemma_threshold_detail(n, p, gamma_hat, beta)
    return value


def degiorgi_lemma_threshold_detail(n: int, p: float, gamma_hat: float,
                                    beta: float) -> tuple[float, str]:
    """Threshold value together with which of the two branches attained the min."""
    if min(n, p, gamma_hat, beta) <= 0:
        raise ValueError("all inputs must be positive")
    omega = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    first = 5.0 ** (n + 1) * omega / (n * 6.0 ** (n + 1))
    second = omega**n / (n**n * 6.0 ** (4 * n + 2 * n * n)
                         * gamma_hat ** (n / p) * beta**n)
    if first <= second:
        return first, "measure"
    return second, "energy"


@dataclass(frozen=True)
class LemmaVerdict:
    """Outcome of one level-set shrinking check; never asserts the converse."""

    premise_holds: bool
    conclusion_holds: bool
    consistent: bool
    level_measure: float
    ball_measure: float
    sup_value: float


def degiorgi_lemma_check(field: ScalarField, center: Sequence[float], big_r: float,
                         s: int, theta: float) -> LemmaVerdict:
    """Check one instance of: small super-level measure on B_R forces the sup
    to drop on B_(5R/6), with the reference sup taken over B_2R."""
    if s < 2:
        raise ValueError(f"level index s must be at least 2, got {s}")
    grid = field.grid
    if not grid.contains_ball(center, 2.0 * big_r):
        raise ValueError("ball B_2R exits the grid")
    mu_plus = masked_sup(field, ball_mask(grid, center, 2.0 * big_r))
    inner = ball_mask(grid, center, big_r)
    level = mu_plus * (1.0 - 0.5**s)
    above = inner.values & (field.values > level)
    level_measure = float(grid.node_weights()[above].sum()) if above.any() else 0.0
    ball_measure = mask_measure(inner)
    premise = level_measure < theta * ball_measure
    sup_small = masked_sup(field, ball_mask(grid, center, 5.0 * big_r / 6.0))
    target = mu_plus * (1.0 - 0.5 ** (s + 1))
    conclusion = sup_small <= target * (1.0 + 1e-12) + 1e-300
    return LemmaVerdict(premise_holds=premise, conclusion_holds=conclusion,
                        consistent=(not premise) or conclusion,
                        level_measure=level_measure, ball_measure=ball_measure,
                        sup_value=sup_small)


def sup_bound_ratio(field: ScalarField, sigma: float, q: float, rho: float,
                    center: Sequence[float]) -> float:
    """``sup_(B_sigma rho) u_+  /  (mean_(B_rho) u_+^q)^(1/q)``.

    Finite for any field with positive part on the outer ball; 0 by
    convention when the positive part vanishes identically.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if q <= 0.0:
        raise ValueError(f"q must be positive, got {q}")
    grid = field.grid
    if not grid.contains_ball(center, rho):
        raise ValueError("ball exits the grid")
    plus = np.maximum(field.values, 0.0)
    sup_inner = masked_sup(ScalarField(grid, plus), ball_mask(grid, center, sigma * rho))
    mean_q = mean_over(ScalarField(grid, plus**q), ball_mask(grid, center, rho))
    if mean_q == 0.0:
        if sup_inner == 0.0:
            return 0.0
        raise ValueError("positive supremum over a ball with zero q-mean")
    return sup_inner / mean_q ** (1.0 / q)


@dataclass(frozen=True)
class HarnackReport:
    """Two sides of the weak Harnack comparison at one scale."""

    tau: float
    sigma: float
    eta: float
    rho: float
    avg_power_mean: float
    infimum: float
    ratio: float

    def to_row(self, check: str = "weak_harnack", family: str = "",
               big_r: float = float("nan")) -> dict:
        return {"check": check, "family": family, "R": big_r, "rho": self.rho,
                "sigma": self.sigma, "tau": self.tau, "value": self.ratio,
                "verdict": ""}


def weak_harnack_ratio(field: ScalarField, tau: float, sigma: float, eta: float,
                       rho: float, center: Sequence[float]) -> HarnackReport:
    """``(mean_(B_sigma rho) v^tau)^(1/tau) / inf_(B_eta rho) v`` for v >= 0.

    The infimum is the node minimum; a zero infimum against a positive
    power mean is flagged with an infinite ratio.
    """
    for name, val in (("tau", tau), ("sigma", sigma), ("eta", eta)):
        if not 0.0 < val < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {val}")
    grid = field.grid
    if not grid.contains_ball(center, rho):
        raise ValueError("ball exits the grid")
    working = ball_mask(grid, center, rho)
    if field.values[working.values].min() < -1e-12:
        raise ValueError("field must be non-negative on the working ball")
    v = np.maximum(field.values, 0.0)
    power_mean = mean_over(ScalarField(grid, v**tau),
                           ball_mask(grid, center, sigma * rho)) ** (1.0 / tau)
    infimum = masked_inf(ScalarField(grid, v), ball_mask(grid, center, eta * rho))
    if infimum == 0.0:
        ratio = math.inf if power_mean > 0.0 else 1.0
    else:
        ratio = power_mean / infimum
    return HarnackReport(tau=tau, sigma=sigma, eta=eta, rho=rho,
                         avg_power_mean=power_mean, infimum=infimum, ratio=ratio)


def sup_contraction_factor(source, big_r: float, s: float = 0.5,
                           rho_fraction: float = 0.5, tau: float = DEFAULT_TAU,
                           center: Sequence[float] | None = None) -> float:
    """Measured contraction ``mu_+(s rho) / mu_+(R)`` with ``rho = rho_fraction R``.

    ``source`` is an analytic family or a non-negative ScalarField.  The
    value sits in (0, 1] for fields vanishing somewhere in the big ball;
    ``tau`` is recorded by callers for report metadata only, the measured
    ratio does not use it.
    """
    from .growth import sup_over_ball  # local import; growth builds on this module's peers

    inner_radius = s * rho_fraction * big_r
    if not 0.0 < inner_radius < big_r:
        raise ValueError("nested balls are invalid: need 0 < s*rho_fraction*R < R")
    outer = sup_over_ball(source, big_r, center)
    if outer == 0.0:
        raise ValueError("sup over the outer ball vanishes")
    return sup_over_ball(source, inner_radius, center) / outer


@dataclass(frozen=True)
class LogEstimateReport:
    """Integral mean of ``ln(mu_+/(mu_+ - u))^sigma`` with its capacity weight."""

    sigma: float
    lhs_mean: float
    delta: float
    normalized: float
    clamped_nodes: int

    def to_row(self, family: str = "", big_r: float = float("nan")) -> dict:
        return {"check": "log_estimate", "family": family, "R": big_r,
                "rho": float("nan"), "sigma": self.sigma, "tau": float("nan"),
                "value": self.normalized, "verdict": ""}


def log_estimate_report(field: ScalarField, mu_plus: float, sigma: float,
                        big_r: float, p: float, delta: float,
                        center: Sequence[float] = None) -> LogEstimateReport:
    """Evaluate the logarithmic estimate data on B_R.

    Needs ``0 <= u < mu_plus``; nodes at ``u = mu_plus`` are clamped to
    ``mu_plus (1 - 1e-12)`` and the clamp count reported, since the grid
    cannot represent the measure-zero coincidence set the continuum estimate
    tolerates.  ``normalized = lhs_mean * delta^(1/p)`` is the quantity that
    stays bounded across scales for class members vanishing on a fat set.
    """
    if mu_plus <= 0.0:
        raise ValueError(f"mu_plus must be positive, got {mu_plus}")
    if not 0.0 < sigma < (p - 1.0) / p:
        raise ValueError(f"sigma must lie in (0, {(p - 1.0) / p:g}) for p={p:g}, got {sigma}")
    grid = field.grid
    if center is None:
        center = (0.0,) * grid.dim
    ball = ball_mask(grid, center, big_r)
    vals = field.values
    if vals[ball.values].min() < -1e-12:
        raise ValueError("field must be non-negative on the integration ball")
    vals = np.maximum(vals, 0.0)
    cap_value = mu_plus * (1.0 - 1e-12)
    clamped = int(np.count_nonzero((vals > cap_value) & ball.values))
    vals = np.minimum(vals, cap_value)
    integrand = np.log(mu_plus / (mu_plus - vals)) ** sigma
    lhs_mean = mean_over(ScalarField(grid, integrand), ball)
    return LogEstimateReport(sigma=sigma, lhs_mean=lhs_mean, delta=delta,
                             normalized=lhs_mean * delta ** (1.0 / p),
                             clamped_nodes=clamped)


def log_gradient_data(field: ScalarField, m_bound: float, rho: float, big_r: float,
                      p: float, center: Sequence[float]) -> tuple[float, float]:
    """Both sides of the logarithmic gradient estimate, constant left out.

    ``lhs`` is the p-energy of ``ln u`` on B_rho, ``rhs_raw`` is
    ``p / (R - rho)^p`` times the mass of ``ln(M/u)`` on B_R; their ratio is
    the implied constant.
    """
    if not 0.0 < rho < big_r:
        raise ValueError(f"need 0 < rho < R, got rho={rho}, R={big_r}")
    grid = field.grid
    outer = ball_mask(grid, center, big_r)
    if masked_inf(field, outer) <= 0.0:
        raise ValueError("field must be strictly positive on B_R")
    if m_bound < masked_sup(field, outer):
        raise ValueError("M must dominate the field on B_R")
    with np.errstate(divide="ignore"):
        log_vals = np.where(field.values > 0.0, np.log(field.values), 0.0)
    grad_log = gradient(ScalarField(grid, log_vals))
    grad_norm_p = np.sum(grad_log * grad_log, axis=-1) ** (p / 2.0)
    lhs = integrate(ScalarField(grid, grad_norm_p), ball_mask(grid, center, rho))
    log_ratio = np.log(m_bound) - log_vals
    mass = integrate(ScalarField(grid, np.where(outer.values, log_ratio, 0.0)), outer)
    rhs_raw = p / (big_r - rho) ** p * mass
    return lhs, rhs_raw


_COMPOSE_KINDS = ("reciprocal_gap", "log_reciprocal_gap")


def compose_convex(field: ScalarField, kind: str) -> ScalarField:
    """Pointwise convex composition of a field normalized into [0, 1).

    ``reciprocal_gap`` maps u to 1/(1-u), ``log_reciprocal_gap`` to
    ln(1/(1-u)); both are monotone, so ordering of fields is preserved.
    """
    if kind not in _COMPOSE_KINDS:
        raise ValueError(f"kind must be one of {_COMPOSE_KINDS}, got {kind!r}")
    vals = field.values
    if vals.max() > 1.0 - 1e-12:
        raise ValueError("field values must stay below 1 - 1e-12; normalize by the sup first")
    if vals.min() < -1e-12:
        raise ValueError("field must be non-negative")
    vals = np.maximum(vals, 0.0)
    if kind == "reciprocal_gap":
        out = 1.0 / (1.0 - vals)
    else:
        out = -np.log1p(-vals)
    return ScalarField(field.grid, out)
