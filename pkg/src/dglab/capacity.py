"""Variational condenser p-capacities: closed forms, a grid estimator, and
fatness diagnostics.

The estimator minimizes the discrete p-Dirichlet energy over fields clamped
to 1 on the inner plate and 0 outside the outer domain, so estimates
approach continuum values from above as the grid refines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ScalarField, SetMask, UniformGrid, ball_mask
from .solver import minimize_p_energy


def sphere_surface_measure(n: int) -> float:
    """Surface measure of the unit sphere in R^n: ``2 pi^(n/2) / Gamma(n/2)``."""
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def cap_ball_annulus(p: float, n: int, r: float, big_r: float) -> float:
    """Exact condenser capacity of concentric balls of radii r < R in R^n.

    Power-law branch for p < n, logarithmic branch for p = n.
    """
    if not 0.0 < r < big_r:
        raise ValueError(f"need 0 < r < R, got r={r}, R={big_r}")
    if not 1.0 < p <= n:
        raise ValueError(f"p must lie in (1, {n}], got {p}")
    omega = sphere_surface_measure(n)
    if p == n:
        return omega * math.log(big_r / r) ** (1 - n)
    q = (p - n) / (p - 1.0)
    return omega * abs(q) ** (p - 1.0) * abs(big_r**q - r**q) ** (1.0 - p)


@dataclass(frozen=True)
class CondenserProblem:
    """Inner plate K inside an open outer domain Q, with exponent p in (1, N]."""

    inner: SetMask
    outer: SetMask
    p: float

    def __post_init__(self) -> None:
        if self.inner.grid != self.outer.grid:
            raise ValueError("inner and outer masks live on different grids")
        if self.inner.is_empty:
            raise ValueError("inner plate is empty")
        if np.any(self.inner.values & ~self.outer.values):
            raise ValueError("inner plate is not contained in the outer domain")
        if not np.any(self.outer.values & ~self.inner.values):
            raise ValueError("outer domain must strictly exceed the inner plate")
        n = self.inner.grid.dim
        if not 1.0 < self.p <= n:
            raise ValueError(f"p must lie in (1, {n}], got {self.p}")

    @property
    def grid(self) -> UniformGrid:
        return self.inner.grid


@dataclass(frozen=True)
class CapacityEstimate:
    """Capacity value with its minimizer and convergence diagnostics.

    ``value`` is the unregularized energy at the minimizer; for p != 2 the
    smoothed energy actually minimized is reported alongside.
    """

    value: float
    value_regularized: float
    minimizer: ScalarField
    iterations: int
    energy_gap: float
    converged: bool

    def to_record(self, problem: CondenserProblem) -> dict:
        return {
            "p": problem.p,
            "N": problem.grid.dim,
            "grid": problem.grid.to_dict(),
            "value": self.value,
            "iterations": self.iterations,
            "energy_gap": self.energy_gap,
            "converged": self.converged,
        }


def variational_capacity(problem: CondenserProblem, tolerance: float = 1e-6,
                         max_iterations: int | None = None) -> CapacityEstimate:
    """Minimize the discrete p-Dirichlet energy of the condenser.

    Constrained nodes (1 on the plate, 0 on and outside the outer boundary)
    are eliminated from the unknown set.  p = 2 solves the linear system by
    conjugate gradient; p != 2 runs nonlinear CG seeded with the harmonic
    minimizer.  A run that exhausts ``max_iterations`` is returned flagged
    rather than raised, with its last relative energy decrease.
    """
    grid = problem.grid
    fixed = problem.inner.values | ~problem.outer.values
    fixed_values = np.where(problem.inner.values, 1.0, 0.0)
    result = minimize_p_energy(grid, problem.p, fixed, fixed_values,
                               tolerance=tolerance, max_iterations=max_iterations)
    minimizer = ScalarField(grid, result.values, source="capacity-minimizer")
    return CapacityEstimate(
        value=result.energy,
        value_regularized=result.energy_regularized,
        minimizer=minimizer,
        iterations=result.iterations,
        energy_gap=result.energy_gap,
        converged=result.converged,
    )


def plate_ball(grid: UniformGrid, center: Sequence[float], radius: float) -> SetMask:
    """Ball mask for condenser plates, dilated by half the grid spacing.

    A plain node-distance ball under-resolves the plate and its discrete
    capacity lands below the continuum value; the half-cell dilation (the
    same convention used for thin-set thickening) makes estimates converge
    from above instead, with the excess vanishing under refinement.
    """
    return ball_mask(grid, center, radius + 0.5 * max(grid.spacing))


def ball_condenser(grid: UniformGrid, center: Sequence[float], r: float,
                   big_r: float, p: float) -> CondenserProblem:
    """Condenser of concentric balls with the dilated inner plate."""
    return CondenserProblem(inner=plate_ball(grid, center, r),
                            outer=ball_mask(grid, center, big_r), p=p)


def fatness_ratio(set_mask: SetMask, x: Sequence[float], r: float, p: float,
                  tolerance: float = 1e-6, max_iterations: int | None = None) -> float:
    """Local capacity-density ratio of a set at center x and radius r.

    ``cap_p(E intersect B_r, B_2r) / cap_p(B_r, B_2r)`` with a variational
    numerator and the closed-form denominator; for p = N the denominator is
    dropped and the bare numerator returned.
    """
    grid = set_mask.grid
    if not grid.contains_ball(x, 2.0 * r):
        raise ValueError("ball B_2r exits the grid")
    inner = set_mask & plate_ball(grid, x, r)
    outer = ball_mask(grid, x, 2.0 * r)
    problem = CondenserProblem(inner=inner, outer=outer, p=p)
    numerator = variational_capacity(problem, tolerance, max_iterations).value
    if p == grid.dim:
        return numerator
    return numerator / cap_ball_annulus(p, grid.dim, r, 2.0 * r)


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 48) -> float:
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1))

    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def sine_power_integral(n: int, tol: float = 1e-12, intervals: int | None = None) -> float:
    """``integral_0^(pi/2) (sin t)^((2-n)/(n-1)) dt``.

    This is the normalizing constant in the segment capacity bound.  The
    integrand has an integrable endpoint singularity at t = 0 for n >= 3;
    substituting ``t = s^(n-1)`` removes it entirely, after which the
    integrand is smooth and bounded.  With ``intervals`` set, a fixed
    composite Simpson rule is used instead of adaptive quadrature (handy for
    step-halving convergence checks).
    """
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    a = (2.0 - n) / (n - 1.0)
    m = n - 1

    def regularized(s: float) -> float:
        if s == 0.0:
            return float(m)
        t = s**m
        return math.sin(t) ** a * m * s ** (m - 1)

    upper = (math.pi / 2.0) ** (1.0 / m)
    if intervals is not None:
        if intervals < 2 or intervals % 2:
            raise ValueError("intervals must be a positive even number")
        xs = np.linspace(0.0, upper, intervals + 1)
        ys = np.array([regularized(float(x)) for x in xs])
        h = upper / intervals
        return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum()))
    return _adaptive_simpson(regularized, 0.0, upper, tol)


def segment_capacity_lower_bound(n: int, convention_omega: float) -> float:
    """Lower bound ``omega_(N-2) ln(3) / kappa_N^(N-1)`` for the N-capacity of
    a radius-r segment against B_2r; independent of r.

    The normalization of ``omega_(N-2)`` is not canonical, so the caller
    supplies it (``sphere_surface_measure(n - 2)`` gives 2 for n = 3).
    """
    if n < 3:
        raise ValueError(f"the segment bound needs N >= 3, got {n}")
    kappa = sine_power_integral(n)
    return convention_omega * math.log(3.0) / kappa ** (n - 1)


def capacity_density(cap_value: float, big_r: float, p: float, n: int) -> float:
    """Capacity normalized by ``R^(N-p)``; unchanged for p = N."""
    if cap_value < 0.0:
        raise ValueError(f"capacity must be non-negative, got {cap_value}")
    if big_r <= 0.0:
        raise ValueError(f"radius must be positive, got {big_r}")
    if p == n:
        return cap_value
    return cap_value / big_r ** (n - p)
