"""Growth curves of ball suprema, exponent extraction, and the dyadic
iteration-to-exponent map.

The liminf-style exponent of a curve is rendered two ways: a least-squares
slope in log-log coordinates (statistical) and the constructive bound
``ln(1/eta) / ln(ratio)`` built from a measured contraction factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ScalarField
from . import counterexamples as _cx


def sup_over_ball(source, radius: float, center: Sequence[float] | None = None) -> float:
    """Supremum of a source over the ball of given radius.

    Analytic families use their exact growth law; fields take the node
    maximum over the ball clipped to the grid box.
    """
    if radius <= 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if hasattr(source, "growth_exponent"):
        return _cx.exact_growth(source, radius)
    if not isinstance(source, ScalarField):
        raise TypeError(f"source must be a family or ScalarField, got {type(source)!r}")
    grid = source.grid
    if center is None:
        center = (0.0,) * grid.dim
    pts = grid.node_points()
    dist2 = np.sum((pts - np.asarray(center, dtype=float)) ** 2, axis=-1)
    corner_dist = math.sqrt(float(dist2.max()))
    if radius > corner_dist:
        raise ValueError(f"radius {radius} exceeds the grid (max node distance {corner_dist:g})")
    inside = dist2 <= radius * radius
    if not inside.any():
        raise ValueError(f"no grid node within radius {radius} of {center}")
    return float(source.values[inside].max())


@dataclass(frozen=True)
class GrowthCurve:
    """Sampled ``(r, sup over B_r)`` pairs from one source."""

    radii: tuple[float, ...]
    sup_values: tuple[float, ...]
    source: str

    def __post_init__(self) -> None:
        r = np.asarray(self.radii)
        v = np.asarray(self.sup_values)
        if len(r) != len(v) or len(r) < 1:
            raise ValueError("radii and sup_values must be equal-length and non-empty")
        if np.any(np.diff(r) <= 0.0) or r[0] <= 0.0:
            raise ValueError("radii must be positive and strictly increasing")
        if np.any(np.diff(v) < -1e-12 * np.abs(v[:-1])):
            raise ValueError("sup values over nested balls cannot decrease")

    def pair_slopes(self) -> np.ndarray:
        """Consecutive-pair slopes in log-log coordinates (needs positive sups)."""
        r = np.log(np.asarray(self.radii))
        v = np.log(np.asarray(self.sup_values))
        return np.diff(v) / np.diff(r)


def sup_growth_curve(source, radii: Sequence[float],
                     center: Sequence[float] | None = None) -> GrowthCurve:
    """Growth curve of a family (exact) or a field (node suprema over balls)."""
    radii = tuple(float(r) for r in radii)
    values = tuple(sup_over_ball(source, r, center) for r in radii)
    if hasattr(source, "kind"):
        tag = f"{source.kind}({source.parameter:g})"
    else:
        tag = source.source or "field"
    return GrowthCurve(radii=radii, sup_values=values, source=tag)


@dataclass(frozen=True)
class FitResult:
    """Log-log power-law fit of a growth curve.

    ``tail_liminf_slope`` is the minimum of the consecutive-pair slopes over
    the last half of the sampled radii, the finite-window rendering of a
    liminf at infinity; for exact power laws it equals the fitted exponent.
    """

    exponent: float
    log_intercept: float
    max_residual: float
    tail_liminf_slope: float

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "log_intercept": self.log_intercept,
            "max_residual": self.max_residual,
            "tail_liminf_slope": self.tail_liminf_slope,
        }


def fit_exponent(curve: GrowthCurve) -> FitResult:
    """Least-squares slope in (ln r, ln sup) plus the tail liminf slope."""
    if len(curve.radii) < 3:
        raise ValueError("need at least 3 radii to fit an exponent")
    v = np.asarray(curve.sup_values)
    if np.any(v <= 0.0):
        raise ValueError("all sup values must be positive to fit a power law")
    x = np.log(np.asarray(curve.radii))
    y = np.log(v)
    xm = x - x.mean()
    slope = float((xm @ (y - y.mean())) / (xm @ xm))
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    pair = curve.pair_slopes()
    tail = pair[(len(pair)) // 2:]
    return FitResult(exponent=slope, log_intercept=intercept,
                     max_residual=float(np.abs(residuals).max()),
                     tail_liminf_slope=float(tail.min()))


def iteration_exponent(eta: float, ratio: float) -> float:
    """Growth exponent ``ln(1/eta) / ln(ratio)`` produced by iterating the
    contraction ``sup(R) <= eta * sup(ratio * R)`` over dyadic-type radii;
    strictly decreasing in eta."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"contraction factor must lie in (0, 1), got {eta}")
    if ratio <= 1.0:
        raise ValueError(f"radius ratio must exceed 1, got {ratio}")
    return math.log(1.0 / eta) / math.log(ratio)


def worst_case_contraction(eta_measured: float) -> float:
    """Combine the measured contraction with the 15/16 dichotomy branch.

    The lower-bound certificate for the growth exponent uses the worse
    (larger) of the two, so it stays valid whichever branch of the argument
    fires at a given scale.
    """
    if not 0.0 < eta_measured < 1.0:
        raise ValueError(f"contraction factor must lie in (0, 1), got {eta_measured}")
    return max(15.0 / 16.0, eta_measured)


def curve_rows(curve: GrowthCurve) -> list[dict]:
    """CSV-ready rows ``(r, mu_plus, pair_slope)``; the first row has no slope."""
    slopes = [float("nan")] + list(curve.pair_slopes())
    return [{"r": r, "mu_plus": v, "pair_slope": s}
            for r, v, s in zip(curve.radii, curve.sup_values, slopes)]
