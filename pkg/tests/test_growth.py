import math

import numpy as np
import pytest

from dglab import counterexamples as cx
from dglab import degiorgi as dg
from dglab import geometry as geo
from dglab import growth as gr
from dglab import solver as sv


def test_curve_from_planar_family():
    fam = cx.Meyers2D(mu=0.5)
    curve = gr.sup_growth_curve(fam, [1.0, 4.0, 16.0])
    assert curve.sup_values == (1.0, 2.0, 4.0)
    assert curve.source == "meyers2d(0.5)"


def test_curve_from_constant_field_is_flat():
    g = geo.make_grid(2, (-2, -2), (2, 2), 32)
    curve = gr.sup_growth_curve(geo.constant_field(g, 1.5), [0.5, 1.0, 2.0])
    assert curve.sup_values == (1.5, 1.5, 1.5)


def test_curve_rejects_radius_beyond_grid():
    g = geo.make_grid(2, (-1, -1), (1, 1), 16)
    with pytest.raises(ValueError, match="exceeds the grid"):
        gr.sup_growth_curve(geo.constant_field(g, 1.0), [0.5, 5.0])


def test_curve_validation():
    with pytest.raises(ValueError):
        gr.GrowthCurve((1.0, 1.0), (1.0, 2.0), "x")  # radii not increasing
    with pytest.raises(ValueError):
        gr.GrowthCurve((1.0, 2.0), (2.0, 1.0), "x")  # sup decreased


def test_solved_field_curve_tracks_analytic_growth():
    fam = cx.Meyers2D(mu=0.5)
    grid = geo.make_grid(2, (0.05, -0.55), (1.05, 0.55), (32, 35))  # h = 1/32
    problem = sv.DirichletProblem(grid=grid, coefficient=fam,
                                  boundary=lambda pts: fam.value(pts))
    u = sv.solve_linear(problem, tolerance=1e-11)
    radii = [0.4 + 1e-9, 0.6 + 1e-9, 0.9 + 1e-9]  # slack keeps boundary nodes in
    solved = gr.sup_growth_curve(u, radii, center=(0.0, 0.0))
    for r, value in zip(radii, solved.sup_values):
        assert abs(value - cx.exact_growth(fam, r)) / cx.exact_growth(fam, r) < 0.02


def test_fit_exact_power_law():
    radii = [1.0, 2.0, 4.0, 8.0, 16.0]
    curve = gr.GrowthCurve(tuple(radii), tuple(r**0.5 for r in radii), "exact")
    fit = gr.fit_exponent(curve)
    assert abs(fit.exponent - 0.5) < 1e-10
    assert fit.max_residual < 1e-10
    assert fit.tail_liminf_slope == pytest.approx(fit.exponent, abs=1e-12)


def test_fit_quartic_family_exponent():
    fam = cx.Quartic4D(alpha=0.2)
    curve = gr.sup_growth_curve(fam, [4.0**k for k in range(5)])
    fit = gr.fit_exponent(curve)
    assert fit.exponent == pytest.approx(2.0 / 3.0 - 0.2, abs=1e-10)


def test_fit_flat_segment_pulls_tail_below_mean_slope():
    curve = gr.GrowthCurve((1.0, 2.0, 4.0, 8.0), (1.0, 2.0, 2.0, 4.0), "steps")
    fit = gr.fit_exponent(curve)
    assert fit.tail_liminf_slope <= fit.exponent + 1e-12


def test_fit_requires_enough_positive_samples():
    with pytest.raises(ValueError):
        gr.fit_exponent(gr.GrowthCurve((1.0, 2.0), (1.0, 2.0), "x"))
    with pytest.raises(ValueError):
        gr.fit_exponent(gr.GrowthCurve((1.0, 2.0, 4.0), (0.0, 1.0, 2.0), "x"))


def test_fit_scale_invariance():
    radii = np.array([1.0, 3.0, 9.0, 27.0])
    sups = radii**0.37
    base = gr.fit_exponent(gr.GrowthCurve(tuple(radii), tuple(sups), "a"))
    lam = 7.3
    scaled = gr.fit_exponent(gr.GrowthCurve(tuple(lam * radii),
                                            tuple((lam * radii) ** 0.37), "b"))
    assert scaled.exponent == pytest.approx(base.exponent, abs=1e-12)


def test_iteration_exponent_reference_values():
    assert gr.iteration_exponent(0.25, 4.0) == pytest.approx(1.0, rel=1e-14)
    assert gr.iteration_exponent(0.5, 4.0) == pytest.approx(0.5, rel=1e-14)


def test_iteration_exponent_monotone_in_contraction():
    assert gr.iteration_exponent(0.9, 4.0) < gr.iteration_exponent(0.5, 4.0)


def test_iteration_exponent_rejections():
    with pytest.raises(ValueError):
        gr.iteration_exponent(1.0, 4.0)
    with pytest.raises(ValueError):
        gr.iteration_exponent(0.5, 1.0)


def test_worst_case_contraction():
    assert gr.worst_case_contraction(0.5) == 15.0 / 16.0
    assert gr.worst_case_contraction(0.99) == 0.99
    with pytest.raises(ValueError):
        gr.worst_case_contraction(1.2)


def test_worst_case_certificate_exponent():
    exponent = gr.iteration_exponent(gr.worst_case_contraction(0.5), 4.0)
    assert exponent == pytest.approx(math.log(16.0 / 15.0) / math.log(4.0), rel=1e-14)
    assert exponent == pytest.approx(0.0465, abs=1e-3)


@pytest.mark.parametrize("fam", [cx.Meyers2D(mu=0.5), cx.Cone3D(alpha=-0.5),
                                 cx.Quartic4D(alpha=0.2)], ids=lambda f: f.kind)
def test_measured_contraction_recovers_exact_exponent(fam):
    eta = dg.sup_contraction_factor(fam, 4.0)  # inner radius 1, outer 4
    assert gr.iteration_exponent(eta, 4.0) == pytest.approx(fam.growth_exponent, abs=1e-12)


@pytest.mark.parametrize("fam", [cx.Meyers2D(mu=0.5), cx.Cone3D(alpha=-0.5),
                                 cx.Quartic4D(alpha=0.2)], ids=lambda f: f.kind)
def test_fitted_exponent_strictly_inside_unit_interval(fam):
    curve = gr.sup_growth_curve(fam, [4.0**k for k in range(5)])
    fit = gr.fit_exponent(curve)
    assert 0.0 < fit.exponent < 1.0


def test_curve_rows_layout():
    fam = cx.Meyers2D(mu=0.5)
    rows = gr.curve_rows(gr.sup_growth_curve(fam, [1.0, 4.0, 16.0]))
    assert [row["r"] for row in rows] == [1.0, 4.0, 16.0]
    assert math.isnan(rows[0]["pair_slope"])
    assert rows[1]["pair_slope"] == pytest.approx(0.5, rel=1e-12)
