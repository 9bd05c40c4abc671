import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dglab import geometry as geo


def test_make_grid_2d_spacing_and_node_count():
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    assert g.spacing == (0.25, 0.25)
    assert g.num_nodes == 81


def test_make_grid_3d_spacing():
    g = geo.make_grid(3, (0, 0, 0), (2, 2, 2), 4)
    assert g.spacing == (0.5, 0.5, 0.5)


def test_make_grid_4d_node_count():
    g = geo.make_grid(4, (-1,) * 4, (1,) * 4, 4)
    assert g.num_nodes == 5**4 == 625


@pytest.mark.parametrize("bad", [1, 5, 7])
def test_make_grid_rejects_dim(bad):
    with pytest.raises(ValueError):
        geo.make_grid(bad, (0,) * max(bad, 2), (1,) * max(bad, 2), 8)


def test_make_grid_rejects_degenerate_box():
    with pytest.raises(ValueError):
        geo.make_grid(2, (0, 1), (1, 1), 8)
    with pytest.raises(ValueError):
        geo.make_grid(2, (0, 2), (1, 1), 8)


def test_make_grid_rejects_too_few_cells():
    with pytest.raises(ValueError):
        geo.make_grid(2, (0, 0), (1, 1), 3)


def test_node_coordinates_bit_exact():
    g = geo.make_grid(2, (-1.0, 0.3), (1.0, 0.9), (8, 6))
    for i in range(g.dim):
        h = g.spacing[i]
        expected = np.array([g.lower[i] + k * h for k in range(g.cells[i] + 1)])
        assert np.array_equal(g.axis(i), expected)


def test_gradient_constant_is_zero():
    g = geo.make_grid(3, (0, 0, 0), (1, 1, 1), 6)
    grad = geo.gradient(geo.constant_field(g, 3.7))
    assert np.abs(grad).max() == 0.0


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_gradient_affine_exact(dim):
    g = geo.make_grid(dim, (-1,) * dim, (1,) * dim, 5)
    coeffs = np.arange(1, dim + 1, dtype=float)
    field = geo.field_from_function(g, lambda pts: pts @ coeffs + 0.5)
    grad = geo.gradient(field)
    err = np.abs(grad - coeffs).max()
    assert err < 1e-12


def test_gradient_quadratic_exact_at_interior_node():
    # central difference of a quadratic is exact; node (0.5, 0) on an h=0.25 grid
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    field = geo.field_from_function(g, lambda pts: pts[..., 0] ** 2 + pts[..., 1] ** 2)
    grad = geo.gradient(field)
    i = int(round((0.5 - g.lower[0]) / g.spacing[0]))
    j = int(round((0.0 - g.lower[1]) / g.spacing[1]))
    assert grad[i, j, 0] == 1.0
    assert grad[i, j, 1] == 0.0


def test_integrate_constant_over_unit_box():
    g = geo.make_grid(2, (0, 0), (1, 1), 16)
    assert abs(geo.integrate(geo.constant_field(g, 1.0)) - 1.0) < 1e-12


def test_integrate_unit_disk_area():
    g = geo.make_grid(2, (-1, -1), (1, 1), 128)  # h = 1/64
    mask = geo.ball_mask(g, (0, 0), 1.0)
    area = geo.integrate(geo.constant_field(g, 1.0), mask)
    assert abs(area - math.pi) / math.pi < 0.02


def test_integrate_empty_mask_is_zero():
    g = geo.make_grid(2, (0, 0), (1, 1), 8)
    empty = geo.SetMask(g, np.zeros(g.shape, dtype=bool))
    field = geo.field_from_function(g, lambda pts: pts[..., 0])
    assert geo.integrate(field, empty) == 0.0


def test_integrate_rejects_grid_mismatch():
    g1 = geo.make_grid(2, (0, 0), (1, 1), 8)
    g2 = geo.make_grid(2, (0, 0), (1, 1), 16)
    with pytest.raises(ValueError):
        geo.integrate(geo.constant_field(g1, 1.0), geo.full_mask(g2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_integrate_monotone_in_field(seed):
    rng = np.random.default_rng(seed)
    g = geo.make_grid(2, (0, 0), (1, 1), 6)
    a = rng.standard_normal(g.shape)
    b = a + rng.uniform(0.0, 1.0, g.shape)
    mask = geo.SetMask(g, rng.random(g.shape) < 0.5)
    assert geo.integrate(geo.ScalarField(g, a), mask) <= geo.integrate(
        geo.ScalarField(g, b), mask) + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_integrate_linear_in_field(seed):
    rng = np.random.default_rng(seed)
    g = geo.make_grid(2, (0, 0), (1, 1), 6)
    a = rng.standard_normal(g.shape)
    b = rng.standard_normal(g.shape)
    mask = geo.SetMask(g, rng.random(g.shape) < 0.5)
    lhs = geo.integrate(geo.ScalarField(g, 2.0 * a + 3.0 * b), mask)
    rhs = 2.0 * geo.integrate(geo.ScalarField(g, a), mask) \
        + 3.0 * geo.integrate(geo.ScalarField(g, b), mask)
    assert abs(lhs - rhs) < 1e-10


def test_truncate_constant_above_window():
    g = geo.make_grid(2, (0, 0), (1, 1), 4)
    out = geo.truncate(geo.constant_field(g, 5.0), 1.0, 3.0)
    assert np.all(out.values == 2.0)


def test_truncate_constant_below_window():
    g = geo.make_grid(2, (0, 0), (1, 1), 4)
    out = geo.truncate(geo.constant_field(g, 0.0), 1.0, 3.0)
    assert np.all(out.values == 0.0)


def test_truncate_ramp():
    g = geo.make_grid(2, (0, 0), (4, 1), (16, 4))
    field = geo.field_from_function(g, lambda pts: pts[..., 0])
    out = geo.truncate(field, 1.0, 3.0)
    x = g.node_points()[..., 0]
    expected = np.where(x > 3.0, 2.0, np.where(x < 1.0, 0.0, x - 1.0))
    assert np.array_equal(out.values, expected)


def test_truncate_rejects_bad_window():
    g = geo.make_grid(2, (0, 0), (1, 1), 4)
    with pytest.raises(ValueError):
        geo.truncate(geo.constant_field(g, 0.0), 3.0, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000),
       st.floats(-2, 2), st.floats(0.1, 3))
def test_truncate_range_and_lipschitz(seed, k, width):
    rng = np.random.default_rng(seed)
    g = geo.make_grid(2, (0, 0), (1, 1), 5)
    l = k + width
    u = rng.uniform(-5, 5, g.shape)
    v = u + rng.uniform(-0.5, 0.5, g.shape)
    tu = geo.truncate(geo.ScalarField(g, u), k, l).values
    tv = geo.truncate(geo.ScalarField(g, v), k, l).values
    assert tu.min() >= 0.0 and tu.max() <= (l - k) + 1e-15
    assert np.abs(tu - tv).max() <= np.abs(u - v).max() + 1e-15


def test_extend_by_zero_half_space():
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    mask = geo.half_space_mask(g, axis=1, threshold=0.0)
    out = geo.extend_by_zero(geo.constant_field(g, 1.0), mask)
    y = g.node_points()[..., 1]
    assert np.all(out.values[y <= 0.0] == 0.0)
    assert np.all(out.values[y > 0.0] == 1.0)


def test_extend_by_zero_idempotent_and_sup():
    rng = np.random.default_rng(7)
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    mask = geo.half_space_mask(g, axis=0)
    vals = rng.uniform(0.0, 2.0, g.shape)
    field = geo.ScalarField(g, vals)
    once = geo.extend_by_zero(field, mask)
    twice = geo.extend_by_zero(once, mask)
    assert np.array_equal(once.values, twice.values)
    assert once.values.max() <= field.values.max()


def test_extend_by_zero_rejects_negative_support():
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    mask = geo.half_space_mask(g, axis=0)
    field = geo.constant_field(g, -1.0)
    with pytest.raises(ValueError):
        geo.extend_by_zero(field, mask)


def test_extend_by_zero_matches_planar_family_sample():
    # the analytic family already vanishes on {x = 0}, so zeroing the closed
    # half-space only removes its negative lobe
    from dglab import counterexamples as cx

    fam = cx.Meyers2D(mu=0.5)
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    sample = cx.sample_on_grid(fam, g)
    extended = geo.extend_by_zero(
        geo.ScalarField(g, np.where(g.node_points()[..., 0] <= 0, 0.0, sample.values)),
        fam.extension_mask(g))
    direct = cx.sample_zero_extended(fam, g)
    assert np.array_equal(extended.values, direct.values)
    x = g.node_points()[..., 0]
    assert np.all(direct.values[x == 0.0] == 0.0)
    assert np.array_equal(direct.values[x > 0.0], sample.values[x > 0.0])


def test_hyperplane_slab_mask_thickness():
    g = geo.make_grid(3, (-1, -1, -1), (1, 1, 1), 8)
    mask = geo.hyperplane_slab_mask(g, 1)
    pts = g.node_points()
    on = (np.abs(pts[..., 1]) <= 0.5 * g.spacing[1]) & (np.abs(pts[..., 2]) <= 0.5 * g.spacing[2])
    assert np.array_equal(mask.values, on)
    assert mask.tag == "hyperplane-slab(1)"
    assert mask.count > 0


def test_mask_combinators():
    g = geo.make_grid(2, (-1, -1), (1, 1), 8)
    ball = geo.ball_mask(g, (0, 0), 0.5)
    half = geo.half_space_mask(g, axis=0)
    both = ball & half
    assert np.array_equal(both.values, ball.values & half.values)
    assert np.array_equal((~ball).values, ~ball.values)
    assert np.array_equal((ball | half).values, ball.values | half.values)


def test_scalar_field_rejects_nonfinite():
    g = geo.make_grid(2, (0, 0), (1, 1), 4)
    vals = np.zeros(g.shape)
    vals[0, 0] = np.nan
    with pytest.raises(ValueError):
        geo.ScalarField(g, vals)
