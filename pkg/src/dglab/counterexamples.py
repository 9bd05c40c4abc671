"""Exact analytic solution families with limited regularity.

Three closed-form families of non-negative solutions (or sub-solutions) to
divergence-form equations with bounded measurable coefficients, each growing
like a power ``r**gamma`` with ``gamma`` strictly below 1.  Every family
carries its value, gradient, coefficient matrix and flux in closed form, so
it doubles as a solver oracle and as a worked growth-exponent benchmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ScalarField, SetMask, UniformGrid, half_space_mask

_EXCLUSION_RADIUS = 1e-10


def _pts(points, ndim: int) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != ndim:
        raise ValueError(f"points must have last dimension {ndim}, got shape {pts.shape}")
    return pts


def _guard(dist2: np.ndarray, what: str) -> None:
    if np.any(dist2 <= _EXCLUSION_RADIUS**2):
        raise ValueError(f"evaluation within {_EXCLUSION_RADIUS} of the excluded set ({what})")


@dataclass(frozen=True)
class Meyers2D:
    """Planar family ``u = (x^2+y^2)^((mu-1)/2) * x`` with matrix eigenvalues {mu^2, 1}.

    Solves the linear divergence-form equation away from the origin and
    vanishes on the line {x = 0}.  ``extra_dims`` appends passive coordinates
    (the cylindrical extension), keeping the same ellipticity constants.
    """

    mu: float
    extra_dims: int = 0

    kind = "meyers2d"
    p_exponent = 2.0

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")
        if self.extra_dims not in (0, 1, 2):
            raise ValueError(f"extra_dims must be 0, 1 or 2, got {self.extra_dims}")

    @property
    def ndim(self) -> int:
        return 2 + self.extra_dims

    @property
    def growth_exponent(self) -> float:
        return self.mu

    @property
    def smallest_eigenvalue(self) -> float:
        return self.mu**2

    @property
    def parameter(self) -> float:
        return self.mu

    def value(self, points) -> np.ndarray:
        pts = _pts(points, self.ndim)
        x, y = pts[..., 0], pts[..., 1]
        rho2 = x * x + y * y
        _guard(rho2, "origin axis of the planar family")
        return rho2 ** ((self.mu - 1.0) / 2.0) * x

    def grad(self, points) -> np.ndarray:
        pts = _pts(points, self.ndim)
        x, y = pts[..., 0], pts[..., 1]
        rho2 = x * x + y * y
        _guard(rho2, "origin axis of the planar family")
        f = rho2 ** ((self.mu - 3.0) / 2.0)
        out = np.zeros_like(pts)
        out[..., 0] = f * (rho2 + (self.mu - 1.0) * x * x)
        out[..., 1] = f * (self.mu - 1.0) * x * y
        return out

    def matrix(self, points) -> np.ndarray:
        pts = _pts(points, self.ndim)
        x, y = pts[..., 0], pts[..., 1]
        rho2 = x * x + y * y
        _guard(rho2, "origin axis of the planar family")
        k = 1.0 - self.mu**2
        n = self.ndim
        out = np.zeros(pts.shape[:-1] + (n, n))
        out[..., 0, 0] = 1.0 - k * y * y / rho2
        out[..., 1, 1] = 1.0 - k * x * x / rho2
        out[..., 0, 1] = out[..., 1, 0] = k * x * y / rho2
        for j in range(2, n):
            out[..., j, j] = 1.0
        return out

    def eigenvalues(self) -> tuple[float, ...]:
        return tuple(sorted((self.mu**2, 1.0) + (1.0,) * self.extra_dims))

    def vanishing_predicate(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float)[..., 0] == 0.0

    def extension_mask(self, grid: UniformGrid) -> SetMask:
        return half_space_mask(grid, axis=0, threshold=0.0)


@dataclass(frozen=True)
class Cone3D:
    """3D family ``u = x1 * |x|**alpha`` with matrix eigenvalues {1, 1-C, 1-C}.

    ``2C = -alpha (alpha + 3)`` with alpha in (-1, 0); the matrix is
    ``(1 - C) I + C x x^T / |x|^2``.  Vanishes on the plane {x1 = 0}.
    """

    alpha: float

    kind = "cone3d"
    p_exponent = 2.0
    ndim = 3

    def __post_init__(self) -> None:
        if not -1.0 < self.alpha < 0.0:
            raise ValueError(f"alpha must lie in (-1, 0), got {self.alpha}")

    @property
    def big_c(self) -> float:
        return -self.alpha * (self.alpha + 3.0) / 2.0

    @property
    def growth_exponent(self) -> float:
        return 1.0 + self.alpha

    @property
    def smallest_eigenvalue(self) -> float:
        return 1.0 - self.big_c

    @property
    def parameter(self) -> float:
        return self.alpha

    def value(self, points) -> np.ndarray:
        pts = _pts(points, 3)
        s = np.sum(pts * pts, axis=-1)
        _guard(s, "origin")
        return pts[..., 0] * s ** (self.alpha / 2.0)

    def grad(self, points) -> np.ndarray:
        pts = _pts(points, 3)
        s = np.sum(pts * pts, axis=-1)
        _guard(s, "origin")
        out = self.alpha * pts[..., 0:1] * s[..., None] ** (self.alpha / 2.0 - 1.0) * pts
        out[..., 0] += s ** (self.alpha / 2.0)
        return out

    def matrix(self, points) -> np.ndarray:
        pts = _pts(points, 3)
        s = np.sum(pts * pts, axis=-1)
        _guard(s, "origin")
        c = self.big_c
        eye = np.eye(3) * (1.0 - c)
        outer = pts[..., :, None] * pts[..., None, :] / s[..., None, None]
        return eye + c * outer

    def eigenvalues(self) -> tuple[float, ...]:
        c = self.big_c
        return tuple(sorted((1.0, 1.0 - c, 1.0 - c)))

    def vanishing_predicate(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float)[..., 0] == 0.0

    def extension_mask(self, grid: UniformGrid) -> SetMask:
        return half_space_mask(grid, axis=0, threshold=0.0)


@dataclass(frozen=True)
class Quartic4D:
    """4D sub-solution ``u = (x1^2+x2^2)^(1/3) / |x|^alpha`` of a 4-Laplacian-type equation.

    ``C = 1 - (2 - 3 alpha)^2 / 8`` with alpha in (0, 2/3); the divergence of
    the flux is positive in closed form, which is what makes u a
    sub-solution.  Vanishes on the 2-plane {x1 = x2 = 0}; grows like
    ``r**(2/3 - alpha)``.
    """

    alpha: float

    kind = "quartic4d"
    p_exponent = 4.0
    ndim = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 2.0 / 3.0:
            raise ValueError(f"alpha must lie in (0, 2/3), got {self.alpha}")

    @property
    def big_c(self) -> float:
        return 1.0 - (2.0 - 3.0 * self.alpha) ** 2 / 8.0

    @property
    def growth_exponent(self) -> float:
        return 2.0 / 3.0 - self.alpha

    @property
    def smallest_eigenvalue(self) -> float:
        return 1.0 - self.big_c

    @property
    def parameter(self) -> float:
        return self.alpha

    def _sigma_s(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pts = _pts(points, 4)
        sigma = pts[..., 0] ** 2 + pts[..., 1] ** 2
        s = sigma + pts[..., 2] ** 2 + pts[..., 3] ** 2
        return pts, sigma, s

    def value(self, points) -> np.ndarray:
        pts, sigma, s = self._sigma_s(points)
        _guard(s, "origin")
        return sigma ** (1.0 / 3.0) * s ** (-self.alpha / 2.0)

    def grad(self, points) -> np.ndarray:
        pts, sigma, s = self._sigma_s(points)
        _guard(sigma, "plane {x1 = x2 = 0}")
        a = self.alpha
        out = np.empty_like(pts)
        planar = (2.0 / 3.0) * sigma ** (-2.0 / 3.0) * s ** (-a / 2.0) \
            - a * sigma ** (1.0 / 3.0) * s ** (-a / 2.0 - 1.0)
        radial = -a * sigma ** (1.0 / 3.0) * s ** (-a / 2.0 - 1.0)
        out[..., 0] = planar * pts[..., 0]
        out[..., 1] = planar * pts[..., 1]
        out[..., 2] = radial * pts[..., 2]
        out[..., 3] = radial * pts[..., 3]
        return out

    def grad_norm_squared(self, points) -> np.ndarray:
        """|grad u|^2 in closed form (used to cross-check the assembled gradient)."""
        pts, sigma, s = self._sigma_s(points)
        _guard(sigma, "plane {x1 = x2 = 0}")
        a = self.alpha
        tail = pts[..., 2] ** 2 + pts[..., 3] ** 2
        return (4.0 * tail + sigma * (2.0 - 3.0 * a) ** 2) / (9.0 * sigma ** (1.0 / 3.0) * s ** (a + 1.0))

    def matrix(self, points) -> np.ndarray:
        pts, sigma, s = self._sigma_s(points)
        _guard(s, "origin")
        c = self.big_c
        eye = np.eye(4) * (1.0 - c)
        outer = pts[..., :, None] * pts[..., None, :] / s[..., None, None]
        return eye + c * outer

    def eigenvalues(self) -> tuple[float, ...]:
        c = self.big_c
        return tuple(sorted((1.0, 1.0 - c, 1.0 - c, 1.0 - c)))

    def divergence(self, points) -> np.ndarray:
        """Closed-form divergence of the flux: positive for every admissible alpha."""
        pts, sigma, s = self._sigma_s(points)
        _guard(s, "origin")
        a = self.alpha
        return (1.0 / 54.0) * s ** (-1.5 * a - 1.0) * (2.0 - 3.0 * a) ** 4

    def vanishing_predicate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts[..., 0] == 0.0) & (pts[..., 1] == 0.0)


Family = Meyers2D | Cone3D | Quartic4D

_PARAMETER_NAMES = {"meyers2d": "mu", "cone3d": "alpha", "quartic4d": "alpha"}


def make_family(kind: str, parameter: float, extra_dims: int = 0) -> Family:
    """Build a family from its wire-format name and single parameter."""
    if kind == "meyers2d":
        return Meyers2D(mu=float(parameter), extra_dims=extra_dims)
    if kind == "cone3d":
        return Cone3D(alpha=float(parameter))
    if kind == "quartic4d":
        return Quartic4D(alpha=float(parameter))
    raise ValueError(f"unknown family {kind!r}; expected one of {sorted(_PARAMETER_NAMES)}")


def parameter_name(kind: str) -> str:
    try:
        return _PARAMETER_NAMES[kind]
    except KeyError:
        raise ValueError(f"unknown family {kind!r}") from None


def evaluate(family: Family, points) -> np.ndarray:
    return family.value(points)


def evaluate_gradient(family: Family, points) -> np.ndarray:
    return family.grad(points)


def coefficient_matrix(family: Family, points) -> np.ndarray:
    return family.matrix(points)


def flux(family: Family, points, grad: np.ndarray | None = None) -> np.ndarray:
    """Coefficient matrix times gradient, with the ``|grad|^(p-2)`` factor for p = 4."""
    if grad is None:
        grad = family.grad(points)
    mat = family.matrix(points)
    out = np.einsum("...ij,...j->...i", mat, grad)
    if family.p_exponent == 4.0:
        out = out * np.sum(grad * grad, axis=-1)[..., None]
    return out


def divergence_closed_form(family: Family, points) -> np.ndarray:
    if not isinstance(family, Quartic4D):
        raise ValueError("closed-form flux divergence is only available for quartic4d")
    return family.divergence(points)


def residual_strong(family: Family, point, step: float) -> float:
    """Central-difference divergence of the analytic flux at one point.

    For the linear families this tends to 0 at second order in ``step``; for
    quartic4d it reproduces the closed-form divergence up to O(step^2).
    """
    point = np.asarray(point, dtype=float)
    n = family.ndim
    total = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        total += (flux(family, point + e)[i] - flux(family, point - e)[i]) / (2.0 * step)
    return float(total)


def exact_growth(family: Family, r: float) -> float:
    """Supremum of the family over the ball of radius r: exactly ``r**gamma``."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    return float(r ** family.growth_exponent)


def _bump(points: np.ndarray, center: np.ndarray, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Smooth compactly supported bump (max 1 at center) and its gradient."""
    d = points - center
    t2 = np.sum(d * d, axis=-1) / radius**2
    inside = t2 < 1.0
    phi = np.zeros(points.shape[:-1])
    one_minus = np.where(inside, 1.0 - t2, 1.0)
    phi[inside] = np.exp(1.0 - 1.0 / one_minus[inside])
    gphi = np.zeros_like(points)
    coef = np.where(inside, -2.0 * phi / (radius**2 * one_minus**2), 0.0)
    gphi = coef[..., None] * d
    return phi, gphi


def _bump_lattice(center: np.ndarray, radius: float, cells: int, ndim: int) -> tuple[np.ndarray, float]:
    """Midpoint-rule lattice covering the bump's bounding box."""
    h = 2.0 * radius / cells
    axes = [center[i] - radius + h * (np.arange(cells) + 0.5) for i in range(ndim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1).reshape(-1, ndim)
    return pts, h**ndim


def weak_subsolution_check(family: Family, test_bump_center, test_bump_radius: float,
                           quadrature_cells: int = 24, scale: float = 1.0) -> float:
    """Quadrature of flux . grad(bump) over the bump support.

    Non-positive (up to quadrature error) exactly when the family is a
    sub-solution; the value is linear in the bump, so ``scale`` multiplies
    it exactly.
    """
    if not isinstance(family, Quartic4D):
        raise ValueError("the weak sub-solution check applies to quartic4d only")
    center = np.asarray(test_bump_center, dtype=float)
    planar_dist = float(np.hypot(center[0], center[1]))
    if planar_dist <= test_bump_radius + 1e-9:
        raise ValueError("bump support intersects the excluded plane {x1 = x2 = 0}")
    pts, vol = _bump_lattice(center, test_bump_radius, quadrature_cells, family.ndim)
    _, gphi = _bump(pts, center, test_bump_radius)
    support = np.any(gphi != 0.0, axis=-1)
    flx = flux(family, pts[support])
    return float(np.sum(flx * gphi[support]) * vol * scale)


def weak_subsolution_oracle(family: Family, test_bump_center, test_bump_radius: float,
                            quadrature_cells: int = 24) -> float:
    """Independent check value: minus the closed-form divergence weighted by the bump."""
    if not isinstance(family, Quartic4D):
        raise ValueError("the weak sub-solution check applies to quartic4d only")
    center = np.asarray(test_bump_center, dtype=float)
    pts, vol = _bump_lattice(center, test_bump_radius, quadrature_cells, family.ndim)
    phi, _ = _bump(pts, center, test_bump_radius)
    support = phi > 0.0
    div = divergence_closed_form(family, pts[support])
    return float(-np.sum(div * phi[support]) * vol)


def sample_on_grid(family: Family, grid: UniformGrid) -> ScalarField:
    """Sample the family at every node, with its continuous extension by zero
    on the vanishing set (where the raw formula degenerates to 0/0)."""
    if grid.dim != family.ndim:
        raise ValueError(f"grid dimension {grid.dim} does not match family dimension {family.ndim}")
    pts = grid.node_points()
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = _raw_value(family, pts)
    bad = ~np.isfinite(vals)
    if bad.any():
        on_zero_set = family.vanishing_predicate(pts) | (np.sum(pts * pts, axis=-1) == 0.0)
        if not np.all(on_zero_set[bad]):
            raise ValueError("non-finite sample away from the vanishing set")
        vals = np.where(bad, 0.0, vals)
    return ScalarField(grid, vals, source=f"{family.kind}({family.parameter:g})")


def _raw_value(family: Family, pts: np.ndarray) -> np.ndarray:
    # unguarded closed form; only sample_on_grid should call this
    if isinstance(family, Meyers2D):
        x, y = pts[..., 0], pts[..., 1]
        rho2 = x * x + y * y
        return rho2 ** ((family.mu - 1.0) / 2.0) * x
    if isinstance(family, Cone3D):
        s = np.sum(pts * pts, axis=-1)
        return pts[..., 0] * s ** (family.alpha / 2.0)
    sigma = pts[..., 0] ** 2 + pts[..., 1] ** 2
    s = np.sum(pts * pts, axis=-1)
    return sigma ** (1.0 / 3.0) * s ** (-family.alpha / 2.0)


def sample_zero_extended(family: Family, grid: UniformGrid) -> ScalarField:
    """Non-negative grid realization: the sample, extended by zero across the
    half-space behind the vanishing hyperplane (no-op for quartic4d)."""
    field = sample_on_grid(family, grid)
    if isinstance(family, Quartic4D):
        return field
    mask = family.extension_mask(grid)
    vals = np.where(mask.values, 0.0, field.values)
    return ScalarField(grid, vals, source=field.source)
