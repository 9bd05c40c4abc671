"""Uniform box grids, node masks, and the discrete calculus on them.

Everything here is a pure function of immutable inputs.  Reductions go
through numpy's pairwise summation, so results are bit-reproducible for a
fixed grid shape regardless of how callers parallelize over problems.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class UniformGrid:
    """Axis-aligned box discretized with uniform spacing per axis.

    Node k along axis i sits exactly at ``lower[i] + k * spacing[i]``,
    k = 0..cells[i]; coordinates are reproducible bit-exactly from the
    stored fields.
    """

    dim: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"grid dimension must be at least 2, got {self.dim}")
        if not (len(self.lower) == len(self.upper) == len(self.cells) == self.dim):
            raise ValueError("lower, upper and cells must all have length dim")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"degenerate box: lower={self.lower} upper={self.upper}")
        for c in self.cells:
            if int(c) < 4:
                raise ValueError(f"need at least 4 cells per axis, got {self.cells}")

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / c for lo, hi, c in zip(self.lower, self.upper, self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        """Node counts per axis."""
        return tuple(c + 1 for c in self.cells)

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.upper, self.lower)))

    def axis(self, i: int) -> np.ndarray:
        return self.lower[i] + self.spacing[i] * np.arange(self.cells[i] + 1)

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*(self.axis(i) for i in range(self.dim)), indexing="ij")

    def node_points(self) -> np.ndarray:
        """Node coordinates, shape ``(*shape, dim)``."""
        return np.stack(self.meshgrid(), axis=-1)

    def node_weights(self) -> np.ndarray:
        """Trapezoidal quadrature weight of every node (tensor-product rule)."""
        w = np.array(1.0)
        for i in range(self.dim):
            tau = np.full(self.cells[i] + 1, self.spacing[i])
            tau[0] *= 0.5
            tau[-1] *= 0.5
            w = np.multiply.outer(w, tau)
        return w

    def contains_ball(self, center: Sequence[float], radius: float) -> bool:
        c = np.asarray(center, dtype=float)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return bool(np.all(c - radius >= lo - 1e-12) and np.all(c + radius <= hi + 1e-12))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "lower": list(self.lower),
            "upper": list(self.upper),
            "cells": list(self.cells),
        }

    @staticmethod
    def from_dict(d: dict) -> "UniformGrid":
        return UniformGrid(
            dim=int(d["dim"]),
            lower=tuple(float(x) for x in d["lower"]),
            upper=tuple(float(x) for x in d["upper"]),
            cells=tuple(int(c) for c in d["cells"]),
        )


def make_grid(dim: int, lower: Sequence[float], upper: Sequence[float],
              cells_per_axis: int | Sequence[int]) -> UniformGrid:
    """Validated grid constructor.

    Only dimensions 2, 3 and 4 are accepted: the finite-difference stencils
    elsewhere in the package are not implemented beyond 4D.
    """
    if dim not in (2, 3, 4):
        raise ValueError(f"dim must be 2, 3 or 4 (solver stencils stop at 4D), got {dim}")
    if np.isscalar(cells_per_axis):
        cells = (int(cells_per_axis),) * dim
    else:
        cells = tuple(int(c) for c in cells_per_axis)
    return UniformGrid(dim=dim,
                       lower=tuple(float(x) for x in lower),
                       upper=tuple(float(x) for x in upper),
                       cells=cells)


@dataclass(frozen=True)
class SetMask:
    """Boolean node set on a grid, with a semantic tag.

    Tags in use: ``half-space``, ``hyperplane-slab(M)``, ``ball``, ``custom``.
    """

    grid: UniformGrid
    values: np.ndarray
    tag: str = "custom"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=bool)
        if vals.shape != self.grid.shape:
            raise ValueError(f"mask shape {vals.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def count(self) -> int:
        return int(self.values.sum())

    @property
    def is_empty(self) -> bool:
        return not bool(self.values.any())

    def __and__(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self.grid, other.grid)
        return SetMask(self.grid, self.values & other.values, "custom")

    def __or__(self, other: "SetMask") -> "SetMask":
        _check_same_grid(self.grid, other.grid)
        return SetMask(self.grid, self.values | other.values, "custom")

    def __invert__(self) -> "SetMask":
        return SetMask(self.grid, ~self.values, "custom")


def full_mask(grid: UniformGrid) -> SetMask:
    return SetMask(grid, np.ones(grid.shape, dtype=bool), "custom")


def predicate_mask(grid: UniformGrid, predicate: Callable[[np.ndarray], np.ndarray],
                   tag: str = "custom") -> SetMask:
    """Mask from a vectorized predicate on node coordinates ``(..., dim)``."""
    return SetMask(grid, np.asarray(predicate(grid.node_points()), dtype=bool), tag)


def ball_mask(grid: UniformGrid, center: Sequence[float], radius: float) -> SetMask:
    """Closed ball by center-distance test; no cut-cell treatment."""
    pts = grid.node_points()
    c = np.asarray(center, dtype=float)
    dist2 = np.sum((pts - c) ** 2, axis=-1)
    return SetMask(grid, dist2 <= radius * radius, "ball")


def half_space_mask(grid: UniformGrid, axis: int = -1, threshold: float = 0.0) -> SetMask:
    """Nodes with ``x[axis] <= threshold``."""
    axis = axis % grid.dim
    coord = grid.meshgrid()[axis]
    return SetMask(grid, coord <= threshold, "half-space")


def hyperplane_slab_mask(grid: UniformGrid, m: int) -> SetMask:
    """One-cell thickening of the plane spanned by the first ``m`` axes.

    Marks nodes with ``|x_j| <= h_j / 2`` for every pinned axis j >= m; the
    thickness is tied to the spacing so the set shrinks under refinement.
    """
    if not 1 <= m <= grid.dim - 1:
        raise ValueError(f"slab dimension must be in 1..{grid.dim - 1}, got {m}")
    mesh = grid.meshgrid()
    vals = np.ones(grid.shape, dtype=bool)
    for j in range(m, grid.dim):
        vals &= np.abs(mesh[j]) <= 0.5 * grid.spacing[j]
    return SetMask(grid, vals, f"hyperplane-slab({m})")


def disk_mask(grid: UniformGrid, radius: float, plane_axes: tuple[int, int] = (0, 1)) -> SetMask:
    """One-cell-thick disk: slab in the remaining axes, transverse radius test."""
    mesh = grid.meshgrid()
    r2 = np.zeros(grid.shape)
    vals = np.ones(grid.shape, dtype=bool)
    for j in range(grid.dim):
        if j in plane_axes:
            r2 = r2 + mesh[j] ** 2
        else:
            vals &= np.abs(mesh[j]) <= 0.5 * grid.spacing[j]
    vals &= r2 <= radius * radius
    return SetMask(grid, vals, "custom")


def segment_mask(grid: UniformGrid, lo: float, hi: float, axis: int = -1) -> SetMask:
    """One-cell-thick straight segment ``{x_axis in [lo, hi]}`` through the origin."""
    axis = axis % grid.dim
    mesh = grid.meshgrid()
    vals = (mesh[axis] >= lo) & (mesh[axis] <= hi)
    for j in range(grid.dim):
        if j != axis:
            vals &= np.abs(mesh[j]) <= 0.5 * grid.spacing[j]
    return SetMask(grid, vals, "custom")


@dataclass(frozen=True)
class ScalarField:
    """One finite value per grid node, optionally tagged with its analytic source."""

    grid: UniformGrid
    values: np.ndarray
    source: str | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError(f"field shape {vals.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must all be finite")
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, source: str | None = None) -> "ScalarField":
        return ScalarField(self.grid, values, source)


def field_from_function(grid: UniformGrid, fn: Callable[[np.ndarray], np.ndarray],
                        source: str | None = None) -> ScalarField:
    """Sample a vectorized function of node coordinates ``(..., dim)``."""
    return ScalarField(grid, np.asarray(fn(grid.node_points()), dtype=float), source)


def constant_field(grid: UniformGrid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)))


def _check_same_grid(a: UniformGrid, b: UniformGrid) -> None:
    if a != b:
        raise ValueError("operands live on different grids")


def gradient(field: ScalarField) -> np.ndarray:
    """Nodal gradient, shape ``(*shape, dim)``.

    Central differences at interior nodes, second-order one-sided stencils at
    boundary nodes; exact on affine fields at every node.
    """
    comps = np.gradient(field.values, *field.grid.spacing, edge_order=2)
    return np.stack(comps, axis=-1)


def integrate(field: ScalarField, mask: SetMask | None = None) -> float:
    """Trapezoidal-weighted sum of the field over the masked nodes.

    Linear in the field; returns 0 for an empty mask.
    """
    grid = field.grid
    if mask is None:
        mask = full_mask(grid)
    _check_same_grid(grid, mask.grid)
    if mask.is_empty:
        return 0.0
    contrib = grid.node_weights() * field.values
    return float(contrib[mask.values].sum())


def mask_measure(mask: SetMask) -> float:
    """Trapezoidal measure carried by the masked nodes."""
    if mask.is_empty:
        return 0.0
    return float(mask.grid.node_weights()[mask.values].sum())


def mean_over(field: ScalarField, mask: SetMask) -> float:
    """Integral average of the field over the mask."""
    meas = mask_measure(mask)
    if meas == 0.0:
        raise ValueError("mean over an empty mask")
    return integrate(field, mask) / meas


def masked_sup(field: ScalarField, mask: SetMask) -> float:
    if mask.is_empty:
        raise ValueError("supremum over an empty mask")
    return float(field.values[mask.values].max())


def masked_inf(field: ScalarField, mask: SetMask) -> float:
    if mask.is_empty:
        raise ValueError("infimum over an empty mask")
    return float(field.values[mask.values].min())


def truncate(field: ScalarField, k: float, l: float) -> ScalarField:
    """Two-level clamp: 0 below k, ``u - k`` on [k, l], ``l - k`` above l."""
    if not l > k:
        raise ValueError(f"truncation needs l > k, got k={k}, l={l}")
    return ScalarField(field.grid, np.clip(field.values - k, 0.0, l - k))


def positive_part(field: ScalarField, k: float, sign: str = "+") -> ScalarField:
    """``(u - k)_+`` or ``(u - k)_-`` as a non-negative field."""
    if sign == "+":
        vals = np.maximum(field.values - k, 0.0)
    elif sign == "-":
        vals = np.maximum(k - field.values, 0.0)
    else:
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return ScalarField(field.grid, vals)


def extend_by_zero(field: ScalarField, vanishing_mask: SetMask) -> ScalarField:
    """Force the field to zero on the mask; idempotent.

    The field must be non-negative off the mask (its support after the
    extension), so the extension never raises the supremum.
    """
    _check_same_grid(field.grid, vanishing_mask.grid)
    off = ~vanishing_mask.values
    if off.any() and field.values[off].min() < -1e-12:
        raise ValueError("field must be non-negative outside the vanishing mask")
    vals = np.where(vanishing_mask.values, 0.0, field.values)
    return ScalarField(field.grid, vals, field.source)
