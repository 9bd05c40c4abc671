"""Divergence-form solves and p-Dirichlet energy minimization on uniform grids.

Two discrete energies drive everything here:

* an isotropic p-energy assembled from per-corner gradients inside each cell
  (trapezoidal quadrature over the 2^N corners, cell-volume weights), exact
  for affine fields and free of checkerboard null modes; its p = 2 special
  case collapses to an edge-based quadratic form solved by conjugate
  gradient, and p != 2 is minimized by nonlinear CG seeded with the p = 2
  minimizer;
* a variable-coefficient symmetric bilinear form whose diagonal terms use
  face-midpoint coefficients with face-normal difference quotients and whose
  off-diagonal terms couple cell-centered averaged tangential differences,
  keeping the assembled operator exactly symmetric.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    ScalarField,
    SetMask,
    UniformGrid,
    ball_mask,
    gradient,
    integrate,
    positive_part,
)


class SolveError(RuntimeError):
    """Raised when an iterative solve fails to converge or detects a bad system."""


# ---------------------------------------------------------------------------
# low-level stencil algebra
# ---------------------------------------------------------------------------

def _edge_diff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    sl0 = [slice(None)] * values.ndim
    sl1 = [slice(None)] * values.ndim
    sl0[axis] = slice(0, -1)
    sl1[axis] = slice(1, None)
    return (values[tuple(sl1)] - values[tuple(sl0)]) / h


def _edge_diff_adjoint(edge: np.ndarray, axis: int, h: float, out: np.ndarray) -> None:
    sl0 = [slice(None)] * out.ndim
    sl1 = [slice(None)] * out.ndim
    sl0[axis] = slice(0, -1)
    sl1[axis] = slice(1, None)
    out[tuple(sl1)] += edge / h
    out[tuple(sl0)] -= edge / h


def _axis_average(arr: np.ndarray, axis: int) -> np.ndarray:
    sl0 = [slice(None)] * arr.ndim
    sl1 = [slice(None)] * arr.ndim
    sl0[axis] = slice(0, -1)
    sl1[axis] = slice(1, None)
    return 0.5 * (arr[tuple(sl0)] + arr[tuple(sl1)])


def _axis_average_adjoint(arr: np.ndarray, axis: int, out: np.ndarray) -> None:
    sl0 = [slice(None)] * out.ndim
    sl1 = [slice(None)] * out.ndim
    sl0[axis] = slice(0, -1)
    sl1[axis] = slice(1, None)
    out[tuple(sl0)] += 0.5 * arr
    out[tuple(sl1)] += 0.5 * arr


def _edge_weights(grid: UniformGrid, axis: int) -> np.ndarray:
    """Quadrature weight of every axis-aligned edge: spacing along the edge
    times the trapezoidal transverse area of its dual slab."""
    w = np.array(1.0)
    for e in range(grid.dim):
        if e == axis:
            v = np.full(grid.cells[e], grid.spacing[e])
        else:
            v = np.full(grid.cells[e] + 1, grid.spacing[e])
            v[0] *= 0.5
            v[-1] *= 0.5
        w = np.multiply.outer(w, v)
    return w


def _cell_average(edge: np.ndarray, axis: int, dim: int) -> np.ndarray:
    """Average an edge array over all transverse axes, producing a cell array."""
    out = edge
    for e in range(dim):
        if e != axis:
            out = _axis_average(out, e)
    return out


def _cell_average_adjoint(cell: np.ndarray, axis: int, dim: int,
                          edge_shape: tuple[int, ...]) -> np.ndarray:
    out = cell
    # undo the averaging in reverse axis order so shapes grow back correctly
    for e in reversed(range(dim)):
        if e != axis:
            shape = list(out.shape)
            shape[e] += 1
            grown = np.zeros(shape)
            _axis_average_adjoint(out, e, grown)
            out = grown
    assert out.shape == edge_shape
    return out


# ---------------------------------------------------------------------------
# isotropic p-energy (capacity backend)
# ---------------------------------------------------------------------------

class PEnergy:
    """Discrete ``sum_cells vol * mean_corners (|grad phi|^2 + eps^2)^(p/2)``.

    The per-corner gradient uses the one-sided edge differences meeting at
    the corner, so the quadrature is exact for affine fields and the p = 2
    form reduces to an edge-weighted graph Laplacian.
    """

    def __init__(self, grid: UniformGrid, p: float, epsilon: float = 0.0):
        if p <= 1.0:
            raise ValueError(f"p must exceed 1, got {p}")
        self.grid = grid
        self.p = float(p)
        self.epsilon = float(epsilon)
        self._edge_w = [_edge_weights(grid, d) for d in range(grid.dim)]
        self._corner_w = grid.cell_volume / 2**grid.dim

    # -- generic corner machinery -------------------------------------------------

    def _corner_slices(self, corner: tuple[int, ...], axis: int) -> tuple[slice, ...]:
        grid = self.grid
        sls = []
        for e in range(grid.dim):
            if e == axis:
                sls.append(slice(None))
            else:
                sls.append(slice(corner[e], corner[e] + grid.cells[e]))
        return tuple(sls)

    def energy(self, values: np.ndarray, regularized: bool = True) -> float:
        grid = self.grid
        if self.p == 2.0 and (self.epsilon == 0.0 or not regularized):
            total = 0.0
            for d in range(grid.dim):
                diff = _edge_diff(values, d, grid.spacing[d])
                total += float((self._edge_w[d] * diff * diff).sum())
            return total
        eps2 = self.epsilon**2 if regularized else 0.0
        diffs = [_edge_diff(values, d, grid.spacing[d]) for d in range(grid.dim)]
        total = 0.0
        for corner in itertools.product((0, 1), repeat=grid.dim):
            g2 = np.zeros(grid.cells)
            for d in range(grid.dim):
                comp = diffs[d][self._corner_slices(corner, d)]
                g2 += comp * comp
            total += float(((g2 + eps2) ** (self.p / 2.0)).sum())
        return self._corner_w * total

    def gradient(self, values: np.ndarray) -> np.ndarray:
        grid = self.grid
        out = np.zeros(grid.shape)
        if self.p == 2.0 and self.epsilon == 0.0:
            for d in range(grid.dim):
                diff = _edge_diff(values, d, grid.spacing[d])
                _edge_diff_adjoint(2.0 * self._edge_w[d] * diff, d, grid.spacing[d], out)
            return out
        eps2 = self.epsilon**2
        diffs = [_edge_diff(values, d, grid.spacing[d]) for d in range(grid.dim)]
        edge_acc = [np.zeros_like(diffs[d]) for d in range(grid.dim)]
        for corner in itertools.product((0, 1), repeat=grid.dim):
            comps = [diffs[d][self._corner_slices(corner, d)] for d in range(grid.dim)]
            g2 = np.zeros(grid.cells)
            for comp in comps:
                g2 += comp * comp
            weight = self.p * (g2 + eps2) ** (self.p / 2.0 - 1.0)
            for d in range(grid.dim):
                edge_acc[d][self._corner_slices(corner, d)] += weight * comps[d]
        for d in range(grid.dim):
            _edge_diff_adjoint(self._corner_w * edge_acc[d], d, grid.spacing[d], out)
        return out

    def quadratic_apply(self, values: np.ndarray) -> np.ndarray:
        """Gradient of the p = 2 energy: the edge-Laplacian operator."""
        grid = self.grid
        out = np.zeros(grid.shape)
        for d in range(grid.dim):
            diff = _edge_diff(values, d, grid.spacing[d])
            _edge_diff_adjoint(2.0 * self._edge_w[d] * diff, d, grid.spacing[d], out)
        return out


@dataclass
class MinimizeResult:
    values: np.ndarray
    energy: float
    energy_regularized: float
    iterations: int
    energy_gap: float
    converged: bool


def _cg_constrained(apply_full: Callable[[np.ndarray], np.ndarray],
                    start: np.ndarray, free: np.ndarray,
                    energy_of: Callable[[np.ndarray], float],
                    tolerance: float, max_iterations: int) -> MinimizeResult:
    """Conjugate gradient on the free nodes of a quadratic energy.

    Declares convergence when the relative energy decrease over one iteration
    drops below ``tolerance``; raises on an indefinite operator.
    """
    x = start.copy()
    b = -apply_full(x)

    def apply_free(v_free: np.ndarray) -> np.ndarray:
        tmp = np.zeros_like(x)
        tmp[free] = v_free
        return apply_full(tmp)[free]

    xf = np.zeros(int(free.sum()))
    r = b[free].copy()
    p = r.copy()
    rr = float(r @ r)
    energy = energy_of(x)
    scale = abs(energy) + 1e-300
    gap = np.inf
    iterations = 0
    converged = rr == 0.0
    while not converged and iterations < max_iterations:
        ap = apply_free(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise SolveError("indefinite operator detected (p^T A p <= 0); "
                             "coefficient evaluation is suspect")
        alpha = rr / pap
        xf += alpha * p
        r -= alpha * ap
        rr_new = float(r @ r)
        # quadratic model: energy drop this step is alpha * rr / 2 * 2 (operator
        # already carries the factor 2 of the energy gradient)
        drop = 0.5 * alpha * rr
        energy -= drop
        gap = drop / max(abs(energy), scale * 1e-12)
        iterations += 1
        if gap < tolerance and rr_new <= rr:
            converged = True
        p = r + (rr_new / rr) * p
        rr = rr_new
        if rr == 0.0:
            converged = True
    x[free] = xf
    true_energy = energy_of(x)
    return MinimizeResult(values=x, energy=true_energy, energy_regularized=true_energy,
                          iterations=iterations, energy_gap=float(gap), converged=converged)


def _nonlinear_cg(functional: PEnergy, start: np.ndarray, free: np.ndarray,
                  tolerance: float, max_iterations: int) -> MinimizeResult:
    """Polak-Ribiere nonlinear CG with Armijo backtracking on the free nodes."""
    x = start.copy()
    energy = functional.energy(x)
    g = functional.gradient(x)[free]
    d = -g
    gg = float(g @ g)
    step = 1.0
    gap = np.inf
    iterations = 0
    converged = gg == 0.0
    while not converged and iterations < max_iterations:
        # Armijo backtracking with a gently adaptive initial step
        gd = float(g @ d)
        if gd >= 0.0:
            d = -g
            gd = -gg
        trial = np.zeros_like(x)
        accepted = False
        t = step
        for _ in range(60):
            trial[:] = x
            trial[free] += t * d
            e_new = functional.energy(trial)
            if e_new <= energy + 1e-4 * t * gd:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        drop = energy - e_new
        x = trial.copy()
        energy = e_new
        g_new = functional.gradient(x)[free]
        beta = max(0.0, float(g_new @ (g_new - g)) / gg)
        d = -g_new + beta * d
        g = g_new
        gg = float(g @ g)
        step = min(t * 2.0, 1e6)
        iterations += 1
        gap = drop / max(abs(energy), 1e-300)
        if gap < tolerance:
            converged = True
    return MinimizeResult(values=x, energy=functional.energy(x, regularized=False),
                          energy_regularized=energy, iterations=iterations,
                          energy_gap=float(gap), converged=converged)


def minimize_p_energy(grid: UniformGrid, p: float, fixed: np.ndarray,
                      fixed_values: np.ndarray, tolerance: float = 1e-6,
                      max_iterations: int | None = None,
                      epsilon: float | None = None) -> MinimizeResult:
    """Minimize the isotropic p-energy over the non-fixed nodes.

    ``fixed`` marks constrained nodes, ``fixed_values`` supplies their values
    (ignored elsewhere); constrained nodes are eliminated from the unknown
    set rather than penalized.  For p != 2 the norm is regularized as
    ``(|grad|^2 + eps^2)^(p/2)`` and minimization starts from the p = 2
    minimizer; the result carries both the regularized and raw energies.
    """
    fixed = np.asarray(fixed, dtype=bool)
    free = ~fixed
    if not free.any():
        raise ValueError("no free nodes to optimize")
    n_free = int(free.sum())
    if max_iterations is None:
        max_iterations = 10 * n_free
    start = np.where(fixed, fixed_values, 0.0)

    quad = PEnergy(grid, 2.0)
    result2 = _cg_constrained(quad.quadratic_apply, start, free,
                              lambda v: quad.energy(v), tolerance, max_iterations)
    if p == 2.0:
        return result2
    if epsilon is None:
        epsilon = 1e-8 * grid.diameter / max(grid.spacing)
    functional = PEnergy(grid, p, epsilon)
    result = _nonlinear_cg(functional, result2.values, free, tolerance, max_iterations)
    result.iterations += result2.iterations
    return result


# ---------------------------------------------------------------------------
# variable-coefficient linear solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirichletProblem:
    """Dirichlet problem for ``div(A(x) grad u) = 0`` on a grid box.

    ``coefficient`` is any object with a ``matrix(points) -> (..., N, N)``
    method (``None`` means the identity).  ``boundary`` supplies Dirichlet
    data as a vectorized function of node coordinates or an explicit
    node-value array; ``forced_zero`` optionally pins extra nodes to zero.
    """

    grid: UniformGrid
    coefficient: object | None = None
    boundary: Callable[[np.ndarray], np.ndarray] | np.ndarray | None = None
    forced_zero: SetMask | None = None

    def boundary_values(self) -> np.ndarray:
        if self.boundary is None:
            return np.zeros(self.grid.shape)
        if callable(self.boundary):
            vals = np.asarray(self.boundary(self.grid.node_points()), dtype=float)
        else:
            vals = np.asarray(self.boundary, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError("boundary data shape does not match the grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("boundary data must be finite")
        return vals


def boundary_node_mask(grid: UniformGrid) -> np.ndarray:
    """Boolean array marking the nodes on the faces of the grid box."""
    mask = np.zeros(grid.shape, dtype=bool)
    for d in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[d] = 0
        mask[tuple(sl)] = True
        sl[d] = -1
        mask[tuple(sl)] = True
    return mask


def _face_midpoints(grid: UniformGrid, axis: int) -> np.ndarray:
    axes = []
    for e in range(grid.dim):
        coords = grid.axis(e)
        if e == axis:
            coords = 0.5 * (coords[:-1] + coords[1:])
        axes.append(coords)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def _cell_centers(grid: UniformGrid) -> np.ndarray:
    axes = [0.5 * (grid.axis(e)[:-1] + grid.axis(e)[1:]) for e in range(grid.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


class DivergenceFormOperator:
    """Symmetric discretization of ``v -> -div(A grad v)`` with Dirichlet frame.

    Diagonal coefficient entries are sampled at face midpoints and multiply
    face-normal difference quotients; off-diagonal entries are sampled at
    cell centers and couple the averaged tangential central differences, the
    symmetric arrangement that keeps the assembled operator exactly
    self-adjoint.
    """

    def __init__(self, problem: DirichletProblem):
        grid = problem.grid
        self.grid = grid
        self.problem = problem
        coeff = problem.coefficient
        self._edge_w = [_edge_weights(grid, d) for d in range(grid.dim)]
        if coeff is None:
            self._diag = [np.ones(self._edge_w[d].shape) for d in range(grid.dim)]
            self._cross = {}
        else:
            self._diag = []
            for d in range(grid.dim):
                mats = np.asarray(coeff.matrix(_face_midpoints(grid, d)))
                self._check_spd(mats)
                self._diag.append(mats[..., d, d])
            centers = np.asarray(coeff.matrix(_cell_centers(grid)))
            self._check_spd(centers)
            self._cross = {}
            for d in range(grid.dim):
                for e in range(d + 1, grid.dim):
                    self._cross[(d, e)] = centers[..., d, e]

    @staticmethod
    def _check_spd(mats: np.ndarray) -> None:
        sym_gap = np.max(np.abs(mats - np.swapaxes(mats, -1, -2)))
        if sym_gap > 1e-12:
            raise SolveError(f"coefficient matrix asymmetric by {sym_gap:.2e}")
        eigs = np.linalg.eigvalsh(mats)
        if eigs.min() <= 0.0:
            raise SolveError("coefficient matrix not positive definite at a quadrature point")

    def apply(self, values: np.ndarray) -> np.ndarray:
        grid = self.grid
        out = np.zeros(grid.shape)
        diffs = [_edge_diff(values, d, grid.spacing[d]) for d in range(grid.dim)]
        for d in range(grid.dim):
            _edge_diff_adjoint(self._edge_w[d] * self._diag[d] * diffs[d],
                               d, grid.spacing[d], out)
        if self._cross:
            vol = grid.cell_volume
            cell_d = [_cell_average(diffs[d], d, grid.dim) for d in range(grid.dim)]
            for (d, e), a_de in self._cross.items():
                ge = _cell_average_adjoint(vol * a_de * cell_d[e], d, grid.dim,
                                           diffs[d].shape)
                _edge_diff_adjoint(ge, d, grid.spacing[d], out)
                gd = _cell_average_adjoint(vol * a_de * cell_d[d], e, grid.dim,
                                           diffs[e].shape)
                _edge_diff_adjoint(gd, e, grid.spacing[e], out)
        return out

    def jacobi_diagonal(self) -> np.ndarray:
        """Diagonal of the edge part of the operator (preconditioner)."""
        grid = self.grid
        diag = np.zeros(grid.shape)
        for d in range(grid.dim):
            t = self._edge_w[d] * self._diag[d] / grid.spacing[d] ** 2
            sl0 = [slice(None)] * grid.dim
            sl1 = [slice(None)] * grid.dim
            sl0[d] = slice(0, -1)
            sl1[d] = slice(1, None)
            diag[tuple(sl0)] += t
            diag[tuple(sl1)] += t
        return diag


def solve_linear(problem: DirichletProblem, tolerance: float = 1e-10,
                 max_iterations: int | None = None) -> ScalarField:
    """Solve the Dirichlet problem by diagonally preconditioned CG.

    Converged when the preconditioned relative residual drops below
    ``tolerance``; raises SolveError on non-convergence or an indefinite
    assembled system.
    """
    grid = problem.grid
    op = DivergenceFormOperator(problem)
    fixed = boundary_node_mask(grid)
    values = problem.boundary_values()
    if problem.forced_zero is not None:
        fixed = fixed | problem.forced_zero.values
        values = np.where(problem.forced_zero.values, 0.0, values)
    free = ~fixed
    if not free.any():
        return ScalarField(grid, values)
    if max_iterations is None:
        max_iterations = max(1000, 10 * int(free.sum()))

    x = np.where(fixed, values, 0.0)
    b = -op.apply(x)[free]
    inv_diag = 1.0 / op.jacobi_diagonal()[free]

    def apply_free(v: np.ndarray) -> np.ndarray:
        tmp = np.zeros(grid.shape)
        tmp[free] = v
        return op.apply(tmp)[free]

    xf = np.zeros(b.shape)
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    b_norm = float(np.sqrt((b * inv_diag) @ b)) or 1.0
    for _ in range(max_iterations):
        if np.sqrt(max(rz, 0.0)) <= tolerance * b_norm:
            break
        ap = apply_free(p)
        pap = float(p @ ap)
        if pap <= 0.0:
            raise SolveError("assembled system is not positive definite; "
                             "check the coefficient evaluation")
        alpha = rz / pap
        xf += alpha * p
        r -= alpha * ap
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    else:
        raise SolveError(f"CG did not reach tolerance {tolerance} in {max_iterations} iterations")
    x[free] = xf
    return ScalarField(grid, x, source="solved")


def interior_residual(problem: DirichletProblem, field: ScalarField) -> np.ndarray:
    """Discrete flux divergence at non-fixed nodes (0 for a converged solve)."""
    op = DivergenceFormOperator(problem)
    fixed = boundary_node_mask(problem.grid)
    if problem.forced_zero is not None:
        fixed = fixed | problem.forced_zero.values
    res = op.apply(field.values)
    return res[~fixed]


# ---------------------------------------------------------------------------
# Caccioppoli data
# ---------------------------------------------------------------------------

def caccioppoli_data(field: ScalarField, center: Sequence[float], rho: float,
                     sigma: float, k: float, sign: str = "+",
                     p: float = 2.0) -> tuple[float, float]:
    """Both sides of the truncated-gradient energy inequality, constant left out.

    Returns ``(lhs, rhs_raw)`` with ``lhs`` the p-energy of ``(u-k)_pm`` over
    the inner ball of radius ``sigma * rho`` and ``rhs_raw`` the outer
    p-mass scaled by ``((1 - sigma) rho)^(-p)``; the implied constant is
    their ratio.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    grid = field.grid
    if not grid.contains_ball(center, rho):
        raise ValueError("outer ball exits the grid")
    w = positive_part(field, k, sign)
    grad_w = gradient(w)
    grad_norm_p = ScalarField(grid, np.sum(grad_w * grad_w, axis=-1) ** (p / 2.0))
    inner = ball_mask(grid, center, sigma * rho)
    outer = ball_mask(grid, center, rho)
    lhs = integrate(grad_norm_p, inner)
    mass = integrate(ScalarField(grid, w.values**p), outer)
    rhs_raw = mass / ((1.0 - sigma) * rho) ** p
    return lhs, rhs_raw


def implied_gamma_hat(lhs: float, rhs_raw: float) -> float:
    """Ratio lhs / rhs_raw with the 0/0 -> 0 convention."""
    if rhs_raw == 0.0:
        if lhs == 0.0:
            return 0.0
        return float("inf")
    return lhs / rhs_raw


# ---------------------------------------------------------------------------
# field serialization: JSON header + optional raw little-endian payload
# ---------------------------------------------------------------------------

_INLINE_NODE_LIMIT = 4096


def save_field(field: ScalarField, base_path: str | Path) -> Path:
    """Write a field as ``<base>.json``; large grids spill node values into a
    raw little-endian float64 payload ``<base>.f64`` referenced by the header."""
    base = Path(base_path)
    header: dict = {"grid": field.grid.to_dict(), "source": field.source}
    flat = np.ascontiguousarray(field.values.reshape(-1), dtype="<f8")
    if flat.size <= _INLINE_NODE_LIMIT:
        header["values"] = [float(v) for v in flat]
    else:
        payload = base.with_suffix(".f64")
        flat.tofile(payload)
        header["payload"] = payload.name
        header["count"] = int(flat.size)
        header["dtype"] = "<f8"
    out = base.with_suffix(".json")
    out.write_text(json.dumps(header, sort_keys=True))
    return out


def load_field(base_path: str | Path) -> ScalarField:
    base = Path(base_path)
    header = json.loads(base.with_suffix(".json").read_text())
    grid = UniformGrid.from_dict(header["grid"])
    if "values" in header:
        flat = np.asarray(header["values"], dtype=float)
    else:
        payload = base.parent / header["payload"]
        flat = np.fromfile(payload, dtype=header["dtype"], count=header["count"]).astype(float)
    return ScalarField(grid, flat.reshape(grid.shape), source=header.get("source"))
