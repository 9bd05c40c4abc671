"""Command-line driver: reproducible experiment configs in, tables and
figures out.

``lab capacity|counterexample|solve|dgcheck|growth|report --config <file.json>
--out <dir>``.  Exit status 0 on success, 2 when any verdict is FAIL, 1 on
usage or configuration errors.  Identical config and seed produce
byte-identical CSV output; the LAB_THREADS environment variable caps the
worker pool used for independent items.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import counterexamples as cx
from . import degiorgi as dg
from . import geometry as geo
from . import growth as gr
from . import reporting as rep
from . import solver as sv

KINDS = ("capacity", "counterexample", "solve", "dgcheck", "growth", "report")


class ConfigError(ValueError):
    """Unusable configuration: unknown kind, bad parameter, missing file."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    raw: dict

    @property
    def items(self) -> list[dict]:
        return self.raw.get("items", [])


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    cfg = ExperimentConfig(kind=kind, seed=seed, raw=copy.deepcopy(data))
    _validate(cfg)
    return cfg


def parse_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return parse_config(data)


def serialize_config(cfg: ExperimentConfig) -> dict:
    return copy.deepcopy(cfg.raw)


def _family_from_item(item: dict) -> cx.Family:
    kind = item.get("family")
    if kind not in cx._PARAMETER_NAMES:
        raise ConfigError(f"unknown family {kind!r}")
    pname = cx.parameter_name(kind)
    if pname not in item:
        raise ConfigError(f"family {kind!r} needs parameter {pname!r}")
    try:
        return cx.make_family(kind, float(item[pname]))
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.kind == "report":
        inputs = cfg.raw.get("inputs", [])
        if not isinstance(inputs, list):
            raise ConfigError("report config needs an 'inputs' list")
        return
    items = cfg.raw.get("items")
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{cfg.kind} config needs a non-empty 'items' list")
    for item in items:
        if not isinstance(item, dict):
            raise ConfigError("every item must be a JSON object")
        if cfg.kind == "capacity":
            p = float(item.get("p", 2.0))
            dim = int(item.get("dim", 3))
            if dim not in (2, 3, 4):
                raise ConfigError(f"dim must be 2, 3 or 4, got {dim}")
            if not 1.0 < p <= dim:
                raise ConfigError(f"p must lie in (1, {dim}], got {p}")
            if item.get("shape", "ball") not in ("ball", "disk", "segment"):
                raise ConfigError(f"unknown condenser shape {item.get('shape')!r}")
        elif cfg.kind in ("counterexample", "solve", "growth"):
            _family_from_item(item)
        elif cfg.kind == "dgcheck":
            if item.get("check") not in ("caccioppoli", "weak_harnack",
                                         "log_estimate", "lemma", "log_gradient"):
                raise ConfigError(f"unknown dgcheck kind {item.get('check')!r}")
            if item.get("family") != "meyers2d":
                raise ConfigError("dgcheck runs on the meyers2d family")
            _family_from_item(item)


def _pool_size(n_items: int) -> int:
    cap_env = os.environ.get("LAB_THREADS", "")
    limit = int(cap_env) if cap_env.strip() else (os.cpu_count() or 1)
    return max(1, min(n_items, limit))


def _map_items(fn, items: list[dict], seed: int) -> list:
    """Run independent items in a bounded pool; results keep config order."""
    workers = _pool_size(len(items))
    tagged = list(enumerate(items))
    if workers == 1:
        return [fn(i, item, seed) for i, item in tagged]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda pair: fn(pair[0], pair[1], seed), tagged))


# ---------------------------------------------------------------------------
# capacity experiments
# ---------------------------------------------------------------------------

_CAPACITY_HEADER = ("item", "p", "N", "h", "value", "oracle", "rel_error",
                    "iterations", "energy_gap", "converged", "verdict")


def _capacity_item(index: int, item: dict, seed: int) -> tuple[list[dict], list[dict]]:
    name = item.get("name", f"item{index}")
    p = float(item.get("p", 2.0))
    dim = int(item.get("dim", 3))
    r = float(item.get("inner_radius", 1.0))
    big_r = float(item.get("outer_radius", 2.0 * r))
    half = float(item.get("box_halfwidth", big_r))
    cells = int(item.get("cells", 16))
    shape = item.get("shape", "ball")
    tol = float(item.get("tolerance", 0.05))
    solver_tol = float(item.get("solver_tolerance", 1e-6))

    grid = geo.make_grid(dim, (-half,) * dim, (half,) * dim, cells)
    outer = geo.ball_mask(grid, (0.0,) * dim, big_r)
    if shape == "ball":
        inner = cap.plate_ball(grid, (0.0,) * dim, r)
        oracle = cap.cap_ball_annulus(p, dim, r, big_r)
    elif shape == "disk":
        inner = geo.disk_mask(grid, r)
        oracle = None
    else:
        inner = geo.segment_mask(grid, -r, 0.0)
        oracle = None
    est = cap.variational_capacity(cap.CondenserProblem(inner, outer, p),
                                   tolerance=solver_tol)
    rel = (est.value - oracle) / oracle if oracle else None
    verdict = ""
    if oracle:
        verdict = "PASS" if abs(rel) <= tol and est.converged else "FAIL"
    row = {"item": name, "p": p, "N": dim, "h": grid.spacing[0], "value": est.value,
           "oracle": oracle, "rel_error": rel, "iterations": est.iterations,
           "energy_gap": est.energy_gap, "converged": est.converged,
           "verdict": verdict}
    return [row], [est.to_record(cap.CondenserProblem(inner, outer, p))]


def _run_capacity(cfg: ExperimentConfig, out_dir: Path) -> tuple[int, list[Path]]:
    results = _map_items(_capacity_item, cfg.items, cfg.seed)
    rows = [r for rs, _ in results for r in rs]
    records = [rec for _, recs in results for rec in recs]
    files = [rep.write_csv(out_dir / "capacity.csv", _CAPACITY_HEADER, rows),
             rep.write_json(out_dir / "capacity.json", records)]
    return _exit_from_rows(rows), files


# ---------------------------------------------------------------------------
# counterexample experiments
# ---------------------------------------------------------------------------

_CX_HEADER = ("check", "family", "parameter", "points", "measured", "threshold", "verdict")


def _seeded_points(rng: np.random.Generator, family: cx.Family, n: int) -> np.ndarray:
    pts = rng.uniform(-2.0, 2.0, size=(4 * n, family.ndim))
    if isinstance(family, cx.Quartic4D):
        keep = np.hypot(pts[:, 0], pts[:, 1]) > 0.3
    else:
        keep = np.linalg.norm(pts, axis=1) > 0.3
    pts = pts[keep]
    if len(pts) < n:
        raise ConfigError("not enough admissible sample points; raise 'points'")
    return pts[:n]


def _counterexample_item(index: int, item: dict, seed: int) -> tuple[list[dict], list]:
    family = _family_from_item(item)
    n = int(item.get("points", 100))
    step = float(item.get("step", 1e-4))
    rng = np.random.default_rng([seed, index])
    pts = _seeded_points(rng, family, n)
    rows: list[dict] = []

    def add(check: str, measured: float, threshold: float, ok: bool) -> None:
        rows.append({"check": check, "family": family.kind,
                     "parameter": family.parameter, "points": n,
                     "measured": measured, "threshold": threshold,
                     "verdict": "PASS" if ok else "FAIL"})

    eig = np.linalg.eigvalsh(family.matrix(pts))
    eig_err = float(np.abs(eig - np.asarray(family.eigenvalues())).max())
    add("eigenvalues", eig_err, 1e-10, eig_err <= 1e-10)

    g = family.grad(pts)
    fd = np.zeros_like(g)
    for i in range(family.ndim):
        e = np.zeros(family.ndim)
        e[i] = 1e-5
        fd[:, i] = (family.value(pts + e) - family.value(pts - e)) / 2e-5
    scale = np.maximum(np.linalg.norm(g, axis=1), 1e-30)
    grad_err = float((np.abs(g - fd).max(axis=1) / scale).max())
    add("gradient_fd", grad_err, 1e-6, grad_err <= 1e-6)

    if isinstance(family, cx.Quartic4D):
        res = np.array([cx.residual_strong(family, q, step) for q in pts])
        exact = cx.divergence_closed_form(family, pts)
        div_err = float(np.max(np.abs(res - exact) / exact))
        add("divergence_identity", div_err, 1e-4, div_err <= 1e-4)

        lin_flux = np.einsum("...ij,...j->...i", family.matrix(pts), g)
        s = np.sum(pts * pts, axis=-1)
        sigma = pts[:, 0] ** 2 + pts[:, 1] ** 2
        ref = pts[:, 2] * sigma ** (1.0 / 3.0) * (2.0 * family.big_c - 3.0 * family.alpha) \
            / (3.0 * s ** (family.alpha / 2.0 + 1.0))
        row_err = float(np.abs(lin_flux[:, 2] - ref).max())
        add("flux_row", row_err, 1e-10, row_err <= 1e-10)

        bumps = int(item.get("bumps", 3))
        radius = float(item.get("bump_radius", 0.5))
        cells = int(item.get("quadrature_cells", 16))
        worst = -math.inf
        worst_gap = 0.0
        for _ in range(bumps):
            center = rng.uniform(-1.5, 1.5, size=4)
            center[0] = rng.uniform(radius + 0.2, 1.8) * rng.choice((-1.0, 1.0))
            center[1] = rng.uniform(radius + 0.2, 1.8) * rng.choice((-1.0, 1.0))
            val = cx.weak_subsolution_check(family, center, radius, cells)
            oracle = cx.weak_subsolution_oracle(family, center, radius, cells)
            worst = max(worst, val)
            worst_gap = max(worst_gap, abs(val - oracle) / abs(oracle))
        add("subsolution", worst, 1e-8, worst <= 1e-8)
        add("subsolution_oracle", worst_gap, 1e-2, worst_gap <= 1e-2)
    else:
        flux_scale = np.array([np.abs(cx.flux(family, q)).max() for q in pts])
        radii = np.maximum(np.linalg.norm(pts, axis=1), 1.0)
        res = np.array([cx.residual_strong(family, q, step) for q in pts])
        rel = float((np.abs(res) / (flux_scale / radii)).max())
        add("residual", rel, 1e-5, rel <= 1e-5)
        res_half = np.array([cx.residual_strong(family, q, step / 2.0) for q in pts])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.abs(res) / np.abs(res_half)
        ratios = ratios[np.isfinite(ratios)]
        order = float(np.median(ratios)) if len(ratios) else math.inf
        add("residual_order", order, 3.5, order >= 3.5)
    return rows, []


def _run_counterexample(cfg: ExperimentConfig, out_dir: Path) -> tuple[int, list[Path]]:
    results = _map_items(_counterexample_item, cfg.items, cfg.seed)
    rows = [r for rs, _ in results for r in rs]
    files = [rep.write_csv(out_dir / "counterexample.csv", _CX_HEADER, rows)]
    return _exit_from_rows(rows), files


# ---------------------------------------------------------------------------
# solve experiments
# ---------------------------------------------------------------------------

_SOLVE_HEADER = ("family", "parameter", "cells", "h", "linf_error", "contraction", "verdict")

_DEFAULT_BOXES = {
    "meyers2d": [[0.1, 1.1], [-0.5, 0.5]],
    "cone3d": [[0.1, 1.1], [-0.5, 0.5], [-0.5, 0.5]],
}


def _solve_item(index: int, item: dict, seed: int) -> tuple[list[dict], list]:
    family = _family_from_item(item)
    if family.kind not in _DEFAULT_BOXES:
        raise ConfigError(f"solve supports the linear families, got {family.kind!r}")
    box = item.get("box", _DEFAULT_BOXES[family.kind])
    cells_list = [int(c) for c in item.get("cells", [16, 32])]
    tol = float(item.get("tolerance", 1e-11))
    min_contraction = float(item.get("min_contraction", 1.5))
    rows = []
    prev_err = None
    for cells in cells_list:
        grid = geo.make_grid(family.ndim, [b[0] for b in box], [b[1] for b in box], cells)
        problem = sv.DirichletProblem(grid=grid, coefficient=family,
                                      boundary=lambda pts: family.value(pts))
        u = sv.solve_linear(problem, tolerance=tol)
        exact = family.value(grid.node_points())
        interior = ~sv.boundary_node_mask(grid)
        err = float(np.abs(u.values - exact)[interior].max())
        contraction = prev_err / err if prev_err is not None else None
        verdict = "" if contraction is None else ("PASS" if contraction >= min_contraction else "FAIL")
        rows.append({"family": family.kind, "parameter": family.parameter,
                     "cells": cells, "h": grid.spacing[0], "linf_error": err,
                     "contraction": contraction, "verdict": verdict})
        prev_err = err
        if item.get("save_fields"):
            sv.save_field(u, Path(item["save_fields"]) / f"{family.kind}_{cells}")
    return rows, []


def _run_solve(cfg: ExperimentConfig, out_dir: Path) -> tuple[int, list[Path]]:
    results = _map_items(_solve_item, cfg.items, cfg.seed)
    rows = [r for rs, _ in results for r in rs]
    files = [rep.write_csv(out_dir / "solve.csv", _SOLVE_HEADER, rows)]
    return _exit_from_rows(rows), files


# ---------------------------------------------------------------------------
# dgcheck experiments
# ---------------------------------------------------------------------------

_DG_HEADER = ("check", "family", "R", "rho", "sigma", "tau", "value", "verdict")


def _solved_meyers(family: cx.Family, cells: int) -> geo.ScalarField:
    box = _DEFAULT_BOXES["meyers2d"]
    grid = geo.make_grid(2, [b[0] for b in box], [b[1] for b in box], cells)
    problem = sv.DirichletProblem(grid=grid, coefficient=family,
                                  boundary=lambda pts: family.value(pts))
    return sv.solve_linear(problem, tolerance=1e-11)


def _dgcheck_item(index: int, item: dict, seed: int) -> tuple[list[dict], list]:
    family = _family_from_item(item)
    check = item["check"]
    rng = np.random.default_rng([seed, index])
    rows: list[dict] = []
    p = family.p_exponent

    if check == "caccioppoli":
        field = _solved_meyers(family, int(item.get("cells", 32)))
        grid = field.grid
        samples = int(item.get("samples", 20))
        lo = np.asarray(grid.lower)
        hi = np.asarray(grid.upper)
        span = hi - lo
        umin, umax = field.values.min(), field.values.max()
        for _ in range(samples):
            center = lo + span * rng.uniform(0.35, 0.65, size=grid.dim)
            max_rho = float(np.min(np.minimum(center - lo, hi - center)))
            rho = rng.uniform(0.3, 0.95) * max_rho
            sigma = rng.uniform(0.25, 0.75)
            k = rng.uniform(umin, umax)
            sign = "+" if rng.random() < 0.5 else "-"
            lhs, rhs = sv.caccioppoli_data(field, center, rho, sigma, k, sign, p=p)
            gamma = sv.implied_gamma_hat(lhs, rhs)
            rows.append({"check": check, "family": family.kind, "R": rho, "rho": rho,
                         "sigma": sigma, "tau": float("nan"), "value": gamma,
                         "verdict": "PASS" if math.isfinite(gamma) else "FAIL"})
    elif check in ("weak_harnack", "log_estimate"):
        halfwidth = float(item.get("halfwidth", 8.0))
        cells = int(item.get("cells", 128))
        radii = [float(r) for r in item.get("radii", [1.0, 2.0, 4.0])]
        grid = geo.make_grid(family.ndim, (-halfwidth,) * family.ndim,
                             (halfwidth,) * family.ndim, cells)
        u = cx.sample_zero_extended(family, grid)
        origin = (0.0,) * family.ndim
        values = []
        if check == "weak_harnack":
            tau = float(item.get("tau", dg.DEFAULT_TAU))
            sigma = float(item.get("sigma", 0.5))
            eta = float(item.get("eta", 0.5))
            for rho in radii:
                mu = gr.sup_over_ball(u, 2.0 * rho, origin)
                v = geo.ScalarField(grid, mu - u.values)
                report = dg.weak_harnack_ratio(v, tau, sigma, eta, rho, origin)
                values.append(report.ratio)
                rows.append(report.to_row(family=family.kind, big_r=2.0 * rho))
        else:
            sigma = float(item.get("sigma", dg.default_log_sigma(p)))
            for big_r in radii:
                mu = gr.sup_over_ball(u, 2.0 * big_r, origin)
                inner = family.extension_mask(grid) & cap.plate_ball(grid, origin, big_r)
                outer = geo.ball_mask(grid, origin, 2.0 * big_r)
                est = cap.variational_capacity(cap.CondenserProblem(inner, outer, p),
                                               tolerance=1e-6)
                delta = cap.capacity_density(est.value, big_r, p, grid.dim)
                report = dg.log_estimate_report(u, mu, sigma, big_r, p, delta, origin)
                values.append(report.normalized)
                rows.append(report.to_row(family=family.kind, big_r=big_r))
        spread = max(values) / min(values) if min(values) > 0 else math.inf
        max_spread = float(item.get("max_spread", 2.0 if check == "weak_harnack" else 3.0))
        rows.append({"check": f"{check}_spread", "family": family.kind,
                     "R": float("nan"), "rho": float("nan"),
                     "sigma": float("nan"), "tau": float("nan"), "value": spread,
                     "verdict": "PASS" if spread < max_spread else "FAIL"})
    elif check == "lemma":
        field = _solved_meyers(family, int(item.get("cells", 32)))
        grid = field.grid
        samples = int(item.get("samples", 20))
        theta = dg.degiorgi_lemma_threshold(grid.dim, p, 1.0, 1.0)
        lo = np.asarray(grid.lower)
        hi = np.asarray(grid.upper)
        span = hi - lo
        for _ in range(samples):
            center = lo + span * rng.uniform(0.4, 0.6, size=grid.dim)
            max_r = float(np.min(np.minimum(center - lo, hi - center))) / 2.0
            big_r = rng.uniform(0.3, 0.95) * max_r
            s = int(rng.integers(2, 7))
            verdict = dg.degiorgi_lemma_check(field, center, big_r, s, theta)
            rows.append({"check": check, "family": family.kind, "R": big_r,
                         "rho": float("nan"), "sigma": float("nan"),
                         "tau": float("nan"), "value": 1.0 if verdict.consistent else 0.0,
                         "verdict": "PASS" if verdict.consistent else "FAIL"})
    elif check == "log_gradient":
        field = _solved_meyers(family, int(item.get("cells", 32)))
        grid = field.grid
        samples = int(item.get("samples", 10))
        lo = np.asarray(grid.lower)
        hi = np.asarray(grid.upper)
        span = hi - lo
        mu_plus = float(field.values.max())
        gap = geo.ScalarField(grid, mu_plus * (1.0 + 1e-6) - field.values)
        for _ in range(samples):
            center = lo + span * rng.uniform(0.35, 0.65, size=grid.dim)
            max_r = float(np.min(np.minimum(center - lo, hi - center)))
            big_r = rng.uniform(0.5, 0.95) * max_r
            rho = rng.uniform(0.3, 0.7) * big_r
            lhs, rhs = dg.log_gradient_data(gap, float(gap.values.max()), rho, big_r,
                                            p, center)
            gamma = sv.implied_gamma_hat(lhs, rhs)
            rows.append({"check": check, "family": family.kind, "R": big_r, "rho": rho,
                         "sigma": float("nan"), "tau": float("nan"), "value": gamma,
                         "verdict": "PASS" if math.isfinite(gamma) else "FAIL"})
    return rows, []


def _run_dgcheck(cfg: ExperimentConfig, out_dir: Path) -> tuple[int, list[Path]]:
    results = _map_items(_dgcheck_item, cfg.items, cfg.seed)
    rows = [r for rs, _ in results for r in rs]
    files = [rep.write_csv(out_dir / "dgcheck.csv", _DG_HEADER, rows)]
    return _exit_from_rows(rows), files


# ---------------------------------------------------------------------------
# growth experiments
# ---------------------------------------------------------------------------

_GROWTH_SUMMARY_HEADER = ("family", "parameter", "exponent", "expected",
                          "abs_error", "verdict")


def _growth_item(index: int, item: dict, seed: int) -> tuple[list[dict], list]:
    family = _family_from_item(item)
    radii = [float(r) for r in item.get("radii", [4.0**k for k in range(5)])]
    tol = float(item.get("tolerance", 1e-10))
    curve = gr.sup_growth_curve(family, radii)
    fit = gr.fit_exponent(curve)
    expected = family.growth_exponent
    err = abs(fit.exponent - expected)
    summary = {"family": family.kind, "parameter": family.parameter,
               "exponent": fit.exponent, "expected": expected, "abs_error": err,
               "verdict": "PASS" if err <= tol else "FAIL"}
    return [summary], [(family, curve, fit)]


def _run_growth(cfg: ExperimentConfig, out_dir: Path) -> tuple[int, list[Path]]:
    results = _map_items(_growth_item, cfg.items, cfg.seed)
    rows = [r for rs, _ in results for r in rs]
    files = [rep.write_csv(out_dir / "growth_summary.csv", _GROWTH_SUMMARY_HEADER, rows)]
    for summaries, extra in results:
        for family, curve, fit in extra:
            stem = f"growth_{family.kind}"
            files.append(rep.write_csv(out_dir / f"{stem}.csv",
                                       ("r", "mu_plus", "pair_slope"),
                                       gr.curve_rows(curve)))
            files.append(rep.write_json(out_dir / f"{stem}_fit.json", fit.to_dict()))
    return _exit_from_rows(rows), files


# ---------------------------------------------------------------------------
# consolidated report
# ---------------------------------------------------------------------------

def _run_report(cfg: ExperimentConfig, out_dir: Path, config_dir: Path) -> tuple[int, list[Path]]:
    inputs = cfg.raw.get("inputs", [])
    tables: list[tuple[Path, list[dict]]] = []
    for rel in inputs:
        path = Path(rel)
        if not path.is_absolute():
            candidate = config_dir / path
            path = candidate if candidate.exists() else path
        if not path.exists():
            raise ConfigError(f"report input not found: {rel}")
        tables.append((path, rep.read_csv(path)))

    counts: dict[str, list[int]] = {}
    for path, rows in tables:
        for row in rows:
            verdict = row.get("verdict", "")
            if verdict not in ("PASS", "FAIL"):
                continue
            group = row.get("check") or path.stem
            counts.setdefault(group, [0, 0])
            counts[group][0 if verdict == "PASS" else 1] += 1

    summary_rows = [{"check": g, "pass": c[0], "fail": c[1], "total": c[0] + c[1]}
                    for g, c in sorted(counts.items())]
    files = [rep.write_csv(out_dir / "summary.csv",
                           ("check", "pass", "fail", "total"), summary_rows)]
    if counts:
        files.append(rep.summary_figure({g: (c[0], c[1]) for g, c in counts.items()},
                                        out_dir / "summary.png"))
    for path, rows in tables:
        if not rows:
            continue
        cols = rows[0].keys()
        if {"r", "mu_plus"} <= set(cols):
            radii = [float(r["r"]) for r in rows]
            sups = [float(r["mu_plus"]) for r in rows]
            if len(radii) >= 3 and min(sups) > 0:
                fit = gr.fit_exponent(gr.GrowthCurve(tuple(radii), tuple(sups), path.stem))
                files.append(rep.growth_figure(radii, sups, fit.exponent,
                                               fit.log_intercept,
                                               out_dir / f"{path.stem}.png",
                                               title=path.stem))
        elif {"h", "linf_error"} <= set(cols):
            hs = [float(r["h"]) for r in rows]
            errs = [float(r["linf_error"]) for r in rows]
            files.append(rep.convergence_figure(hs, errs, out_dir / f"{path.stem}.png",
                                                title=path.stem))
        elif "rel_error" in cols:
            files.append(rep.capacity_figure(rows, out_dir / f"{path.stem}.png"))
    failed = sum(c[1] for c in counts.values())
    return (2 if failed else 0), files


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def _exit_from_rows(rows: list[dict]) -> int:
    return 2 if any(r.get("verdict") == "FAIL" for r in rows) else 0


_RUNNERS = {
    "capacity": _run_capacity,
    "counterexample": _run_counterexample,
    "solve": _run_solve,
    "dgcheck": _run_dgcheck,
    "growth": _run_growth,
}


def run(cfg: ExperimentConfig, out_dir: str | Path,
        config_dir: str | Path = ".") -> int:
    """Execute one experiment config; returns the process exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "report":
        status, files = _run_report(cfg, out, Path(config_dir))
    else:
        status, files = _RUNNERS[cfg.kind](cfg, out)
    for f in files:
        print(f"wrote {f}")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lab",
        description="numerical verification lab: capacities, counterexamples, "
                    "energy estimates, growth exponents")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config_file(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config kind {cfg.kind!r} does not match "
                              f"subcommand {args.command!r}")
        return run(cfg, args.out, Path(args.config).resolve().parent)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
