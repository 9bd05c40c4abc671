"""Deterministic tabular output and figure rendering.

CSV files use '.' decimals, 17-significant-digit floats, and always carry a
header row, so identical inputs produce byte-identical files.  Figures are
rendered headlessly to PNG next to the delimited output.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(path: str | Path, header: Sequence[str],
              rows: Iterable[Mapping | Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if isinstance(row, Mapping):
            cells = [format_value(row.get(col)) for col in header]
        else:
            cells = [format_value(v) for v in row]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def growth_figure(radii: Sequence[float], sup_values: Sequence[float],
                  exponent: float, intercept: float, path: str | Path,
                  title: str = "growth curve") -> Path:
    """Log-log growth samples with the fitted power law overlaid."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.loglog(radii, sup_values, "o", label="measured sup")
    rr = np.asarray(radii, dtype=float)
    ax.loglog(rr, np.exp(intercept) * rr**exponent, "-",
              label=f"fit: r^{exponent:.4g}")
    ax.set_xlabel("r")
    ax.set_ylabel("sup over B_r")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def convergence_figure(spacings: Sequence[float], errors: Sequence[float],
                       path: str | Path, title: str = "refinement study") -> Path:
    """Error versus grid spacing on log-log axes with a second-order guide."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    hs = np.asarray(spacings, dtype=float)
    es = np.asarray(errors, dtype=float)
    ax.loglog(hs, es, "o-", label="max error")
    if es[0] > 0:
        ax.loglog(hs, es[0] * (hs / hs[0]) ** 2, "--", label="order 2 guide")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def summary_figure(counts: Mapping[str, tuple[int, int]], path: str | Path) -> Path:
    """Horizontal PASS/FAIL bar chart, one bar pair per check group."""
    path = Path(path)
    groups = sorted(counts)
    passes = [counts[g][0] for g in groups]
    fails = [counts[g][1] for g in groups]
    fig, ax = plt.subplots(figsize=(6.0, max(2.0, 0.4 * len(groups) + 1.2)))
    y = np.arange(len(groups))
    ax.barh(y - 0.18, passes, height=0.36, color="#2a7e43", label="PASS")
    ax.barh(y + 0.18, fails, height=0.36, color="#b03a2e", label="FAIL")
    ax.set_yticks(y)
    ax.set_yticklabels(groups)
    ax.set_xlabel("count")
    ax.set_title("verification summary")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def capacity_figure(rows: Sequence[Mapping[str, str]], path: str | Path) -> Path:
    """Relative error of capacity estimates against their oracles."""
    path = Path(path)
    names, errs = [], []
    for row in rows:
        err = row.get("rel_error", "")
        if err not in ("", "nan"):
            names.append(row.get("item", "?"))
            errs.append(abs(float(err)))
    fig, ax = plt.subplots(figsize=(6.0, max(2.0, 0.4 * len(names) + 1.2)))
    if names:
        y = np.arange(len(names))
        ax.barh(y, errs, height=0.5, color="#31708f")
        ax.set_yticks(y)
        ax.set_yticklabels(names)
    ax.set_xlabel("|relative error|")
    ax.set_title("capacity estimates vs oracles")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
