import hashlib
import json
import os

import pytest

from dglab import cli
from dglab import reporting as rep


def write_config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


GROWTH_CFG = {
    "kind": "growth",
    "seed": 0,
    "items": [{"family": "meyers2d", "mu": 0.5, "radii": [1, 4, 16, 64, 256]}],
}

CX_CFG = {
    "kind": "counterexample",
    "seed": 7,
    "items": [
        {"family": "meyers2d", "mu": 0.5, "points": 40},
        {"family": "quartic4d", "alpha": 0.3, "points": 40, "bumps": 1,
         "quadrature_cells": 10},
    ],
}


def test_config_round_trip():
    cfg = cli.parse_config(GROWTH_CFG)
    assert cli.serialize_config(cfg) == GROWTH_CFG


def test_parse_rejects_unknown_kind():
    with pytest.raises(cli.ConfigError, match="unknown experiment kind"):
        cli.parse_config({"kind": "frobnicate", "items": [{}]})


def test_parse_rejects_bad_seed():
    with pytest.raises(cli.ConfigError, match="seed"):
        cli.parse_config({"kind": "growth", "seed": "zero",
                          "items": [{"family": "meyers2d", "mu": 0.5}]})


def test_parse_names_parameter_constraint():
    with pytest.raises(cli.ConfigError, match=r"alpha must lie in \(0, 2/3\)"):
        cli.parse_config({"kind": "growth", "seed": 0,
                          "items": [{"family": "quartic4d", "alpha": 0.9}]})


def test_main_reports_usage_error(tmp_path, capsys):
    cfg = write_config(tmp_path, "bad.json", {"kind": "growth", "seed": 0,
                                              "items": [{"family": "quartic4d",
                                                         "alpha": 0.9}]})
    status = cli.main(["growth", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert status == 1
    assert "alpha must lie in (0, 2/3)" in capsys.readouterr().err


def test_main_rejects_kind_mismatch(tmp_path, capsys):
    cfg = write_config(tmp_path, "g.json", GROWTH_CFG)
    status = cli.main(["capacity", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert status == 1
    assert "does not match" in capsys.readouterr().err


def test_main_missing_config(tmp_path, capsys):
    status = cli.main(["growth", "--config", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path)])
    assert status == 1


def test_growth_run_passes_and_writes_tables(tmp_path):
    cfg = write_config(tmp_path, "g.json", GROWTH_CFG)
    out = tmp_path / "out"
    assert cli.main(["growth", "--config", str(cfg), "--out", str(out)]) == 0
    rows = rep.read_csv(out / "growth_summary.csv")
    assert rows[0]["verdict"] == "PASS"
    assert float(rows[0]["exponent"]) == pytest.approx(0.5, abs=1e-10)
    curve = rep.read_csv(out / "growth_meyers2d.csv")
    assert list(curve[0].keys()) == ["r", "mu_plus", "pair_slope"]
    fit = json.loads((out / "growth_meyers2d_fit.json").read_text())
    assert set(fit) == {"exponent", "log_intercept", "max_residual", "tail_liminf_slope"}


def test_counterexample_run_all_pass(tmp_path):
    cfg = write_config(tmp_path, "c.json", CX_CFG)
    out = tmp_path / "out"
    assert cli.main(["counterexample", "--config", str(cfg), "--out", str(out)]) == 0
    rows = rep.read_csv(out / "counterexample.csv")
    assert rows and all(r["verdict"] == "PASS" for r in rows)


def test_capacity_run_with_oracle(tmp_path):
    cfg = write_config(tmp_path, "cap.json", {
        "kind": "capacity", "seed": 0,
        "items": [{"name": "ball", "p": 2, "dim": 3, "inner_radius": 1.0,
                   "outer_radius": 2.0, "cells": 16, "tolerance": 0.15}],
    })
    out = tmp_path / "out"
    assert cli.main(["capacity", "--config", str(cfg), "--out", str(out)]) == 0
    rows = rep.read_csv(out / "capacity.csv")
    assert rows[0]["verdict"] == "PASS"
    records = json.loads((out / "capacity.json").read_text())
    assert records[0]["converged"] is True


def test_capacity_failure_exits_two(tmp_path):
    cfg = write_config(tmp_path, "cap.json", {
        "kind": "capacity", "seed": 0,
        "items": [{"name": "ball", "p": 2, "dim": 2, "inner_radius": 0.4,
                   "outer_radius": 0.9, "box_halfwidth": 1.0, "cells": 16,
                   "tolerance": 1e-9}],
    })
    out = tmp_path / "out"
    assert cli.main(["capacity", "--config", str(cfg), "--out", str(out)]) == 2
    rows = rep.read_csv(out / "capacity.csv")
    assert rows[0]["verdict"] == "FAIL"


def test_solve_run(tmp_path):
    cfg = write_config(tmp_path, "s.json", {
        "kind": "solve", "seed": 0,
        "items": [{"family": "meyers2d", "mu": 0.5, "cells": [8, 16]}],
    })
    out = tmp_path / "out"
    assert cli.main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    rows = rep.read_csv(out / "solve.csv")
    assert rows[0]["verdict"] == "" and rows[1]["verdict"] == "PASS"
    assert float(rows[1]["contraction"]) >= 1.5


def test_dgcheck_run(tmp_path):
    cfg = write_config(tmp_path, "d.json", {
        "kind": "dgcheck", "seed": 1,
        "items": [
            {"check": "caccioppoli", "family": "meyers2d", "mu": 0.5,
             "cells": 16, "samples": 5},
            {"check": "lemma", "family": "meyers2d", "mu": 0.5,
             "cells": 16, "samples": 5},
            {"check": "weak_harnack", "family": "meyers2d", "mu": 0.5,
             "halfwidth": 4.5, "cells": 72, "radii": [0.5, 1.0, 2.0]},
        ],
    })
    out = tmp_path / "out"
    assert cli.main(["dgcheck", "--config", str(cfg), "--out", str(out)]) == 0
    rows = rep.read_csv(out / "dgcheck.csv")
    assert list(rows[0].keys()) == ["check", "family", "R", "rho", "sigma",
                                    "tau", "value", "verdict"]
    assert any(r["check"] == "weak_harnack_spread" and r["verdict"] == "PASS"
               for r in rows)


def test_dgcheck_rejects_other_families():
    with pytest.raises(cli.ConfigError, match="meyers2d"):
        cli.parse_config({"kind": "dgcheck", "seed": 0,
                          "items": [{"check": "lemma", "family": "cone3d",
                                     "alpha": -0.5}]})


def test_identical_config_and_seed_outputs_identical_bytes(tmp_path):
    cfg = write_config(tmp_path, "c.json", CX_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    old = os.environ.get("LAB_THREADS")
    try:
        os.environ["LAB_THREADS"] = "1"
        cli.main(["counterexample", "--config", str(cfg), "--out", str(out1)])
        os.environ["LAB_THREADS"] = "4"
        cli.main(["counterexample", "--config", str(cfg), "--out", str(out2)])
    finally:
        if old is None:
            os.environ.pop("LAB_THREADS", None)
        else:
            os.environ["LAB_THREADS"] = old
    assert digest(out1 / "counterexample.csv") == digest(out2 / "counterexample.csv")


def test_report_empty_inputs(tmp_path):
    cfg = write_config(tmp_path, "r.json", {"kind": "report", "inputs": []})
    out = tmp_path / "out"
    assert cli.main(["report", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "summary.csv").read_text().strip() == "check,pass,fail,total"


def test_report_missing_input(tmp_path, capsys):
    cfg = write_config(tmp_path, "r.json", {"kind": "report",
                                            "inputs": ["does_not_exist.csv"]})
    status = cli.main(["report", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert status == 1
    assert "not found" in capsys.readouterr().err


def test_report_aggregates_and_renders_figures(tmp_path):
    growth_cfg = write_config(tmp_path, "g.json", GROWTH_CFG)
    cli.main(["growth", "--config", str(growth_cfg), "--out", str(tmp_path / "g")])
    cap_cfg = write_config(tmp_path, "cap.json", {
        "kind": "capacity", "seed": 0,
        "items": [{"name": "tight", "p": 2, "dim": 2, "inner_radius": 0.4,
                   "outer_radius": 0.9, "box_halfwidth": 1.0, "cells": 16,
                   "tolerance": 1e-9}],
    })
    cli.main(["capacity", "--config", str(cap_cfg), "--out", str(tmp_path / "cap")])
    report_cfg = write_config(tmp_path, "r.json", {
        "kind": "report",
        "inputs": [str(tmp_path / "g" / "growth_summary.csv"),
                   str(tmp_path / "g" / "growth_meyers2d.csv"),
                   str(tmp_path / "cap" / "capacity.csv")],
    })
    out = tmp_path / "report"
    status = cli.main(["report", "--config", str(report_cfg), "--out", str(out)])
    assert status == 2  # the deliberately impossible capacity tolerance fails
    rows = {r["check"]: r for r in rep.read_csv(out / "summary.csv")}
    assert rows["capacity"]["fail"] == "1"
    assert rows["growth_summary"]["pass"] == "1"
    for png in ("summary.png", "growth_meyers2d.png", "capacity.png"):
        assert (out / png).stat().st_size > 0
