"""End-to-end checks of the JSON-config command line driver.

Every test invokes main() in-process and asserts on the exit code, the JSON
document printed to stdout, and the files left (or deliberately not left)
behind.  Expected numbers come from the library itself where the CLI is a
thin wrapper, and from frozen closed-form values where it is not.
"""

import json
import os

import numpy as np
import pytest

from gamma_elastica import LimitParams, fqc, u_of_n
from gamma_elastica.cli import THREADS_ENV, main

E1 = np.array([1.0, 0.0, 0.0])


def run_cli(capsys, argv):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def csv_rows(text):
    lines = text.splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    return comments, body[0], [ln.split(",") for ln in body[1:]]


NEMATIC = {"kind": "nematic"}
SINGLE_WELL_2D = {"kind": "synthetic", "wells": [[[0.0, 0.0], [0.0, 0.0]]]}


# ---------------------------------------------------------------------------
# eval


def test_eval_values_nematic(tmp_path, capsys):
    a = 1.1
    b = a ** -0.5
    well_member = [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, b]]
    u_e1 = u_of_n(E1).tolist()
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "limit_params": {"mu": 1.0, "lam": 2.0},
        "eval": {
            "quantities": ["w_eps", "v", "fqc"],
            "eps": 0.1,
            "matrices": [well_member, u_e1, np.eye(3).tolist()],
        },
    })
    code, out, _ = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 0
    doc = json.loads(out)
    assert doc["eps"] == 0.1
    rows = doc["results"]
    # stress-free on the energy well
    assert abs(rows[0]["w_eps"]) <= 1e-12
    # the limiting density vanishes exactly on the spontaneous strains
    assert rows[1]["v"] == 0.0
    # quasiconvexification at the identity, mu=1 lam=2
    assert rows[2]["fqc"] == pytest.approx(12.0, abs=1e-9)
    assert rows[2]["fqc"] == fqc(LimitParams(mu=1.0, lam=2.0), np.eye(3))


def test_eval_serializes_infinity(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "eval": {
            "quantities": ["w_eps"],
            "eps": 0.05,
            "matrices": [(-np.eye(3)).tolist()],
        },
    })
    code, out, _ = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 0
    doc = json.loads(out)
    assert doc["results"][0]["w_eps"] == "+inf"


def test_eval_eps_required_and_flag_override(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "eval": {"quantities": ["w_eps"], "matrices": [np.eye(3).tolist()]},
    })
    code, _, err = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 2
    assert "eps" in err
    code, out, _ = run_cli(capsys, ["eval", "--config", cfg, "--eps", "0.1"])
    assert code == 0
    assert json.loads(out)["eps"] == 0.1


def test_eval_single_well_fqc_is_convex_quadratic(tmp_path, capsys):
    F = [[0.2, 0.1], [0.0, 0.3]]
    E = 0.5 * (np.asarray(F) + np.asarray(F).T)
    cfg = write_cfg(tmp_path, {
        "model": SINGLE_WELL_2D,
        "eval": {"quantities": ["fqc"], "matrices": [F]},
    })
    code, out, _ = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 0
    got = json.loads(out)["results"][0]["fqc"]
    assert got == pytest.approx(0.5 * float(np.sum(E * E)), abs=1e-12)


def test_eval_multiwell_fqc_needs_limit_params(tmp_path, capsys):
    W = np.diag([0.1, -0.1]).tolist()
    cfg = write_cfg(tmp_path, {
        "model": {"kind": "synthetic", "wells": [W, (-np.asarray(W)).tolist()]},
        "eval": {"quantities": ["fqc"], "matrices": [np.eye(2).tolist()]},
    })
    code, _, err = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 2
    assert "limit_params" in err


def test_eval_output_file_matches_stdout_and_reruns_byte_identical(tmp_path, capsys):
    out_prefix = str(tmp_path / "runs" / "point")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "eval": {"quantities": ["v"], "matrices": [np.diag([0.3, 0.0, -0.3]).tolist()]},
    })
    argv = ["eval", "--config", cfg]
    code, out, _ = run_cli(capsys, argv)
    assert code == 0
    path = out_prefix + ".json"
    first = open(path, "rb").read()
    assert first.decode("utf-8") == out
    code, out2, _ = run_cli(capsys, argv)
    assert code == 0
    assert out2 == out
    assert open(path, "rb").read() == first


# ---------------------------------------------------------------------------
# scan


def test_scan_uniform_limit_report_and_csv(tmp_path, capsys):
    out_prefix = str(tmp_path / "ul")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "scan": {"op": "uniform-limit", "grid": {"radius": 2.0, "count": 120}},
    })
    code, out, _ = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 0
    doc = json.loads(out)
    report = doc["report"]
    assert report["passed"] is True
    assert report["rate"] >= 0.9
    assert report["eps"][0] == pytest.approx(0.2)
    assert len(report["eps"]) == 8

    comments, header, rows = csv_rows(open(out_prefix + ".csv", encoding="utf-8").read())
    assert header == "eps,value,target,error"
    assert len(rows) == 8
    assert float(rows[0][0]) == pytest.approx(0.2)
    assert any(doc["config_sha256"] in c for c in comments)

    saved = json.loads(open(out_prefix + ".json", encoding="utf-8").read())
    assert saved == doc


def test_scan_dist_limit_single_well_targets(tmp_path, capsys):
    E = np.array([[0.3, 0.1, 0.0], [0.1, -0.2, 0.05], [0.0, 0.05, 0.1]])
    out_prefix = str(tmp_path / "dl")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "scan": {
            "op": "dist-limit",
            "family": "single-well",
            "strain": E.tolist(),
            "schedule": {"values": [0.01, 0.003, 0.001]},
        },
    })
    code, out, _ = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 0
    _, _, rows = csv_rows(open(out_prefix + ".csv", encoding="utf-8").read())
    assert len(rows) == 3
    e2 = float(np.sum(E * E))
    for row in rows:
        assert float(row[2]) == pytest.approx(e2, abs=1e-12)
    assert json.loads(out)["report"]["passed"] is True


def test_scan_eps_flag_collapses_schedule(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "scan": {
            "op": "dist-limit",
            "family": "single-well",
            "strain": np.diag([0.2, -0.1, 0.0]).tolist(),
        },
    })
    code, out, _ = run_cli(capsys, ["scan", "--config", cfg, "--eps", "0.001"])
    assert code == 0
    assert json.loads(out)["report"]["eps"] == [0.001]


def test_scan_hull_membership_flags(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "limit_params": {"mu": 1.0, "lam": 2.0},
        "scan": {"op": "hull", "strain": u_of_n(E1).tolist()},
    })
    code, out, _ = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 0
    doc = json.loads(out)
    assert doc["member_of_Vqce_zero"] is True
    assert doc["implies_Qe2_member"] is True


def test_scan_hull_rejects_negative_lam(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "limit_params": {"mu": 1.0, "lam": -1.0},
        "scan": {"op": "hull", "strain": np.zeros((3, 3)).tolist()},
    })
    code, _, err = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 2
    assert "error" in err


def test_scan_quadratic_bound_constants(tmp_path, capsys):
    out_prefix = str(tmp_path / "qb")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "scan": {"op": "quadratic-bound", "grid": {"count": 60}, "verify_radius": 2.0},
    })
    code, out, _ = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 0
    doc = json.loads(out)
    assert doc["c1"] > 0.0 and doc["c2"] > 0.0
    assert os.path.exists(out_prefix + ".json")
    assert not os.path.exists(out_prefix + ".csv")


# ---------------------------------------------------------------------------
# sweep


def test_sweep_relaxed_only_recovers_envelope(tmp_path, capsys):
    data = (1.5 * u_of_n(E1)).tolist()
    out_prefix = str(tmp_path / "sw")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "sweep": {
            "cells": [[0.1, 2]],
            "data": data,
            "relaxed_only": True,
            "solve": {"starts": 2, "max_iter": 300},
        },
    })
    code, out, _ = run_cli(capsys, ["sweep", "--config", cfg])
    assert code == 0
    cell = json.loads(out)["report"]["cells"][0]
    # fqc(1.5 U(e1)) = 0.375 mu with the default nematic mu = 3
    assert cell["m_rel"] == pytest.approx(1.125, abs=1e-8)
    assert cell["m_eps"] == "nan" and cell["gap"] == "nan"
    _, _, rows = csv_rows(open(out_prefix + ".csv", encoding="utf-8").read())
    assert len(rows) == 1 and rows[0][1] == "nan"


def test_sweep_gap_assertion_drives_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "sweep": {
            "cells": [[0.1, 1]],
            "data": np.zeros((3, 3)).tolist(),
            "relaxed_only": True,
            "require_gap_decrease": True,
            "solve": {"starts": 1, "max_iter": 50},
        },
    })
    code, _, _ = run_cli(capsys, ["sweep", "--config", cfg])
    assert code == 1


# ---------------------------------------------------------------------------
# config handling, overrides, failure modes


def test_malformed_json_exits_2_without_files(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    out_prefix = str(tmp_path / "never" / "x")
    code, out, err = run_cli(capsys, ["eval", "--config", str(path), "--out", out_prefix])
    assert code == 2
    assert out == ""
    assert "valid JSON" in err
    assert not (tmp_path / "never").exists()


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "bogus": 1,
        "eval": {"quantities": ["v"], "matrices": [np.zeros((3, 3)).tolist()]},
    })
    code, _, err = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 2
    assert "schema" in err


def test_missing_config_file_exits_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, ["eval", "--config", str(tmp_path / "absent.json")])
    assert code == 2
    assert "error" in err


def test_runtime_failure_exits_3_and_writes_nothing(tmp_path, capsys):
    # radius 30 strains invert the deformation at the largest eps
    out_prefix = str(tmp_path / "blowup")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "scan": {"op": "uniform-limit", "grid": {"radius": 30.0, "count": 40}},
    })
    code, out, err = run_cli(capsys, ["scan", "--config", cfg])
    assert code == 3
    assert out == ""
    assert "runtime error" in err
    assert not os.path.exists(out_prefix + ".json")
    assert not os.path.exists(out_prefix + ".csv")


def test_dry_run_validates_and_writes_nothing(tmp_path, capsys):
    out_prefix = str(tmp_path / "plan")
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "out": out_prefix,
        "sweep": {"cells": [[0.1, 2]], "data": np.zeros((3, 3)).tolist()},
    })
    code, out, _ = run_cli(capsys, ["sweep", "--config", cfg, "--dry-run"])
    assert code == 0
    doc = json.loads(out)
    assert doc["dry_run"] is True
    assert doc["would_write"] == [out_prefix + ".csv", out_prefix + ".json"]
    assert not os.path.exists(out_prefix + ".json")
    assert not os.path.exists(out_prefix + ".csv")


def test_threads_env_and_flag_precedence(tmp_path, capsys, monkeypatch):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "eval": {"quantities": ["v"], "matrices": [np.zeros((3, 3)).tolist()]},
    })
    monkeypatch.setenv(THREADS_ENV, "abc")
    code, _, err = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 2
    assert THREADS_ENV in err
    monkeypatch.setenv(THREADS_ENV, "2")
    code, _, _ = run_cli(capsys, ["eval", "--config", cfg])
    assert code == 0
    # explicit flag wins and the bad env value is never read
    monkeypatch.setenv(THREADS_ENV, "abc")
    code, _, _ = run_cli(capsys, ["eval", "--config", cfg, "--threads", "1"])
    assert code == 0


def test_seed_override_enters_config_hash(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {
        "model": NEMATIC,
        "eval": {"quantities": ["v"], "matrices": [np.zeros((3, 3)).tolist()]},
    })
    _, out1, _ = run_cli(capsys, ["eval", "--config", cfg, "--seed", "1"])
    _, out2, _ = run_cli(capsys, ["eval", "--config", cfg, "--seed", "2"])
    assert json.loads(out1)["config_sha256"] != json.loads(out2)["config_sha256"]
