import json
from dataclasses import replace

import pytest

from mclear import cli

SPEC = ('{"version": 1, "count": 25, "seed": 3, "entities": ['
        '{"kind": "gen", "id": 2, "dist": "normal", "mean": 50, "sd": 20}]}')


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_clear_stochastic(capsys, tmp_path):
    code, out, _ = run(capsys, "clear", "--case", "builtin:system1", "--mode", "sto",
                       "--out", str(tmp_path), "--format", "json")
    assert code == 0
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["summary"][0]["mode"] == "sto"
    assert data["summary"][0]["total_uplift"] <= 1e-6
    assert "theorems" in data and "| sto |" in out


def test_compare_prints_differences(capsys):
    code, out, _ = run(capsys, "clear", "--case", "builtin:system1", "--mode", "compare")
    assert code == 0
    assert "phi_det_minus_sto" in out and "phi_sto_minus_ws: 35" in out
    for mode in ("det", "sto", "ws"):
        assert f"| {mode} |" in out


@pytest.mark.parametrize("argv", [
    ("clear", "--mode", "det"),
    ("clear", "--case", "builtin:system1"),
    ("clear", "--case", "builtin:nope", "--mode", "det"),
    ("clear", "--case", "builtin:system1", "--mode", "bogus"),
    ("clear", "-m", "det"),
    ("verify",),
    (),
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and err


def test_missing_case_file(capsys, tmp_path):
    code, _, err = run(capsys, "clear", "--case", str(tmp_path / "none.case"), "--mode", "det")
    assert code == 1 and "error" in err


def test_solver_failure_exits_2(capsys, tmp_path):
    from mclear.io import save_case
    from tests_support import angle_locked_case
    p = save_case(angle_locked_case(), tmp_path / "locked.case")
    code, _, err = run(capsys, "clear", "--case", str(p), "--mode", "det")
    assert code == 2 and "infeasible" in err


def test_verify_corrupted_outcome_exits_3(capsys, monkeypatch):
    def corrupt(out):
        return replace(out, real_time=replace(out.real_time, Pi=out.real_time.Pi * 0.5))
    monkeypatch.setattr(cli, "outcome_hook", corrupt)
    code, out, _ = run(capsys, "verify", "--case", "builtin:system1")
    assert code == 3
    assert "FAIL uplift_adequacy" in out


def test_verify_prints_every_check(capsys):
    code, out, _ = run(capsys, "verify", "--case", "builtin:system1")
    for name in ("distortion_bounds", "quantity_bounds", "quantile_convergence",
                 "uplift_adequacy", "participant_bounds"):
        assert name in out
    assert code in (0, 3)
    assert code == (0 if "FAIL" not in out else 3)


def test_gen_scenarios_deterministic(capsys, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text(SPEC)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for target in (a, b):
        code, _, _ = run(capsys, "gen-scenarios", "--case", "builtin:system1", "--spec", str(spec),
                         "--seed", "7", "--count", "25", "--out", str(target))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    probs = json.loads(a.read_text())["probabilities"]
    assert len(probs) == 25
    assert '"probabilities": [0.04, 0.04' in a.read_text()


def test_gen_scenarios_rejects_negative_sd(capsys, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text(SPEC.replace('"sd": 20', '"sd": -1'))
    code, _, err = run(capsys, "gen-scenarios", "--case", "builtin:system1", "--spec", str(spec))
    assert code == 1 and "sd" in err


def test_generated_scenarios_feed_back_into_clear(capsys, tmp_path):
    spec = tmp_path / "s.spec"
    spec.write_text(SPEC)
    sc = tmp_path / "sc.json"
    run(capsys, "gen-scenarios", "--case", "builtin:system1", "--spec", str(spec),
        "--count", "5", "--out", str(sc))
    code, _, _ = run(capsys, "clear", "--case", "builtin:system1", "--scenarios", str(sc),
                     "--mode", "det", "--stat", "median")
    assert code == 0


def test_config_file_and_override(capsys, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"case": "builtin:system1", "mode": "ws", "format": "csv",
                                "out": str(tmp_path / "r")}))
    code, out, _ = run(capsys, "clear", "--config", str(conf), "--mode", "det")
    assert code == 0 and "| det |" in out and "| ws |" not in out
    assert (tmp_path / "r" / "summary.csv").exists()
    conf.write_text(json.dumps({"color": "red"}))
    code, _, err = run(capsys, "clear", "--config", str(conf))
    assert code == 1 and "color" in err


def test_bid_scale_variant(capsys):
    code, out, _ = run(capsys, "verify", "--case", "builtin:system2", "--bid-scale", "0.5,1.5")
    assert "quantity_bounds" in out
    code, _, err = run(capsys, "verify", "--case", "builtin:system2", "--bid-scale", "0.5")
    assert code == 1
