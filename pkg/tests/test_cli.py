import json
import logging

import pytest

from app.cli import broken_phi, build_parser, main, resolve_config
from app.core.errors import ConfigurationError
from app.dgp import EXPERIMENT_THETA0
from app.panels import read_panel_csv


@pytest.fixture(autouse=True)
def restore_logging():
    handlers, level = logging.root.handlers[:], logging.root.level
    yield
    for h in logging.root.handlers[:]:
        logging.root.removeHandler(h)
    for h in handlers:
        logging.root.addHandler(h)
    logging.root.setLevel(level)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out.strip() else None
    return code, report, captured.err


def simulate(capsys, path, *extra):
    return run(capsys, "simulate", "--experiment", "B", "--n", "3", "--seed", "7", "--out", str(path), *extra)


# ---------- simulate ----------

def test_simulate_writes_a_reproducible_panel(capsys, tmp_path):
    code, report, _ = simulate(capsys, tmp_path / "a.csv")
    assert code == 0
    assert report["n"] == 3 and report["T"] == 2
    lines = (tmp_path / "a.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0] == "unit,y0,x1,y1,x2,y2"

    simulate(capsys, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_with_latent_column(capsys, tmp_path):
    code, _, _ = simulate(capsys, tmp_path / "v.csv", "--with-latent")
    assert code == 0
    assert read_panel_csv(tmp_path / "v.csv").v is not None


def test_simulate_custom_design_with_three_periods(capsys, tmp_path):
    path = tmp_path / "c.csv"
    code, report, _ = run(capsys, "simulate", "--experiment", "custom", "--T", "3", "--n", "5", "--out", str(path))
    assert code == 0
    assert report["T"] == 3
    assert path.read_text(encoding="utf-8").splitlines()[0] == "unit,y0,x1,y1,x2,y2,x3,y3"


def test_named_experiment_rejects_other_lengths(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--experiment", "A", "--T", "3", "--n", "5", "--out", str(tmp_path / "x.csv"))
    assert code == 1
    assert "T = 2 only" in err


def test_simulate_needs_an_output(capsys):
    code, report, err = run(capsys, "simulate", "--n", "3")
    assert code == 1
    assert report is None
    assert "simulate needs --out" in err


def test_report_echoes_config(capsys, tmp_path):
    _, report, _ = simulate(capsys, tmp_path / "p.csv")
    assert report["command"] == "simulate"
    assert report["config"]["seed"] == 7
    assert "profile" not in report


def test_profile_flag_adds_step_timings(capsys, tmp_path):
    _, report, _ = simulate(capsys, tmp_path / "p.csv", "--profile")
    assert [s["step"] for s in report["profile"]["steps"]] == ["resolve_config", "simulate", "write_csv"]


def test_profile_is_logged(capsys, caplog, monkeypatch, tmp_path):
    # keep the capture handler on the root logger
    monkeypatch.setattr("app.cli.setup_logging", lambda *args, **kwargs: ["console"])
    with caplog.at_level(logging.INFO, logger="FHR"):
        simulate(capsys, tmp_path / "p.csv")
    finished = [r for r in caplog.records if "finished" in r.getMessage()]
    assert finished and "total_sec" in finished[-1].profile


@pytest.mark.parametrize("argv", [
    ["simulate", "--experiment", "B", "--n", "50", "--seed", "7"],
    ["estimate", "--experiment", "A", "--n", "3000", "--seed", "4", "--moment", "simple"],
    ["check", "--model", "logit"],
])
def test_repeated_runs_print_identical_reports(capsys, tmp_path, argv):
    if argv[0] == "simulate":
        argv = argv + ["--out", str(tmp_path / "same.csv")]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first and first == second


# ---------- estimate ----------

def test_estimate_from_file(capsys, tmp_path):
    path = tmp_path / "panel.csv"
    run(capsys, "simulate", "--experiment", "A", "--n", "20000", "--seed", "3", "--out", str(path))
    code, report, _ = run(capsys, "estimate", "--experiment", "A", "--input", str(path), "--moment", "simple")
    assert code == 0
    assert report["converged"]
    assert set(report["theta_hat"]) == {"alpha", "beta", "gamma"}
    truth = {"alpha": EXPERIMENT_THETA0.alpha, "beta": EXPERIMENT_THETA0.beta[0], "gamma": EXPERIMENT_THETA0.gamma}
    for name, value in report["theta_hat"].items():
        assert abs(value - truth[name]) <= 5.0 * report["se"][name]


def test_malformed_input_reports_the_line(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("unit,y0,x1,y1,x2,y2\n1,0.5,0,1.5,1,2.0\n2,0.5,0,-1.0,1,2.0\n", encoding="utf-8")
    code, report, err = run(capsys, "estimate", "--input", str(path))
    assert code == 1
    assert report is None
    assert "line 3" in err
    assert '"error": "SchemaError"' in err


def test_missing_input_file(capsys, tmp_path):
    code, _, err = run(capsys, "estimate", "--input", str(tmp_path / "nope.csv"))
    assert code == 1
    assert "cannot read input" in err


def test_strict_exogeneity_under_feedback_warns(capsys):
    code, report, _ = run(capsys, "estimate", "--experiment", "B", "--moment", "eff-se", "--n", "5000", "--seed", "3")
    assert code in (0, 1)
    assert any("eff-se" in w for w in report["warnings"])


def test_effect_moment_is_rejected_by_estimate(capsys):
    code, _, err = run(capsys, "estimate", "--moment", "ash", "--n", "100")
    assert code == 1
    assert "ash command" in err


# ---------- check ----------

def test_check_logit_reports_empty_null_space(capsys):
    code, report, _ = run(capsys, "check", "--model", "logit")
    assert code == 0
    assert report["dimension"] == 0
    assert report["model"] == "logit"


def test_check_broken_function_fails(capsys):
    code, report, _ = run(capsys, "check", "--model", "mph", "--phi", "broken")
    assert code == 0
    assert report["passed"] is False
    assert report["cond1_pass"] is False


def test_broken_phi_shape(panel_b, theta0):
    batch = panel_b.take(slice(0, 7))
    assert broken_phi(theta0, batch.y0, batch.y, batch.x).shape == (7, 1)


# ---------- arguments & configuration ----------

@pytest.mark.parametrize("argv", [["simulate", "--bogus"], ["estimate", "--experiment", "C"], ["frobnicate"]])
def test_bad_arguments_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"bogus": 1}), encoding="utf-8")
    code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path / "p.csv"))
    assert code == 1
    assert "ConfigurationError" in err


def test_flags_override_the_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 4, "seed": 5, "experiment": "A", "eval_point": [2.0, 2.0, 0.0]}), encoding="utf-8")
    args = build_parser().parse_args(["simulate", "--config", str(cfg), "--n", "3", "--x", "1"])
    config = resolve_config(args)
    assert config.n == 3
    assert config.seed == 5
    assert config.experiment == "A"
    assert config.eval_point == (2.0, 2.0, 1.0)


def test_theta0_override_is_validated(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"theta0": {"delta": 1.0}}), encoding="utf-8")
    args = build_parser().parse_args(["estimate", "--config", str(cfg)])
    with pytest.raises(ConfigurationError):
        resolve_config(args)
