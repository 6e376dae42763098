import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from banditlab import cli, harness
from banditlab.env import derive_stream
from banditlab.harness import (
    ConfigError,
    RegretReport,
    bound,
    build_environment,
    emit,
    parse_config,
    render_csv,
    run_experiment,
    run_replica,
    sweep,
)

BASE_INI = """
[experiment]
policy = ucb
horizon = 500
replicas = 4
seed = 11

[policy]
alpha = 2.5

[environment]
kind = stochastic
means = 0.9, 0.6

[overlays]
names = ucb

[output]
dir = {out}
format = csv
"""


def _config(**overrides):
    cfg = {
        "policy": "ucb", "horizon": 500, "replicas": 4, "seed": 11, "workers": 1,
        "policy_params": {"alpha": "2.5"}, "env_kind": "stochastic",
        "env_params": {"means": "0.9,0.6"}, "overlays": ["ucb"],
        "output": {"dir": ".", "format": "csv", "basename": "report"},
    }
    cfg.update(overrides)
    return cfg


def test_parse_config_roundtrip(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(BASE_INI.format(out=tmp_path))
    cfg = parse_config(path)
    assert cfg["policy"] == "ucb"
    assert cfg["horizon"] == 500
    assert cfg["overlays"] == ["ucb"]


def test_parse_config_rejects_unknown_keys():
    bad = BASE_INI.format(out=".").replace("alpha = 2.5", "alpha = 2.5\nbogus = 1")
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(bad)
    with pytest.raises(ConfigError, match="section"):
        parse_config(BASE_INI.format(out=".") + "\n[mystery]\nx = 1\n")
    with pytest.raises(ConfigError, match="policy"):
        parse_config(BASE_INI.format(out=".").replace("policy = ucb", "policy = nosuch"))
    with pytest.raises(ConfigError, match="overlay"):
        parse_config(BASE_INI.format(out=".").replace("names = ucb", "names = nosuch"))


def test_empty_horizon_report():
    report = run_experiment(_config(horizon=0, replicas=1, overlays=[]))
    assert report.mean_terminal == 0.0
    assert report.mean_curve.size == 0
    csv_text = render_csv(report)
    assert csv_text.splitlines() == ["# banditlab-report-v1", "round,mean_regret,sem"]


def test_same_config_gives_byte_identical_csv():
    a = render_csv(run_experiment(_config()))
    b = render_csv(run_experiment(_config()))
    assert a == b


def test_parallel_matches_serial():
    serial = run_experiment(_config(workers=1, replicas=6))
    parallel = run_experiment(_config(workers=4, replicas=6))
    assert serial.content_dict() == parallel.content_dict()


def test_aggregation_is_exact_mean():
    cfg = _config(replicas=5, overlays=[])
    env = build_environment(cfg["env_kind"], cfg["env_params"], cfg["horizon"], cfg["seed"])
    curves = [run_replica(cfg, env, derive_stream(cfg["seed"], i)) for i in range(5)]
    report = run_experiment(cfg)
    assert np.allclose(report.mean_curve, np.mean(curves, axis=0), atol=1e-12)
    sem = np.std(curves, axis=0, ddof=1) / math.sqrt(5)
    assert np.allclose(report.sem_curve, sem, atol=1e-12)


def test_stochastic_curve_monotone():
    report = run_experiment(_config(overlays=[]))
    assert (np.diff(report.mean_curve) >= -1e-12).all()


def test_report_json_roundtrip():
    report = run_experiment(_config())
    restored = RegretReport.from_dict(json.loads(json.dumps(report.to_dict())))
    assert restored.to_dict() == report.to_dict()


def test_emit_formats(tmp_path):
    report = run_experiment(_config())
    csv_path = emit(report, "csv", tmp_path / "r.csv")
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "# banditlab-report-v1"
    assert lines[1] == "round,mean_regret,sem,overlay_ucb"
    assert len(lines) == 2 + report.horizon

    no_overlay = run_experiment(_config(overlays=[]))
    text = render_csv(no_overlay)
    assert "overlay" not in text

    json_path = emit(report, "json", tmp_path / "r.json")
    data = json.loads(json_path.read_text())
    assert data["schema"] == "banditlab-report-v1"

    svg_path = emit(report, "svg", tmp_path / "r.svg")
    root = ET.fromstring(svg_path.read_text())
    assert root.tag.endswith("svg")
    with pytest.raises(ConfigError):
        emit(report, "pdf", tmp_path / "r.pdf")


def test_sweep_grid():
    cfg = _config(overlays=[])
    reports = sweep(cfg, "experiment.horizon", [100, 200, 400])
    assert [r.horizon for r in reports] == [100, 200, 400]
    assert all(r.seed == cfg["seed"] for r in reports)
    with pytest.raises(ConfigError):
        sweep(cfg, "experiment.horizon", [])


def test_bound_dispatch():
    assert bound("exp3", n=100, K=2) == pytest.approx(16.651, abs=1e-3)
    assert bound("minimax-lower", n=400, K=2) == pytest.approx(1.4142, abs=1e-4)
    assert bound("ucb", alpha=2.5, gaps=[0.3], n=10**4) == pytest.approx(158.5, abs=0.1)
    assert bound("sgs", n=10**5, C_L=1.0, C_H=1.0) == pytest.approx(3435793.4, rel=1e-6)
    with pytest.raises(ConfigError):
        bound("nosuch", n=1)


def test_nonoblivious_adversary_through_harness():
    cfg = _config(policy="exp3", policy_params={}, env_kind="nonoblivious",
                  env_params={"k": "3", "adversary": "grudge"}, overlays=["exp3"],
                  horizon=300, replicas=3)
    report = run_experiment(cfg)
    # the grudge adversary punishes concentration; exp3 stays below its cap
    assert report.mean_terminal <= report.overlays["exp3"]
    with pytest.raises(ConfigError, match="adversary"):
        run_experiment(_config(policy="exp3", env_kind="nonoblivious",
                               env_params={"k": "3", "adversary": "nosuch"},
                               overlays=[], policy_params={}))


def test_infeasible_parameters_name_the_condition():
    cfg = _config(policy="osmd-ball", policy_params={"eta": "0.2"},
                  env_kind="linear-ball", env_params={"d": "5"}, overlays=[],
                  horizon=100, replicas=1)
    with pytest.raises(ValueError, match="eta"):
        run_experiment(cfg)


def test_context_csv_loader(tmp_path):
    path = tmp_path / "ctx.csv"
    path.write_text("a,0.1,0.9\nb,0.5,0.5\na,0.2,0.8\n")
    cfg = _config(policy="sexp3", policy_params={}, env_kind="contextual",
                  env_params={"k": "2", "csv": str(path)}, overlays=["sexp3"],
                  horizon=3, replicas=2)
    report = run_experiment(cfg)
    assert report.horizon == 3
    assert report.overlays["sexp3"] > 0


def test_multiclass_csv_loader(tmp_path):
    path = tmp_path / "mc.csv"
    rows = ["1,0,0", "0,1,1", "1,0,0", "0,1,1"]
    path.write_text("\n".join(rows) + "\n")
    cfg = _config(policy="banditron", policy_params={"gamma": "0.2"},
                  env_kind="multiclass",
                  env_params={"k": "2", "d": "2", "csv": str(path)},
                  overlays=[], horizon=4, replicas=1)
    report = run_experiment(cfg)
    assert report.mean_terminal <= 4.0


def test_cli_run_and_bound(tmp_path, capsys):
    path = tmp_path / "exp.ini"
    path.write_text(BASE_INI.format(out=tmp_path))
    rc = cli.main(["run", "--config", str(path), "--replicas", "2",
                   "--assert-bounds"])
    assert rc == 0
    assert (tmp_path / "report.csv").exists()
    rc = cli.main(["bound", "exp3", "n=100", "K=2"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "16.65" in out


def test_cli_sweep(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(BASE_INI.format(out=tmp_path))
    rc = cli.main(["sweep", "--config", str(path), "--param", "experiment.horizon",
                   "--values", "50,100", "--replicas", "2"])
    assert rc == 0
    assert (tmp_path / "report_horizon_50.csv").exists()
    assert (tmp_path / "report_horizon_100.csv").exists()


def test_cli_selftest_and_oracle():
    assert cli.main(["selftest"]) == 0
    assert cli.main(["oracle", "--horizon", "4", "--replicas", "800"]) == 0
