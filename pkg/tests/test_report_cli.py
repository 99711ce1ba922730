import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from seirpolicy import cli
from seirpolicy.harness import ExperimentSpec, random_search, run_experiment, summarize
from seirpolicy.plots import render_plots
from seirpolicy.report import read_summary_csv, read_trajectory_csv, write_trajectory_csv
from seirpolicy.scenario import evaluate_sequence, experiment_scenario

SAFE = [0] * 80 + [1] * 40 + [3] * 80


@pytest.fixture(scope="module")
def exp1():
    return experiment_scenario(1)


def test_trajectory_csv_shape_and_roundtrip(exp1, tmp_path):
    rng = np.random.default_rng(0)
    result = evaluate_sequence(exp1, rng.integers(0, 4, 200).tolist())
    path = write_trajectory_csv(result, tmp_path / "t.csv")
    raw = path.read_bytes()
    assert raw.endswith(b"\n") and b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert len(lines) == 201
    assert lines[0] == "day,action,s,e,i,r,icu_demand,beds,reward,dfa_state"
    rows = read_trajectory_csv(path)
    # summing the parsed column in day order replays the accumulation exactly
    total = 0.0
    for row in rows:
        total += float(row["reward"])
    assert total == result.total_reward
    for row, st in zip(rows, result.trajectory[1:]):
        assert float(row["i"]) == st.i


def test_day_one_beds(exp1, tmp_path):
    result = evaluate_sequence(exp1, [3] * 200)
    rows = read_trajectory_csv(write_trajectory_csv(result, tmp_path / "t.csv"))
    assert rows[0]["day"] == "1" and rows[0]["action"] == "3"
    assert float(rows[0]["beds"]) == pytest.approx(0.0015, rel=1e-12)


def test_empty_result_rejected(exp1, tmp_path):
    result = evaluate_sequence(exp1, [0] * 200)
    empty = type(result)(**{**result.__dict__, "actions": []})
    with pytest.raises(ValueError, match="empty"):
        write_trajectory_csv(empty, tmp_path / "t.csv")
    with pytest.raises(ValueError, match="empty"):
        render_plots(empty, None, str(tmp_path / "p"))


def test_unwritable_path_names_path(exp1, tmp_path):
    result = evaluate_sequence(exp1, [0] * 200)
    bad = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="missing"):
        write_trajectory_csv(result, bad)


def test_svgs_well_formed_and_capacity_respected(exp1, tmp_path):
    result = evaluate_sequence(exp1, SAFE)
    assert not result.violation_days and result.total_reward > 0
    assert np.all(np.asarray(result.icu_demand) <= np.asarray(result.bed_capacity))
    stats = [summarize("ga", [1500.0, 1600.0], [1.0, 1.0]), summarize("random", [1400.0], [0.1])]
    paths = render_plots(result, stats, str(tmp_path / "best"))
    assert [p.rsplit("_", 1)[1] for p in paths] == ["icu.svg", "actions.svg", "summary.svg"]
    for p in paths:
        root = ET.parse(p).getroot()
        assert root.tag.endswith("svg")


def test_plots_are_deterministic(exp1, tmp_path):
    result = evaluate_sequence(exp1, SAFE)
    a = render_plots(result, None, str(tmp_path / "a"))
    b = render_plots(result, None, str(tmp_path / "b"))
    for pa, pb in zip(a, b):
        assert open(pa, "rb").read() == open(pb, "rb").read()


def test_single_execution_summary():
    st = summarize("random", [1450.0], [0.5])
    assert st.avg == st.max == st.min == 1450.0 and st.std == 0.0


def test_random_search_ties_and_validation(exp1):
    with pytest.raises(ValueError):
        random_search(exp1, 0)
    a = random_search(exp1, 300, np.random.default_rng(3), chunk=300)
    b = random_search(exp1, 300, np.random.default_rng(3), chunk=100)
    assert a.actions == b.actions


def _read_runs(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_experiment_outputs_and_summary_arithmetic(tmp_path):
    spec = ExperimentSpec(id=1, method="random", executions=4, base_seed=10, output_dir=str(tmp_path),
                          overrides=["random.samples=200"])
    stats, outcomes = run_experiment(spec)
    assert [o.seed for o in outcomes] == [10, 11, 12, 13]
    for s in range(10, 14):
        assert (tmp_path / f"run_{s}_trajectory.csv").exists()
    runs = _read_runs(tmp_path / "runs.csv")
    vals = [float(r["best_reward"]) for r in runs]
    summary = read_summary_csv(tmp_path / "summary.csv")[0]
    mean = math.fsum(vals) / len(vals)
    assert float(summary["avg"]) == pytest.approx(mean, rel=1e-15, abs=1e-12)
    assert float(summary["max"]) == max(vals) and float(summary["min"]) == min(vals)
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / len(vals))
    assert float(summary["std"]) == pytest.approx(std, rel=1e-12, abs=1e-12)
    assert summary["runs"] == "4" and summary["mean_time_sec"] == ""
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seeds"] == [10, 11, 12, 13] and manifest["completed"] == 4
    assert manifest["config"]["random_samples"] == 200
    for p in manifest["files"]:
        if p.endswith(".svg"):
            ET.parse(p)


def test_summary_byte_identical_on_rerun(tmp_path):
    outs = []
    for name in ("a", "b"):
        spec = ExperimentSpec(id=3, method="ga", executions=2, base_seed=5, output_dir=str(tmp_path / name),
                              overrides=["ga.generations=3", "ga.population_size=10"], plots=False)
        run_experiment(spec)
        outs.append((tmp_path / name / "summary.csv").read_bytes())
    assert outs[0] == outs[1]


def test_worker_pool_matches_serial(tmp_path):
    results = []
    for name, workers in (("serial", 1), ("pool", 2)):
        spec = ExperimentSpec(id=2, method="random", executions=3, output_dir=str(tmp_path / name),
                              overrides=["random.samples=100"], workers=workers, plots=False)
        run_experiment(spec)
        results.append((tmp_path / name / "summary.csv").read_bytes())
    assert results[0] == results[1]


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(id=4, method="ga")
    with pytest.raises(ValueError):
        ExperimentSpec(id=1, method="sa")
    with pytest.raises(ValueError):
        ExperimentSpec(id=1, method="ga", executions=0)


@pytest.mark.parametrize(
    "text, expected",
    [("3,3,0", [3, 3, 0]), ("3*2,0*3", [3, 3, 0, 0, 0]), ("3300", [3, 3, 0, 0])],
)
def test_parse_actions_inline(text, expected):
    assert cli.parse_actions(text) == expected


def test_cli_simulate(tmp_path, capsys):
    rc = cli.main(["simulate", "--actions", "0*200", "--out", str(tmp_path)])
    assert rc == 0
    assert "total_reward=800 " in capsys.readouterr().out
    rows = read_trajectory_csv(tmp_path / "trajectory.csv")
    assert len(rows) == 200
    for name in ("simulate_icu.svg", "simulate_actions.svg"):
        ET.parse(tmp_path / name)
    # a trajectory CSV is accepted back as an action file
    assert cli.main(["simulate", "--actions", str(tmp_path / "trajectory.csv"), "--out", str(tmp_path / "again")]) == 0


def test_cli_simulate_with_config(tmp_path, capsys):
    cfgfile = tmp_path / "short.cfg"
    cfgfile.write_text("horizon = 10\n", encoding="utf-8")
    rc = cli.main(["simulate", "--config", str(cfgfile), "--actions", "3333333333", "--out", str(tmp_path)])
    assert rc == 0 and "total_reward=100 " in capsys.readouterr().out


def test_cli_optimize_random(tmp_path, capsys):
    rc = cli.main(["optimize", "--method", "random", "--experiment", "1", "--seed", "2",
                   "--set", "random.samples=50", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "method=random experiment=1 seed=2" in out
    assert (tmp_path / "best_trajectory.csv").exists() and (tmp_path / "summary.csv").exists()


def test_cli_experiment(tmp_path, capsys):
    rc = cli.main(["experiment", "--id", "1", "--method", "random", "--runs", "2",
                   "--set", "random.samples=20", "--out", str(tmp_path)])
    assert rc == 0 and "runs=2/2" in capsys.readouterr().out
    assert (tmp_path / "manifest.json").exists()


def test_cli_demo_fig2(tmp_path, capsys):
    assert cli.main(["demo-fig2", "--out", str(tmp_path)]) == 0
    assert "s(60)=" in capsys.readouterr().out
    ET.parse(tmp_path / "fig2.svg")
    assert len((tmp_path / "fig2_trajectory.csv").read_text().splitlines()) == 62


def test_cli_env_default_out(tmp_path, monkeypatch):
    monkeypatch.setenv("SEIRPOLICY_OUT", str(tmp_path / "envout"))
    assert cli.main(["demo-fig2"]) == 0
    assert (tmp_path / "envout" / "fig2.svg").exists()


@pytest.mark.parametrize(
    "argv, message",
    [
        (["simulate", "--actions", "3,3"], "sequence has 2 actions, horizon is 200"),
        (["simulate", "--actions", "9*200"], "action"),
        (["simulate", "--actions", "0*200", "--set", "bogus=1"], "unknown key"),
        (["optimize", "--method", "random", "--experiment", "1", "--config", "/nonexistent/x.cfg"], "x.cfg"),
    ],
)
def test_cli_failures_one_line(argv, message, tmp_path, capsys):
    rc = cli.main(argv + ["--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc != 0
    assert err.count("\n") == 1 and message in err


def test_cli_usage_error_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["optimize", "--method", "annealing", "--experiment", "1"])
    assert exc.value.code != 0
