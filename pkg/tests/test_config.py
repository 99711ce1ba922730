import pytest

from seirpolicy.config import (
    ConfigError,
    default_run_config,
    parse_config,
    parse_lines,
    parse_overrides,
)
from seirpolicy.scenario import beds_fraction, experiment_scenario


def _write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_empty_file_gives_experiment_one(tmp_path):
    cfg = parse_config(_write(tmp_path, ""))
    assert cfg.scenario == experiment_scenario(1)
    assert cfg.scenario.population == 126e6
    assert cfg.ga.population_size == 100 and cfg.dqn.episodes == 1000
    assert cfg.random_samples == 1000


def test_comments_and_blank_lines(tmp_path):
    cfg = parse_config(_write(tmp_path, "# header\n\n  horizon = 150   # shorter\n"))
    assert cfg.scenario.horizon == 150
    assert cfg.scenario.beds.horizon == 150


def test_beds_end_ramp(tmp_path):
    cfg = parse_config(_write(tmp_path, "beds.end = 0.5\nhorizon = 200\n"))
    assert beds_fraction(cfg.scenario, 200) == pytest.approx(0.0005, rel=1e-12)
    assert beds_fraction(cfg.scenario, 1) == pytest.approx(0.0015, rel=1e-12)


def test_delta_out_of_range_names_key(tmp_path):
    with pytest.raises(ConfigError, match=r"phases\[0\]\.delta"):
        parse_config(_write(tmp_path, "phases[0].delta = 1.5\n"))


def test_phase_overrides(tmp_path):
    cfg = parse_config(_write(tmp_path, "phases[3].reward = 12\nphases[0].delta = 0.2\n"))
    assert cfg.scenario.phases[3].daily_reward == 12
    assert cfg.scenario.phases[0].delta == 0.2


def test_unknown_key_reports_line(tmp_path):
    with pytest.raises(ConfigError, match=r":2: unknown key 'epidemic.delta'"):
        parse_config(_write(tmp_path, "horizon = 200\nepidemic.delta = 3\n"))


def test_malformed_line_reports_line(tmp_path):
    with pytest.raises(ConfigError, match=r":3: expected 'key = value'"):
        parse_config(_write(tmp_path, "horizon = 200\n\nthis is not a setting\n"))


def test_duplicate_key():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_lines(["horizon = 10", "horizon = 20"])


def test_bad_value_names_key(tmp_path):
    with pytest.raises(ConfigError, match="epidemic.beta"):
        parse_config(_write(tmp_path, "epidemic.beta = fast\n"))
    with pytest.raises(ConfigError):
        parse_config(_write(tmp_path, "epidemic.gamma = -0.1\n"))


def test_population_rebuilds_initial_state(tmp_path):
    cfg = parse_config(_write(tmp_path, "population.n = 1e6\npopulation.e0 = 500\n"))
    assert cfg.scenario.initial.e == pytest.approx(500 / 1e6)
    assert cfg.scenario.initial.s == pytest.approx(1 - 500 / 1e6)


def test_method_blocks(tmp_path):
    text = "ga.generations = 7\ndqn.hidden_sizes = 8,8\ndqn.state_augmentation = true\nrandom.samples = 50\n"
    cfg = parse_config(_write(tmp_path, text))
    assert cfg.ga.generations == 7
    assert cfg.dqn.hidden_sizes == (8, 8) and cfg.dqn.state_augmentation
    assert cfg.random_samples == 50


def test_base_and_overrides():
    base = default_run_config(3)
    assert base.scenario.pattern_enabled and base.ga.generations == 2000
    cfg = parse_overrides(["pattern.enabled=false", "theta.end=0.5"], base)
    assert not cfg.scenario.pattern_enabled
    assert cfg.scenario.theta.end == 0.5
    with pytest.raises(ConfigError, match="--set:1"):
        parse_overrides(["nope=1"], base)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        parse_config(tmp_path / "absent.cfg")
