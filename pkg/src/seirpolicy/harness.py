"""Random-search baseline, single optimization runs and multi-run experiments."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone
import json
import logging
import math
import os
import time

import numpy as np

from . import __version__
from .config import default_run_config, parse_config, parse_overrides
from .dqn import train as train_dqn
from .ga import run_ga
from .report import write_runs_csv, write_summary_csv, write_timing_csv, write_trajectory_csv
from .scenario import evaluate_batch, evaluate_sequence, random_sequences

log = logging.getLogger(__name__)

METHODS = ("dqn", "ga", "random")


def random_search(scenario, samples=1000, rng=None, chunk=1000):
    """Best of ``samples`` uniformly random sequences (first one wins ties)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    best_seq, best_val = None, -math.inf
    left = samples
    while left:
        m = min(chunk, left)
        seqs = random_sequences(rng, m, scenario.horizon)
        totals = evaluate_batch(scenario, seqs)
        k = int(np.argmax(totals))
        if totals[k] > best_val:
            best_val, best_seq = float(totals[k]), seqs[k].copy()
        left -= m
    return evaluate_sequence(scenario, best_seq)


@dataclass
class RunOutcome:
    method: str
    seed: int
    best_reward: float
    wall_time: float
    result: object = field(repr=False)
    curve: list = field(default_factory=list, repr=False)


def optimize(method, run_config, seed):
    """One optimization run of ``method``; returns a :class:`RunOutcome`."""
    sc = run_config.scenario
    t0 = time.perf_counter()
    if method == "random":
        result = random_search(sc, run_config.random_samples, np.random.default_rng(seed))
        curve = []
    elif method == "ga":
        cfg = run_config.ga.__class__(**{**asdict(run_config.ga), "rng_seed": seed})
        stats = run_ga(cfg, sc)
        result, curve = stats.best_result, stats.best_fitness_per_generation
    elif method == "dqn":
        cfg = run_config.dqn.__class__(**{**asdict(run_config.dqn), "rng_seed": seed})
        report = train_dqn(cfg, sc)
        result, curve = report.best_result, report.eval_rewards
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return RunOutcome(method, seed, result.total_reward, time.perf_counter() - t0, result, curve)


@dataclass
class SummaryStats:
    method: str
    avg: float
    max: float
    min: float
    std: float
    mean_wall_time: float
    runs: int
    completed: int
    values: list = field(default_factory=list, repr=False)


def summarize(method, rewards, times, requested=None):
    """Aggregate per-run best rewards; std is the population standard deviation."""
    vals = np.asarray(rewards, dtype=float)
    if vals.size == 0:
        nan = float("nan")
        return SummaryStats(method, nan, nan, nan, nan, nan, requested or 0, 0, [])
    return SummaryStats(
        method=method,
        avg=float(vals.mean()),
        max=float(vals.max()),
        min=float(vals.min()),
        std=float(vals.std()),
        mean_wall_time=float(np.mean(times)),
        runs=requested if requested is not None else int(vals.size),
        completed=int(vals.size),
        values=[float(v) for v in vals],
    )


@dataclass
class ExperimentSpec:
    id: int
    method: str
    executions: int = 100
    base_seed: int = 0
    output_dir: str = "."
    config_path: str = None
    overrides: list = field(default_factory=list)
    workers: int = 1
    record_time: bool = False
    plots: bool = True

    def __post_init__(self):
        if self.id not in (1, 2, 3):
            raise ValueError(f"experiment id must be 1, 2 or 3, got {self.id!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.executions < 1:
            raise ValueError("executions must be >= 1")


def build_run_config(experiment, config_path=None, overrides=()):
    cfg = default_run_config(experiment)
    if config_path:
        cfg = parse_config(config_path, base=cfg)
    if overrides:
        cfg = parse_overrides(list(overrides), cfg)
    return cfg


def _run_job(args):
    method, experiment, config_path, overrides, seed = args
    cfg = build_run_config(experiment, config_path, overrides)
    try:
        return optimize(method, cfg, seed), None
    except Exception as exc:  # recorded in the manifest, summary covers completed runs
        return None, f"{type(exc).__name__}: {exc}"


def run_experiment(spec):
    """Run ``spec.executions`` seeded runs and write CSVs, plots and a manifest.

    Run ``j`` uses seed ``base_seed + j``.  Returns ``(stats, outcomes)``.
    """
    started = datetime.now(timezone.utc).isoformat()
    os.makedirs(spec.output_dir, exist_ok=True)
    run_cfg = build_run_config(spec.id, spec.config_path, spec.overrides)
    seeds = [spec.base_seed + j for j in range(spec.executions)]
    jobs = [(spec.method, spec.id, spec.config_path, tuple(spec.overrides), s) for s in seeds]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            answers = list(pool.map(_run_job, jobs))
    else:
        answers = [_run_job(j) for j in jobs]

    outcomes, failures, files = [], [], []
    for seed, (outcome, err) in zip(seeds, answers):
        if err is not None:
            log.warning("run with seed %d failed: %s", seed, err)
            failures.append({"seed": seed, "error": err})
            continue
        outcomes.append(outcome)
        path = os.path.join(spec.output_dir, f"run_{seed}_trajectory.csv")
        write_trajectory_csv(outcome.result, path)
        files.append(path)

    stats = summarize(spec.method, [o.best_reward for o in outcomes],
                      [o.wall_time for o in outcomes], requested=spec.executions)
    runs_csv = os.path.join(spec.output_dir, "runs.csv")
    summary_csv = os.path.join(spec.output_dir, "summary.csv")
    timing_csv = os.path.join(spec.output_dir, "timing.csv")
    write_runs_csv(outcomes, runs_csv)
    write_summary_csv([stats], summary_csv, record_time=spec.record_time)
    write_timing_csv([stats], timing_csv)
    files += [runs_csv, summary_csv, timing_csv]

    if spec.plots and outcomes:
        from .plots import render_plots

        best = max(outcomes, key=lambda o: o.best_reward)
        prefix = os.path.join(spec.output_dir, f"exp{spec.id}_{spec.method}_best")
        files += render_plots(best.result, [stats], prefix)

    manifest = {
        "software": "seirpolicy",
        "version": __version__,
        "experiment": spec.id,
        "method": spec.method,
        "scenario": run_cfg.scenario.name,
        "base_seed": spec.base_seed,
        "seeds": seeds,
        "executions": spec.executions,
        "completed": len(outcomes),
        "failures": failures,
        "config": {
            "config_path": spec.config_path,
            "overrides": list(spec.overrides),
            "ga": asdict(run_cfg.ga),
            "dqn": asdict(run_cfg.dqn),
            "random_samples": run_cfg.random_samples,
        },
        "summary": {k: v for k, v in asdict(stats).items() if k != "values"},
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "files": files,
    }
    with open(os.path.join(spec.output_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")
    return stats, outcomes
