"""CSV output: per-day trajectories, per-run results and summaries."""

import csv

TRAJECTORY_HEADER = ["day", "action", "s", "e", "i", "r", "icu_demand", "beds", "reward", "dfa_state"]
SUMMARY_HEADER = ["method", "avg", "max", "min", "std", "mean_time_sec", "runs"]


def _num(x):
    # 17 significant digits round-trip a double exactly
    return f"{x:.17g}"


def _open(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_trajectory_csv(result, path):
    """One row per day: action taken, state after the step, ICU demand, capacity, reward."""
    if not result.actions:
        raise ValueError("empty evaluation result")
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for d, action in enumerate(result.actions, start=1):
            st = result.trajectory[d]
            w.writerow([
                d, action, _num(st.s), _num(st.e), _num(st.i), _num(st.r),
                _num(result.icu_demand[d - 1]), _num(result.bed_capacity[d - 1]),
                _num(result.daily_rewards[d - 1]), result.dfa_states[d - 1].name,
            ])
    return path


def read_trajectory_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_runs_csv(outcomes, path):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "method", "best_reward", "violation_days", "pattern_break_day", "actions"])
        for o in outcomes:
            res = o.result
            w.writerow([
                o.seed, o.method, _num(o.best_reward), len(res.violation_days),
                "" if res.pattern_break_day is None else res.pattern_break_day,
                "".join(str(a) for a in res.actions),
            ])
    return path


def write_summary_csv(stats_list, path, record_time=False):
    """``method,avg,max,min,std,mean_time_sec,runs``.

    ``mean_time_sec`` is left empty unless ``record_time`` is set, so that a
    rerun with the same seed reproduces the file byte for byte.  Timings are
    always available from :func:`write_timing_csv`.
    """
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for st in stats_list:
            w.writerow([
                st.method, _num(st.avg), _num(st.max), _num(st.min), _num(st.std),
                _num(st.mean_wall_time) if record_time else "", st.completed,
            ])
    return path


def write_timing_csv(stats_list, path):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mean_time_sec", "runs"])
        for st in stats_list:
            w.writerow([st.method, f"{st.mean_wall_time:.3f}", st.completed])
    return path


def read_summary_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
