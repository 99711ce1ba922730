"""Command-line entry point.

    seirpolicy simulate --config FILE --actions SPEC --out DIR
    seirpolicy optimize --method {dqn,ga,random} --experiment {1,2,3} [--config FILE] [--seed S] --out DIR
    seirpolicy experiment --id {1,2,3} --method {dqn,ga,random} [--runs K] [--seed S] --out DIR
    seirpolicy demo-fig2 --out DIR

``--out`` defaults to ``$SEIRPOLICY_OUT`` or ``./out``.
"""

import argparse
import csv
import json
import logging
import os
import sys

from .config import ConfigError, default_run_config, parse_config, parse_overrides
from .harness import METHODS, ExperimentSpec, optimize, run_experiment, summarize
from .plots import plot_compartments, render_plots
from .report import write_summary_csv, write_timing_csv, write_trajectory_csv
from .scenario import evaluate_sequence
from .seir import CompartmentState, EpidemicParams, simulate_trajectory

log = logging.getLogger("seirpolicy")


def default_out():
    return os.environ.get("SEIRPOLICY_OUT", "out")


def parse_actions(spec):
    """Actions from a file or an inline list.

    Inline forms: ``3,3,0,1``; ``3*100,0*100`` (run-length); ``33330011``.
    A file may be a trajectory CSV (``action`` column) or plain inline text.
    """
    if os.path.isfile(spec):
        with open(spec, encoding="utf-8", newline="") as fh:
            text = fh.read()
        first = text.splitlines()[0] if text.strip() else ""
        if "action" in first.split(","):
            return [int(row["action"]) for row in csv.DictReader(text.splitlines())]
        spec = ",".join(line.strip() for line in text.splitlines() if line.strip())
    spec = spec.strip()
    if not spec:
        raise ValueError("empty action list")
    if "," not in spec and "*" not in spec:
        return [int(ch) for ch in spec if not ch.isspace()]
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "*" in tok:
            val, count = tok.split("*", 1)
            out.extend([int(val)] * int(count))
        else:
            out.append(int(tok))
    return out


def cmd_simulate(args):
    cfg = parse_config(args.config) if args.config else default_run_config(1)
    if args.set:
        cfg = parse_overrides(args.set, cfg)
    actions = parse_actions(args.actions)
    result = evaluate_sequence(cfg.scenario, actions)
    os.makedirs(args.out, exist_ok=True)
    path = write_trajectory_csv(result, os.path.join(args.out, "trajectory.csv"))
    render_plots(result, None, os.path.join(args.out, "simulate"))
    print(f"total_reward={result.total_reward:g} violation_days={len(result.violation_days)} "
          f"pattern_break_day={result.pattern_break_day} csv={path}")


def cmd_optimize(args):
    if args.config:
        cfg = parse_config(args.config, base=default_run_config(args.experiment))
    else:
        cfg = default_run_config(args.experiment)
    if args.set:
        cfg = parse_overrides(args.set, cfg)
    outcome = optimize(args.method, cfg, args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_trajectory_csv(outcome.result, os.path.join(args.out, "best_trajectory.csv"))
    stats = summarize(args.method, [outcome.best_reward], [outcome.wall_time])
    write_summary_csv([stats], os.path.join(args.out, "summary.csv"))
    write_timing_csv([stats], os.path.join(args.out, "timing.csv"))
    render_plots(outcome.result, [stats], os.path.join(args.out, f"exp{args.experiment}_{args.method}"))
    if outcome.curve:
        with open(os.path.join(args.out, "curve.json"), "w", encoding="utf-8") as fh:
            json.dump(outcome.curve, fh)
    res = outcome.result
    print(f"method={args.method} experiment={args.experiment} seed={args.seed} "
          f"best_reward={outcome.best_reward:g} violation_days={len(res.violation_days)} "
          f"pattern_break_day={res.pattern_break_day} wall_time={outcome.wall_time:.1f}s")
    print("actions=" + "".join(map(str, res.actions)))


def cmd_experiment(args):
    spec = ExperimentSpec(
        id=args.id,
        method=args.method,
        executions=args.runs,
        base_seed=args.seed,
        output_dir=args.out,
        config_path=args.config,
        overrides=list(args.set or []),
        workers=args.workers,
        record_time=args.record_time,
    )
    stats, _ = run_experiment(spec)
    print(f"method={stats.method} runs={stats.completed}/{stats.runs} avg={stats.avg:.2f} "
          f"max={stats.max:g} min={stats.min:g} std={stats.std:.2f} mean_time_sec={stats.mean_wall_time:.1f}")


def demo_fig2(population=50_000_000, infectious=10_000, days=60):
    initial = CompartmentState.from_counts(population, infectious=infectious)
    return simulate_trajectory(initial, EpidemicParams(alpha=0.2, beta=2.0, gamma=0.2), [1.0] * days)


def cmd_demo_fig2(args):
    traj = demo_fig2()
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "fig2_trajectory.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "s", "e", "i", "r"])
        for d, st in enumerate(traj):
            w.writerow([d] + [f"{x:.17g}" for x in st.as_tuple()])
    days = list(range(len(traj)))
    plot_compartments(
        days,
        {name: [getattr(st, name) for st in traj] for name in ("s", "e", "i", "r")},
        os.path.join(args.out, "fig2.svg"),
        title="SEIR, alpha=0.2 beta=2 gamma=0.2, N=50M",
    )
    print(f"s(60)={traj[-1].s:.6f} csv={path}")


def build_parser():
    p = argparse.ArgumentParser(prog="seirpolicy", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_config=True):
        sp.add_argument("--out", default=default_out(), help="output directory")
        if with_config:
            sp.add_argument("--config", help="key = value config file")
            sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                            help="override one config key (repeatable)")

    sp = sub.add_parser("simulate", help="evaluate one action sequence")
    common(sp)
    sp.add_argument("--actions", required=True, help="file, '3,3,0', '3*100,0*100' or '3300'")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("optimize", help="one optimization run")
    common(sp)
    sp.add_argument("--method", choices=METHODS, required=True)
    sp.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("experiment", help="multi-run statistics")
    common(sp)
    sp.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    sp.add_argument("--method", choices=METHODS, required=True)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--record-time", action="store_true",
                    help="fill mean_time_sec in summary.csv (breaks byte-identical reruns)")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("demo-fig2", help="60-day unmitigated SEIR demo")
    common(sp, with_config=False)
    sp.set_defaults(func=cmd_demo_fig2)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s:%(name)s:%(message)s")
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, ArithmeticError) as exc:
        print(f"seirpolicy {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
