"""Command-line entry point.

Subcommands: run (surrogate-guided experiment), baseline (random search
under the same budget), report (summary CSVs and figures from a log
directory), simulate (single storage-case evaluation from a decision
vector file), bench (quick benchmark-function run). Exit code 0 on
success, 2 on configuration errors, 1 on other toolkit errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from ccsopt.errors import CcsoptError, ConfigError
from ccsopt.harness.config import PRESETS, load_config, make_config
from ccsopt.harness.loop import run_experiment, run_random_baseline, write_trial_log
from ccsopt.harness.report import load_logs, write_report
from ccsopt.proxy.cases import CASES, AquiferSpec, decode_schedule
from ccsopt.proxy.objectives import evaluate_case
from ccsopt.proxy.tank import simulate
from ccsopt.surrogates import ROSTER


def _add_run_args(parser) -> None:
    parser.add_argument("--config", help="INI config file")
    parser.add_argument(
        "--preset", choices=sorted(PRESETS), help="named experiment preset"
    )
    parser.add_argument("--surrogate", help="override the surrogate family")
    parser.add_argument("--seed", type=int, help="override the root seed")
    parser.add_argument("--trials", type=int, help="override the trial count")
    parser.add_argument("--out", help="directory for trial logs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccsopt",
        description="Bayesian-optimization toolkit for CO2 storage scheduling",
    )
    parser.add_argument(
        "--list-surrogates",
        action="store_true",
        help="print the surrogate roster and exit",
    )
    sub = parser.add_subparsers(dest="command")

    _add_run_args(sub.add_parser("run", help="run a seeded experiment"))
    _add_run_args(sub.add_parser("baseline", help="random search, same budget"))

    rep = sub.add_parser("report", help="summarize a directory of trial logs")
    rep.add_argument("--in", dest="in_dir", required=True, help="log directory")
    rep.add_argument("--out", required=True, help="output directory")

    sim = sub.add_parser("simulate", help="evaluate one decision vector")
    sim.add_argument("--case", required=True, choices=sorted(CASES))
    sim.add_argument(
        "--x", dest="x_file", required=True, help="file of unit-cube coordinates"
    )
    sim.add_argument("--out", required=True, help="output directory")

    ben = sub.add_parser("bench", help="quick benchmark-function run")
    ben.add_argument("--fn", required=True, help="benchmark name, e.g. branin")
    ben.add_argument("--surrogate", required=True)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--init", type=int, default=10)
    ben.add_argument("--iters", type=int, default=15)
    ben.add_argument("--batch", type=int, default=1)
    ben.add_argument("--trials", type=int, default=1)
    ben.add_argument("--out", help="optional directory for trial logs")
    return parser


def _load_run_config(args):
    overrides = {}
    if args.surrogate is not None:
        overrides["surrogate"] = args.surrogate
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.config is not None:
        if args.preset is not None:
            overrides["preset"] = args.preset
        return load_config(args.config, **overrides)
    if args.preset is not None:
        return make_config(preset=args.preset, **overrides)
    raise ConfigError("run/baseline need --config or --preset")


def _cmd_run(args, baseline: bool) -> int:
    config = _load_run_config(args)
    runner = run_random_baseline if baseline else run_experiment
    logs = runner(config)
    out = config.output_dir
    if out is None:
        tail = "_baseline" if baseline else ""
        out = f"runs/{config.case_id}_{config.surrogate}{tail}"
    for log in logs:
        path = write_trial_log(log, out)
        last = log.records[-1] if log.records else None
        metric = ""
        if last is not None:
            value = (
                last.hypervolume_so_far
                if last.hypervolume_so_far is not None
                else last.best_scalar_so_far
            )
            metric = f"  final={value:.6g}"
        print(f"trial {log.trial}: {path}{metric}")
    return 0


def _cmd_report(args) -> int:
    logs = load_logs(args.in_dir)
    written = write_report(logs, args.out)
    for name, path in written.items():
        print(f"{name}: {path}")
    return 0


def _read_vector(path) -> np.ndarray:
    text = Path(path).read_text()
    values = [float(tok) for tok in text.replace(",", " ").split()]
    return np.asarray(values, dtype=float)


def _cmd_simulate(args) -> int:
    case = CASES[args.case]
    x = _read_vector(args.x_file)
    schedule = decode_schedule(x, case)
    outcome = simulate(schedule, AquiferSpec(), case)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    series = out / "timeseries.csv"
    outcome.write_csv(series)
    vector = evaluate_case(x, case)
    objectives = out / "objectives.csv"
    with open(objectives, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["objective", "value"])
        for oid in vector.ids:
            writer.writerow([oid, repr(float(vector[oid]))])
    for oid in vector.ids:
        print(f"{oid} = {vector[oid]:.6g}")
    print(f"timeseries: {series}")
    print(f"objectives: {objectives}")
    return 0


def _cmd_bench(args) -> int:
    config = make_config(
        case=args.fn,
        surrogate=args.surrogate,
        n_init=args.init,
        n_iterations=args.iters,
        batch_size=args.batch,
        n_trials=args.trials,
        seed=args.seed,
        surrogate_options={"budget": "desk"},
        output_dir=args.out,
    )
    logs = run_experiment(config)
    for log in logs:
        if args.out is not None:
            write_trial_log(log, args.out)
        last = log.records[-1] if log.records else None
        if last is None:
            print(f"trial {log.trial}: no iterations")
            continue
        value = (
            last.hypervolume_so_far
            if last.hypervolume_so_far is not None
            else last.best_scalar_so_far
        )
        print(f"trial {log.trial}: best {value:.8g} after {last.evaluations_used} evals")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.list_surrogates:
            for name in ROSTER:
                print(name)
            return 0
        if args.command is None:
            parser.print_help()
            return 2
        if args.command == "run":
            return _cmd_run(args, baseline=False)
        if args.command == "baseline":
            return _cmd_run(args, baseline=True)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_bench(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CcsoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
