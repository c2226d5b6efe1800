"""Summaries and figures from trial logs.

Produces plot-ready CSVs (per-iteration mean/min/max of the progress
metric, pooled final front, best solution per objective) and two
figures: the progress trace (dashed mean, min-max band) and, for
multi-objective runs, the final front scatter.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from ccsopt.acquisition import pareto_front
from ccsopt.errors import EmptyInput
from ccsopt.harness.loop import TrialLog, read_trial_log
from ccsopt.proxy.cases import CASES


def load_logs(directory) -> list[TrialLog]:
    """Read every trial_<k>.jsonl in a directory, ordered by trial."""
    paths = sorted(
        Path(directory).glob("trial_*.jsonl"),
        key=lambda p: int(p.stem.split("_")[1]),
    )
    return [read_trial_log(p) for p in paths]


def _metric(record) -> float:
    if record.hypervolume_so_far is not None:
        return float(record.hypervolume_so_far)
    return float(record.best_scalar_so_far)


def _objective_names(log: TrialLog) -> list[str]:
    case_id = log.config.get("case")
    if case_id in CASES:
        return list(CASES[case_id].objective_set)
    m = log.ys.shape[1]
    return [f"f{j}" for j in range(m)]


def summarize_trials(logs: list[TrialLog]) -> list[dict]:
    """Per-iteration mean/min/max of the progress metric across trials."""
    if not logs:
        raise EmptyInput("no trial logs to summarize")
    n_iter = min(len(log.records) for log in logs)
    rows = []
    for i in range(n_iter):
        values = [_metric(log.records[i]) for log in logs]
        rows.append(
            {
                "iteration": logs[0].records[i].iteration,
                "mean": float(np.mean(values)),
                "min": float(np.min(values)),
                "max": float(np.max(values)),
            }
        )
    return rows


def pooled_points(logs: list[TrialLog]):
    """Stack every evaluated (x, f) pair across all trials."""
    if not logs:
        raise EmptyInput("no trial logs")
    xs = np.vstack([log.xs for log in logs])
    ys = np.vstack([log.ys for log in logs])
    return xs, ys


def final_front(logs: list[TrialLog]):
    """Nondominated subset of pooled points; the single argmax row when
    there is one objective."""
    xs, ys = pooled_points(logs)
    if ys.shape[1] == 1:
        k = int(np.argmax(ys[:, 0]))
        return xs[k : k + 1], ys[k : k + 1]
    keep = pareto_front(ys)
    return xs[keep], ys[keep]


def best_by_objective(logs: list[TrialLog]) -> list[dict]:
    """For each objective, the evaluated point maximizing it."""
    xs, ys = pooled_points(logs)
    names = _objective_names(logs[0])
    rows = []
    for j, name in enumerate(names):
        k = int(np.argmax(ys[:, j]))
        row = {"objective": name, "best_value": float(ys[k, j])}
        for jj, other in enumerate(names):
            row[other] = float(ys[k, jj])
        for d in range(xs.shape[1]):
            row[f"x{d}"] = float(xs[k, d])
        rows.append(row)
    return rows


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _trace_figure(rows: list[dict], metric_label: str, path: Path) -> None:
    it = [r["iteration"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.fill_between(
        it,
        [r["min"] for r in rows],
        [r["max"] for r in rows],
        alpha=0.25,
        label="min-max range",
    )
    ax.plot(it, [r["mean"] for r in rows], "--", label="mean")
    ax.set_xlabel("iteration")
    ax.set_ylabel(metric_label)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _front_figure(logs: list[TrialLog], names, path: Path) -> None:
    _, ys = pooled_points(logs)
    _, front_ys = final_front(logs)
    fig, ax = plt.subplots(figsize=(5.0, 4.5))
    ax.scatter(ys[:, 0], ys[:, 1], s=10, alpha=0.3, label="evaluated")
    order = np.argsort(front_ys[:, 0])
    ax.scatter(
        front_ys[order, 0],
        front_ys[order, 1],
        s=28,
        color="crimson",
        label="front",
    )
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(logs: list[TrialLog], out_dir) -> dict:
    """Write summary.csv, front_final.csv, best_by_objective.csv and the
    figures; returns the paths written."""
    if not logs:
        raise EmptyInput("no trial logs to report on")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    rows = summarize_trials(logs)
    summary = out / "summary.csv"
    _write_csv(summary, ["iteration", "mean", "min", "max"], rows)
    written["summary"] = summary

    xs, ys = final_front(logs)
    names = _objective_names(logs[0])
    front = out / "front_final.csv"
    fields = [f"x{d}" for d in range(xs.shape[1])] + list(names)
    front_rows = []
    for x, y in zip(xs, ys):
        row = {f"x{d}": float(v) for d, v in enumerate(x)}
        row.update({name: float(v) for name, v in zip(names, y)})
        front_rows.append(row)
    _write_csv(front, fields, front_rows)
    written["front_final"] = front

    best = out / "best_by_objective.csv"
    best_rows = best_by_objective(logs)
    _write_csv(best, list(best_rows[0].keys()), best_rows)
    written["best_by_objective"] = best

    metric_label = "hypervolume" if ys.shape[1] >= 2 else "best value"
    trace = out / "trace.png"
    _trace_figure(rows, metric_label, trace)
    written["trace"] = trace

    if ys.shape[1] >= 2:
        front_png = out / "front.png"
        _front_figure(logs, names, front_png)
        written["front"] = front_png
    return written
