"""Seeded experiment loop: LHS initialization, surrogate-guided batch
selection, random-search baseline, and replayable JSONL trial logs.

Randomness is derived per (trial, role) from the root seed, so trials
are independent units: trial k's log is identical whether other trials
ran or not. Within an iteration the roles are: child j fits the
surrogate for objective j, child 8 drives the acquisition search, and
child 9 draws uniform candidates (the baseline, and the fallback when a
surrogate or the search fails).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ccsopt.acquisition import AcqSpec, ParetoArchive, optimize_acquisition
from ccsopt.errors import ConfigError, EmptyInput
from ccsopt.harness.config import ExperimentConfig
from ccsopt.numcore import RngStream, lhs_sample
from ccsopt.proxy.benchmarks import BENCHMARKS, benchmark_eval
from ccsopt.proxy.cases import CASES, AquiferSpec, EconSpec
from ccsopt.proxy.objectives import evaluate_case
from ccsopt.surrogates import fit_surrogate

_FIT_ROLE_BASE = 0  # objective j fits from iteration child j
_ACQ_ROLE = 8
_RANDOM_ROLE = 9


@dataclass(frozen=True)
class Problem:
    """A maximization problem on the unit cube."""

    name: str
    dim: int
    n_objectives: int
    evaluate: Callable[[np.ndarray], np.ndarray]


def make_problem(
    case_id: str,
    aquifer: AquiferSpec | None = None,
    econ: EconSpec | None = None,
) -> Problem:
    if case_id in CASES:
        case = CASES[case_id]

        def evaluate(x, _case=case, _aq=aquifer, _ec=econ):
            return evaluate_case(x, _case, _aq, _ec).as_array()

        return Problem(
            name=case_id,
            dim=case.decision_dim,
            n_objectives=len(case.objective_set),
            evaluate=evaluate,
        )
    if case_id in BENCHMARKS:
        spec = BENCHMARKS[case_id]
        return Problem(
            name=case_id,
            dim=spec.dim,
            n_objectives=spec.n_objectives,
            evaluate=lambda x, _n=case_id: benchmark_eval(_n, x),
        )
    raise ConfigError(f"unknown case {case_id!r}")


@dataclass(frozen=True)
class IterationRecord:
    trial: int
    iteration: int
    evaluations_used: int
    chosen_x: list
    objective_vectors: list
    best_scalar_so_far: float | None
    hypervolume_so_far: float | None
    fallback_random: bool
    wall_time_s: float


@dataclass
class TrialLog:
    config: dict
    trial: int
    rng_lineage: dict
    init_x: list
    init_objectives: list
    records: list = field(default_factory=list)
    xs: np.ndarray | None = None
    ys: np.ndarray | None = None
    archive: ParetoArchive | None = None


def _lineage(seed: int, trial: int) -> dict:
    return {
        "root_seed": seed,
        "trial_child": trial,
        "roles": {
            "init_design": "trial child 0",
            "iteration_i": "trial child 1 + i",
            "fit_objective_j": "iteration child j",
            "acquisition": f"iteration child {_ACQ_ROLE}",
            "random_candidates": f"iteration child {_RANDOM_ROLE}",
        },
    }


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def _run_trial(
    config: ExperimentConfig, problem: Problem, trial: int, baseline: bool
) -> TrialLog:
    d, m = problem.dim, problem.n_objectives
    q = config.batch_size
    trial_stream = RngStream(config.seed).child(trial)

    design = lhs_sample(config.n_init, d, trial_stream.child(0)).points
    xs = [np.asarray(row, dtype=float) for row in design]
    ys = [np.asarray(problem.evaluate(row), dtype=float).ravel() for row in xs]

    archive = None
    if m >= 2:
        archive = ParetoArchive(n_objectives=m)
        for x, y in zip(xs, ys):
            archive.add(x, y)

    log = TrialLog(
        config=config.snapshot(),
        trial=trial,
        rng_lineage=_lineage(config.seed, trial),
        init_x=[list(map(float, row)) for row in xs],
        init_objectives=[list(map(float, row)) for row in ys],
        archive=archive,
    )

    for i in range(config.n_iterations):
        started = time.perf_counter()
        it_stream = trial_stream.child(1 + i)
        fallback = False
        if baseline:
            points = it_stream.child(_RANDOM_ROLE).generator().random((q, d))
        else:
            try:
                x_all = np.vstack(xs)
                y_all = np.vstack(ys)
                surrogates = [
                    fit_surrogate(
                        config.surrogate,
                        x_all,
                        y_all[:, j],
                        it_stream.child(_FIT_ROLE_BASE + j),
                        dict(config.surrogate_options),
                    )
                    for j in range(m)
                ]
                if m == 1:
                    spec = AcqSpec(
                        kind="mc_ei",
                        n_mc_samples=config.n_mc_samples,
                        q=q,
                        f_best=float(y_all[:, 0].max()),
                        raw_candidates=config.raw_candidates,
                        n_restarts=config.n_restarts,
                        local_steps=config.local_steps,
                    )
                    batch = optimize_acquisition(
                        surrogates[0], spec, it_stream.child(_ACQ_ROLE)
                    )
                else:
                    archive.update_reference()
                    spec = AcqSpec(
                        kind="mc_ehvi",
                        n_mc_samples=config.n_mc_samples,
                        q=q,
                        raw_candidates=config.raw_candidates,
                        n_restarts=config.n_restarts,
                        local_steps=config.local_steps,
                    )
                    batch = optimize_acquisition(
                        surrogates, spec, it_stream.child(_ACQ_ROLE), archive=archive
                    )
                points = batch.points
            except Exception:
                fallback = True
                points = it_stream.child(_RANDOM_ROLE).generator().random((q, d))

        new_x = [np.asarray(row, dtype=float) for row in points]
        new_y = [np.asarray(problem.evaluate(row), dtype=float).ravel() for row in new_x]
        xs.extend(new_x)
        ys.extend(new_y)
        if archive is not None:
            for x, y in zip(new_x, new_y):
                archive.add(x, y)

        best = hv = None
        if m == 1:
            best = float(np.vstack(ys)[:, 0].max())
        else:
            archive.update_reference()
            hv = float(archive.hypervolume())

        log.records.append(
            IterationRecord(
                trial=trial,
                iteration=i + 1,
                evaluations_used=config.n_init + (i + 1) * q,
                chosen_x=[list(map(float, row)) for row in new_x],
                objective_vectors=[list(map(float, row)) for row in new_y],
                best_scalar_so_far=best,
                hypervolume_so_far=hv,
                fallback_random=fallback,
                wall_time_s=time.perf_counter() - started,
            )
        )

    log.xs = np.vstack(xs)
    log.ys = np.vstack(ys)
    return log


def _run(config: ExperimentConfig, problem: Problem | None, baseline: bool):
    if problem is None:
        problem = make_problem(config.case_id, config.aquifer, config.econ)
    return [
        _run_trial(config, problem, trial, baseline)
        for trial in range(config.n_trials)
    ]


def run_experiment(
    config: ExperimentConfig, problem: Problem | None = None
) -> list[TrialLog]:
    """Surrogate-guided optimization; one TrialLog per seeded trial."""
    return _run(config, problem, baseline=False)


def run_random_baseline(
    config: ExperimentConfig, problem: Problem | None = None
) -> list[TrialLog]:
    """Uniform-random search under the exact budget of run_experiment."""
    return _run(config, problem, baseline=True)


def _record_line(record: IterationRecord) -> str:
    # wall time is not replayable, so it lives in the timings sidecar
    return _dumps(
        {
            "trial": record.trial,
            "iteration": record.iteration,
            "evaluations_used": record.evaluations_used,
            "chosen_x": record.chosen_x,
            "objective_vectors": record.objective_vectors,
            "best_scalar_so_far": record.best_scalar_so_far,
            "hypervolume_so_far": record.hypervolume_so_far,
            "fallback_random": record.fallback_random,
        }
    )


def write_trial_log(log: TrialLog, directory) -> Path:
    """Write trial_<k>.jsonl plus a timings_<k>.csv sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"trial_{log.trial}.jsonl"
    header = _dumps(
        {
            "config": log.config,
            "trial": log.trial,
            "rng_lineage": log.rng_lineage,
            "init_x": log.init_x,
            "init_objectives": log.init_objectives,
        }
    )
    lines = [header] + [_record_line(r) for r in log.records]
    path.write_text("\n".join(lines) + "\n")
    timing = directory / f"timings_{log.trial}.csv"
    with open(timing, "w") as fh:
        fh.write("iteration,wall_time_s\n")
        for r in log.records:
            fh.write(f"{r.iteration},{r.wall_time_s:.6f}\n")
    return path


def read_trial_log(path) -> TrialLog:
    """Rebuild a TrialLog (sans archive) from its JSONL file."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise EmptyInput(f"empty trial log {path!r}")
    header = json.loads(lines[0])
    log = TrialLog(
        config=header["config"],
        trial=header["trial"],
        rng_lineage=header["rng_lineage"],
        init_x=header["init_x"],
        init_objectives=header["init_objectives"],
    )
    for line in lines[1:]:
        rec = json.loads(line)
        log.records.append(
            IterationRecord(
                trial=rec["trial"],
                iteration=rec["iteration"],
                evaluations_used=rec["evaluations_used"],
                chosen_x=rec["chosen_x"],
                objective_vectors=rec["objective_vectors"],
                best_scalar_so_far=rec["best_scalar_so_far"],
                hypervolume_so_far=rec["hypervolume_so_far"],
                fallback_random=rec["fallback_random"],
                wall_time_s=float("nan"),
            )
        )
    xs = [row for row in log.init_x]
    ys = [row for row in log.init_objectives]
    for rec in log.records:
        xs.extend(rec.chosen_x)
        ys.extend(rec.objective_vectors)
    log.xs = np.asarray(xs, dtype=float)
    log.ys = np.asarray(ys, dtype=float)
    return log
