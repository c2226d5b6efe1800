"""Desk-scale storage-scheduling proxy: decision decoding, a single-tank
material-balance simulator, maximization objectives, and analytic
benchmark functions."""

from ccsopt.proxy.benchmarks import BENCHMARKS, BenchmarkSpec, benchmark_eval
from ccsopt.proxy.cases import (
    CASES,
    AquiferSpec,
    CaseSpec,
    EconSpec,
    WellSchedule,
    decode_schedule,
)
from ccsopt.proxy.objectives import (
    ObjectiveVector,
    evaluate_case,
    objective_eq28,
    objective_f1,
    objective_f2,
    objective_f3,
    objective_f4_npv,
)
from ccsopt.proxy.tank import SUBSTEP_DAYS, SimOutcome, simulate

__all__ = [
    "AquiferSpec",
    "BENCHMARKS",
    "BenchmarkSpec",
    "CASES",
    "CaseSpec",
    "EconSpec",
    "ObjectiveVector",
    "SUBSTEP_DAYS",
    "SimOutcome",
    "WellSchedule",
    "benchmark_eval",
    "decode_schedule",
    "evaluate_case",
    "objective_eq28",
    "objective_f1",
    "objective_f2",
    "objective_f3",
    "objective_f4_npv",
    "simulate",
]
