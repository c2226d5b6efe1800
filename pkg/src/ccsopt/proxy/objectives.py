"""Objective functions over simulated outcomes.

All objectives are maximized. The stability objectives aggregate the
10-day substep series onto the 90-day control grid first, then penalize
rate changes with a 1/t weight so early deviations cost more. The
reciprocal form 1/(1 + sum) bounds both at exactly 1, attained when the
injection trace never moves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import DimensionMismatch
from ccsopt.proxy.cases import AquiferSpec, CaseSpec, EconSpec
from ccsopt.proxy.tank import SimOutcome, simulate
from ccsopt.proxy.cases import decode_schedule

CONTROL_STEP_DAYS = 90.0

_SCF_PER_MMSCF = 1.0e6
_STB_PER_MSTB = 1.0e3
_SCF_PER_TSCF = 1.0e12
_DAYS_PER_YEAR = 365.0


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective values keyed by id, in the case's declared order."""

    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.ids),):
            raise DimensionMismatch(
                f"{len(self.ids)} objective ids vs values shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("objective values must be finite")
        object.__setattr__(self, "values", vals)

    def __getitem__(self, objective_id: str) -> float:
        return float(self.values[self.ids.index(objective_id)])

    def as_array(self) -> np.ndarray:
        return self.values.copy()


def _window_means(outcome: SimOutcome, step_days: float):
    """Mean injection and CO2 production per control window."""
    start_day = outcome.day - outcome.substep_days
    window = (start_day // step_days).astype(int)
    starts = np.flatnonzero(np.r_[True, window[1:] != window[:-1]])
    counts = np.diff(np.r_[starts, window.shape[0]])
    inj = np.add.reduceat(outcome.q_inj, starts) / counts
    prod = np.add.reduceat(outcome.q_co2_prod, starts) / counts
    return inj, prod


def _stability(outcome: SimOutcome, step_days: float, penalize_recycling: bool) -> float:
    """1/(1 + sum_t |dQ(t)| / t) over 1-based control windows.

    dQ(t) is the change in achieved injection from the previous window;
    window 0 is the first control step's injection target. With
    penalize_recycling the window's produced CO2 is subtracted inside
    the absolute value, charging recycled gas against stability.
    """
    inj, prod = _window_means(outcome, step_days)
    prev = np.r_[outcome.first_inj_target, inj[:-1]]
    delta = inj - prev
    if penalize_recycling:
        delta = delta - prod
    t = np.arange(1, inj.shape[0] + 1, dtype=float)
    return 1.0 / (1.0 + float(np.sum(np.abs(delta) / t)))


def objective_eq28(outcome: SimOutcome, step_days: float = CONTROL_STEP_DAYS) -> float:
    """Sequestration-rate stability with a recycling penalty."""
    return _stability(outcome, step_days, penalize_recycling=True)


def objective_f3(outcome: SimOutcome, step_days: float = CONTROL_STEP_DAYS) -> float:
    """Injection-rate stability; exactly 1 iff the trace never changes."""
    return _stability(outcome, step_days, penalize_recycling=False)


def objective_f1(outcome: SimOutcome) -> float:
    """Trapped-to-mobile mass ratio at end of horizon; 0 if nothing stored."""
    mob = float(outcome.m_mobile[-1])
    res = float(outcome.m_residual[-1])
    dis = float(outcome.m_dissolved[-1])
    if mob + res + dis <= 0.0:
        return 0.0
    return (res + dis) / max(mob, outcome.eps_mass_scf)


def objective_f2(outcome: SimOutcome) -> float:
    """Total sequestered CO2 over the horizon, Tscf."""
    net_scf = float(np.sum(outcome.q_stored)) * outcome.substep_days * _SCF_PER_MMSCF
    return net_scf / _SCF_PER_TSCF


def objective_f4_npv(outcome: SimOutcome, econ: EconSpec) -> float:
    """Discounted storage revenue minus injection and brine costs, euros.

    Substep cash flow uses tonne masses from the rate series; the
    discount exponent is the end-of-substep day in years.
    """
    dt = outcome.substep_days
    stored_t = outcome.q_stored * _SCF_PER_MMSCF * dt * econ.co2_mass_per_scf
    injected_t = outcome.q_inj * _SCF_PER_MMSCF * dt * econ.co2_mass_per_scf
    brine_t = outcome.q_brine * _STB_PER_MSTB * dt * econ.brine_mass_per_stb
    cash = (
        econ.c_storage * stored_t
        - econ.c_injection * injected_t
        - econ.c_production * brine_t
    )
    discount = (1.0 + econ.discount_rate) ** (outcome.day / _DAYS_PER_YEAR)
    return float(np.sum(cash / discount))


def evaluate_case(
    x,
    case: CaseSpec,
    aquifer: AquiferSpec | None = None,
    econ: EconSpec | None = None,
) -> ObjectiveVector:
    """Decode, simulate, and score the case's objective subset.

    Deterministic: the proxy is noiseless, so identical inputs give an
    identical vector.
    """
    aquifer = aquifer if aquifer is not None else AquiferSpec()
    econ = econ if econ is not None else EconSpec()
    schedule = decode_schedule(x, case)
    outcome = simulate(schedule, aquifer, case)
    values = []
    for oid in case.objective_set:
        if oid == "f_eq28":
            values.append(objective_eq28(outcome, case.step_days))
        elif oid == "f1":
            values.append(objective_f1(outcome))
        elif oid == "f2":
            values.append(objective_f2(outcome))
        elif oid == "f3":
            values.append(objective_f3(outcome, case.step_days))
        elif oid == "f4":
            values.append(objective_f4_npv(outcome, econ))
        else:
            raise ValueError(f"unknown objective id {oid!r}")
    return ObjectiveVector(ids=case.objective_set, values=np.array(values))
