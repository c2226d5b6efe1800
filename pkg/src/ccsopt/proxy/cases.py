"""Case definitions and decision-vector decoding for the storage proxy.

Three registered cases share one decode contract: every decision vector
lives on the unit cube and maps affinely onto per-variable bounds.
Cases c1v1 and c1v2 control eight producers with one constant setting
each (v1 fixes the injection target at 170 MMscf/day, v2 frees it on
170-200); case c2 re-targets three producers every 90 days over 160
control steps and tunes a single constant injection target on 150-190.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ccsopt.errors import DimensionMismatch


@dataclass(frozen=True)
class AquiferSpec:
    """Single-tank aquifer description.

    Volumes are reservoir cubic feet, pressures psi, rates per day.
    The pore volume default is bulk 2.4e11 scf times porosity 0.25.
    """

    pore_volume: float = 6.0e10
    initial_pressure: float = 5000.0
    max_pressure: float = 9000.0
    min_producer_pressure: float = 2500.0
    total_compressibility: float = 6e-6  # 1/psi
    injectivity_index: float = 0.1  # MMscf/day per psi of drawup
    productivity_index_per_well: float = 0.05  # Mstb/day per psi of drawdown
    gas_fvf: float = 0.0035  # reservoir cf per surface scf
    water_fvf: float = 5.615  # reservoir cf per stb
    breakthrough_onset: float = 0.05  # free-gas saturation where cut starts
    breakthrough_scale: float = 0.02  # saturation scale of the cut ramp
    max_gas_cut: float = 1.0
    dissolution_rate: float = 5e-5  # 1/day
    residual_rate: float = 2e-5  # 1/day
    solubility_cap_fraction: float = 0.05  # of water-in-place reservoir volume
    water_in_place: float = 1.7e9  # stb

    def __post_init__(self):
        if not 0.0 < self.breakthrough_onset < 1.0:
            raise ValueError("breakthrough_onset must be in (0, 1)")
        if not self.max_pressure > self.initial_pressure > self.min_producer_pressure:
            raise ValueError("need max_pressure > initial_pressure > min_producer_pressure")
        for name in (
            "pore_volume",
            "total_compressibility",
            "injectivity_index",
            "productivity_index_per_well",
            "gas_fvf",
            "water_fvf",
            "breakthrough_scale",
            "max_gas_cut",
            "dissolution_rate",
            "residual_rate",
            "solubility_cap_fraction",
            "water_in_place",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def solubility_cap_scf(self) -> float:
        """Dissolution capacity as surface scf of CO2.

        The cap is the fraction of water-in-place reservoir volume that
        can hold dissolved gas, re-expressed at surface conditions.
        """
        return (
            self.solubility_cap_fraction
            * self.water_in_place
            * self.water_fvf
            / self.gas_fvf
        )


@dataclass(frozen=True)
class EconSpec:
    """Prices in euros per tonne, discount rate per year."""

    c_storage: float = 30.0
    c_injection: float = 6.2
    c_production: float = 2.7
    discount_rate: float = 0.0142
    co2_mass_per_scf: float = 5.26e-5  # tonne per surface scf
    brine_mass_per_stb: float = 0.1654  # tonne per stb

    def __post_init__(self):
        for name in (
            "c_storage",
            "c_injection",
            "c_production",
            "discount_rate",
            "co2_mass_per_scf",
            "brine_mass_per_stb",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


_CASE_IDS = ("c1v1", "c1v2", "c2")


@dataclass(frozen=True)
class CaseSpec:
    """Decision layout and objective set for one benchmark case."""

    case_id: str
    n_producers: int
    n_control_steps: int
    horizon_days: float
    inj_bounds: tuple[float, float]
    inj_is_variable: bool
    objective_set: tuple[str, ...]
    step_days: float = 90.0
    prod_bounds: tuple[float, float] = (0.0, 100.0)  # Mstb/day
    cap_bounds: tuple[float, float] = (0.0, 8.0)  # MMscf/day

    def __post_init__(self):
        if self.case_id not in _CASE_IDS:
            raise ValueError(f"unknown case_id {self.case_id!r}")
        for lo, hi in (self.inj_bounds, self.prod_bounds, self.cap_bounds):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError("bounds must be finite with lo <= hi")

    @property
    def decision_dim(self) -> int:
        per_quantity = self.n_producers * self.n_control_steps
        return int(self.inj_is_variable) + 2 * per_quantity


@dataclass(frozen=True)
class WellSchedule:
    """Targets the simulator tries to honor.

    inj_target has one entry per control step (MMscf/day); prod_targets
    (Mstb/day) and gas_caps (MMscf/day) are (n_producers, n_control_steps).
    """

    inj_target: np.ndarray
    prod_targets: np.ndarray
    gas_caps: np.ndarray

    def __post_init__(self):
        inj = np.asarray(self.inj_target, dtype=float)
        prod = np.atleast_2d(np.asarray(self.prod_targets, dtype=float))
        caps = np.atleast_2d(np.asarray(self.gas_caps, dtype=float))
        if inj.ndim != 1:
            raise DimensionMismatch("inj_target must be 1-D (one value per control step)")
        if prod.shape != caps.shape:
            raise DimensionMismatch(
                f"prod_targets {prod.shape} and gas_caps {caps.shape} must match"
            )
        if prod.shape[1] != inj.shape[0]:
            raise DimensionMismatch(
                f"{prod.shape[1]} producer steps vs {inj.shape[0]} injection steps"
            )
        object.__setattr__(self, "inj_target", inj)
        object.__setattr__(self, "prod_targets", prod)
        object.__setattr__(self, "gas_caps", caps)

    @property
    def n_producers(self) -> int:
        return self.prod_targets.shape[0]

    @property
    def n_control_steps(self) -> int:
        return self.inj_target.shape[0]


CASES: dict[str, CaseSpec] = {
    "c1v1": CaseSpec(
        case_id="c1v1",
        n_producers=8,
        n_control_steps=1,
        horizon_days=14_400.0,
        inj_bounds=(170.0, 170.0),
        inj_is_variable=False,
        objective_set=("f_eq28",),
    ),
    "c1v2": CaseSpec(
        case_id="c1v2",
        n_producers=8,
        n_control_steps=1,
        horizon_days=14_400.0,
        inj_bounds=(170.0, 200.0),
        inj_is_variable=True,
        objective_set=("f_eq28", "f2"),
    ),
    "c2": CaseSpec(
        case_id="c2",
        n_producers=3,
        n_control_steps=160,
        horizon_days=14_400.0,
        inj_bounds=(150.0, 190.0),
        inj_is_variable=True,
        objective_set=("f1", "f2", "f3", "f4"),
    ),
}


def _affine(x, lo, hi):
    return lo + np.asarray(x, dtype=float) * (hi - lo)


def decode_schedule(x, case: CaseSpec) -> WellSchedule:
    """Map a unit-cube decision vector onto schedule bounds.

    Layout: [injection target if variable, producer targets, gas caps],
    producer blocks ordered producer-major (all steps of producer 0,
    then producer 1, ...). The injection target is a single scalar held
    constant over every control step.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != case.decision_dim:
        raise DimensionMismatch(
            f"case {case.case_id} expects dim {case.decision_dim}, got {x.shape[0]}"
        )
    k = 0
    if case.inj_is_variable:
        inj_value = float(_affine(x[0], *case.inj_bounds))
        k = 1
    else:
        inj_value = case.inj_bounds[0]
    per_quantity = case.n_producers * case.n_control_steps
    shape = (case.n_producers, case.n_control_steps)
    prod = _affine(x[k : k + per_quantity].reshape(shape), *case.prod_bounds)
    caps = _affine(x[k + per_quantity :].reshape(shape), *case.cap_bounds)
    return WellSchedule(
        inj_target=np.full(case.n_control_steps, inj_value),
        prod_targets=prod,
        gas_caps=caps,
    )
