"""Single-tank material-balance simulator.

Explicit time stepping at a fixed 10-day substep. Each substep throttles
the injector against the pressure ceiling, throttles producers against
the pressure floor and their CO2 breakthrough caps, updates pressure
from the net reservoir-volume balance, and moves mobile CO2 into the
residual and dissolved pools at first-order rates. All infeasibility is
handled by clipping; the simulator never raises.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ccsopt.proxy.cases import AquiferSpec, CaseSpec, WellSchedule

SUBSTEP_DAYS = 10.0

_SCF_PER_MMSCF = 1.0e6
_STB_PER_MSTB = 1.0e3

_CSV_COLUMNS = (
    "day",
    "q_inj",
    "q_co2_prod",
    "q_brine",
    "pressure_psi",
    "m_mobile",
    "m_residual",
    "m_dissolved",
)


@dataclass(frozen=True)
class SimOutcome:
    """Per-substep series plus the bookkeeping the objectives need.

    Rates are averages over the substep (q_inj, q_co2_prod in MMscf/day,
    q_brine in Mstb/day); day, pressure, and the cumulative masses
    (surface scf) are end-of-substep values.
    """

    day: np.ndarray
    q_inj: np.ndarray
    q_co2_prod: np.ndarray
    q_brine: np.ndarray
    pressure: np.ndarray
    m_mobile: np.ndarray
    m_residual: np.ndarray
    m_dissolved: np.ndarray
    substep_days: float
    first_inj_target: float
    eps_mass_scf: float

    @property
    def q_stored(self) -> np.ndarray:
        """Net sequestration rate, MMscf/day."""
        return self.q_inj - self.q_co2_prod

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_CSV_COLUMNS)
            rows = zip(
                self.day,
                self.q_inj,
                self.q_co2_prod,
                self.q_brine,
                self.pressure,
                self.m_mobile,
                self.m_residual,
                self.m_dissolved,
            )
            for row in rows:
                writer.writerow([repr(float(v)) for v in row])


def simulate(
    schedule: WellSchedule, aquifer: AquiferSpec, case: CaseSpec
) -> SimOutcome:
    """Run the tank model over the case horizon.

    Order within a substep: injector and producers are throttled against
    the pressure state entering the substep, the gas cut is evaluated on
    the mobile CO2 entering the substep, produced gas above a well's cap
    scales that well's liquid rate down until the cap binds, pressure
    integrates the net reservoir-volume flux, and trapping then drains
    the post-flow mobile mass. Pressure is an affine function of the
    cumulative net injected reservoir volume (clipped to [0, max]), so
    it is exactly monotone in that volume.
    """
    dt = SUBSTEP_DAYS
    n_sub = int(round(case.horizon_days / dt))
    n_steps = schedule.n_control_steps
    aq = aquifer

    day = np.empty(n_sub)
    q_inj_out = np.empty(n_sub)
    q_prod_out = np.empty(n_sub)
    q_brine_out = np.empty(n_sub)
    pressure_out = np.empty(n_sub)
    mob_out = np.empty(n_sub)
    res_out = np.empty(n_sub)
    dis_out = np.empty(n_sub)

    pressure = aq.initial_pressure
    net_rcf = 0.0  # cumulative injected minus produced reservoir volume
    mob = 0.0  # mobile CO2, surface scf
    res = 0.0
    dis = 0.0
    cap_scf = aq.solubility_cap_scf
    pv_inv = 1.0 / (aq.total_compressibility * aq.pore_volume)

    for i in range(n_sub):
        t0 = i * dt
        k = min(int(t0 // case.step_days), n_steps - 1)

        q_inj = min(
            schedule.inj_target[k],
            aq.injectivity_index * max(0.0, aq.max_pressure - pressure),
        )

        w = np.minimum(
            schedule.prod_targets[:, k],
            aq.productivity_index_per_well
            * max(0.0, pressure - aq.min_producer_pressure),
        )
        sat = mob * aq.gas_fvf / aq.pore_volume
        ramp = max(0.0, sat - aq.breakthrough_onset) / aq.breakthrough_scale
        cut = aq.max_gas_cut * min(1.0, ramp * ramp)
        # per-well CO2 surface rate in MMscf/day for w in Mstb/day
        gas_per_liquid = cut * aq.water_fvf / aq.gas_fvf * _STB_PER_MSTB / _SCF_PER_MMSCF
        q_gas = gas_per_liquid * w
        caps = schedule.gas_caps[:, k]
        over = q_gas > caps
        if np.any(over):
            with np.errstate(divide="ignore", invalid="ignore"):
                scale = np.where(q_gas > 0.0, caps / q_gas, 1.0)
            w = np.where(over, w * scale, w)
            q_gas = np.where(over, caps, q_gas)

        net_rcf += (
            q_inj * _SCF_PER_MMSCF * aq.gas_fvf
            - float(w.sum()) * _STB_PER_MSTB * aq.water_fvf
        ) * dt
        pressure = min(
            max(aq.initial_pressure + net_rcf * pv_inv, 0.0), aq.max_pressure
        )

        mob += q_inj * _SCF_PER_MMSCF * dt
        produced_scf = min(float(q_gas.sum()) * _SCF_PER_MMSCF * dt, mob)
        mob -= produced_scf
        to_res = aq.residual_rate * dt * mob
        to_dis = min(aq.dissolution_rate * dt * mob, max(cap_scf - dis, 0.0))
        mob -= to_res + to_dis
        res += to_res
        dis += to_dis

        day[i] = t0 + dt
        q_inj_out[i] = q_inj
        q_prod_out[i] = produced_scf / _SCF_PER_MMSCF / dt
        q_brine_out[i] = float(w.sum())
        pressure_out[i] = pressure
        mob_out[i] = mob
        res_out[i] = res
        dis_out[i] = dis

    return SimOutcome(
        day=day,
        q_inj=q_inj_out,
        q_co2_prod=q_prod_out,
        q_brine=q_brine_out,
        pressure=pressure_out,
        m_mobile=mob_out,
        m_residual=res_out,
        m_dissolved=dis_out,
        substep_days=dt,
        first_inj_target=float(schedule.inj_target[0]),
        eps_mass_scf=1e-6 * aq.pore_volume / aq.gas_fvf,
    )
