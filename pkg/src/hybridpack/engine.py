"""
Time-stepping pack simulator.

Topology is series-of-parallel: every series group carries the full pack
current, split across the group's ACTIVE clusters by inverse resistance.
Each cluster owns a diffusion grid (its share of current enters as surface
flux), a lumped thermal state, an affine-in-temperature resistance and a
throughput-based cycle counter feeding the fade law.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import diffusion
from .electrochem import (
    FADE_CONSTANT_CURRENT,
    FADE_PULSED,
    FadeModel,
    NernstInput,
    PackComposition,
    capacity_retained,
    nernst_voltage,
)
from .protocols import (
    CCCV,
    Constant,
    CurrentProfile,
    FeedbackSample,
    FixedPulse,
    Percussive,
    cccv_level,
    flux_at,
    initial_percussive_state,
    is_pulsed,
    next_percussive_level,
)
from .scheduler import (
    ClusterState,
    Mode,
    ScheduleConstraints,
    SchedulerEvent,
    advance_clocks,
    schedule_step,
)

logger = logging.getLogger(__name__)

Q_MAPS = ("inverse_odds", "odds")


class InfeasibleError(RuntimeError):
    """Pack voltage stayed below the load minimum past the grace time."""


@dataclass(frozen=True)
class ChemistryParams:
    """Per-chemistry cell constants. Resistance and capacity are per cluster."""

    specific_energy: float = 250.0  # Wh/kg
    e_standard: float = 3.0  # V per cell
    n_electrons: int = 1
    v_min: float = 1.5  # V per cell
    v_max: float = 4.2  # V per cell
    diffusivity: float = 1e-13  # m^2/s
    thickness: float = 50e-6  # m
    n_nodes: int = 100
    initial_concentration: float = 0.0
    base_resistance: float = 0.01  # ohm
    resistance_temp_coeff: float = 0.0  # ohm/K above nominal
    nominal_temperature: float = 298.15  # K
    heat_capacity: float = 1000.0  # J/K
    cooling_coefficient: float = 1.0  # W/K
    capacity_ah: float = 10.0  # reference capacity, Ah
    initial_soc: float = 0.5
    flux_per_amp: float = 1.0  # surface flux per ampere of cluster current

    def __post_init__(self):
        positive = (
            "specific_energy", "diffusivity", "thickness", "base_resistance",
            "heat_capacity", "capacity_ah", "nominal_temperature",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0 (got {getattr(self, name)})")
        if self.n_nodes < 3:
            raise ValueError(f"n_nodes must be >= 3 (got {self.n_nodes})")
        if self.n_electrons < 1:
            raise ValueError(f"n_electrons must be >= 1 (got {self.n_electrons})")
        if not 0 <= self.initial_soc <= 1:
            raise ValueError(f"initial_soc must lie in [0, 1] (got {self.initial_soc})")
        if self.cooling_coefficient < 0 or self.resistance_temp_coeff < 0:
            raise ValueError("cooling_coefficient and resistance_temp_coeff must be >= 0")
        if not self.v_min < self.v_max:
            raise ValueError(f"need v_min < v_max (got {self.v_min}, {self.v_max})")


@dataclass(frozen=True)
class ClusterSpec:
    chemistry: str
    count: int = 1
    cells: int = 1
    group: int | None = None  # series group; defaults to one group per chemistry

    def __post_init__(self):
        if self.count < 1 or self.cells < 1:
            raise ValueError(f"count and cells must be >= 1 (got {self.count}, {self.cells})")


@dataclass(frozen=True)
class SimulationSettings:
    total_time: float = 200.0  # s
    safety: float = 0.5  # fraction of the explicit stability limit
    scheduler_interval: float = 10.0  # s; 0 disables the scheduler
    record_every: int = 1  # steps
    ambient_temperature: float = 298.15  # K
    initial_temperature: float | None = None  # K; defaults to ambient
    grace_time: float = 60.0  # s below min voltage tolerated while infeasible
    q_map: str = "inverse_odds"
    soc_clamp: float = 1e-6

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total_time must be > 0 (got {self.total_time})")
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must lie in (0, 1] (got {self.safety})")
        if self.scheduler_interval < 0 or self.grace_time < 0:
            raise ValueError("scheduler_interval and grace_time must be >= 0")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1 (got {self.record_every})")
        if self.q_map not in Q_MAPS:
            raise ValueError(f"q_map must be one of {Q_MAPS} (got {self.q_map!r})")
        if not 0 < self.soc_clamp < 0.5:
            raise ValueError(f"soc_clamp must lie in (0, 0.5) (got {self.soc_clamp})")


@dataclass(frozen=True)
class PackConfig:
    composition: PackComposition
    chemistries: dict
    clusters: list
    protocol: CurrentProfile
    constraints: ScheduleConstraints
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    fade_constant: FadeModel = FADE_CONSTANT_CURRENT
    fade_pulsed: FadeModel = FADE_PULSED

    def __post_init__(self):
        for spec in self.clusters:
            if spec.chemistry not in self.chemistries:
                raise ValueError(f"cluster chemistry {spec.chemistry!r} is not defined under chemistries")
        if self.n_clusters < self.constraints.min_active_clusters:
            raise ValueError(
                f"pack has {self.n_clusters} clusters, fewer than min_active_clusters="
                f"{self.constraints.min_active_clusters}"
            )

    @property
    def n_clusters(self) -> int:
        return sum(s.count for s in self.clusters)

    @property
    def fade_model(self) -> FadeModel:
        return self.fade_pulsed if is_pulsed(self.protocol) else self.fade_constant


# --------------------------------------------------------------------------
# Electrical model
# --------------------------------------------------------------------------

class ClusterElectrical(NamedTuple):
    ocv: float
    resistance: float
    group: int


def soc_to_q(soc: float, q_map: str = "inverse_odds", clamp: float = 1e-6) -> float:
    """Reaction quotient for a state of charge.

    ``inverse_odds`` gives Q = (1 - soc)/soc, so Q rises and the Nernst
    voltage falls as the cell discharges; ``odds`` is the reciprocal.
    """
    s = min(1.0 - clamp, max(clamp, soc))
    if q_map == "inverse_odds":
        return (1.0 - s) / s
    if q_map == "odds":
        return s / (1.0 - s)
    raise ValueError(f"unknown q_map {q_map!r}")


def cluster_ocv(chem: ChemistryParams, soc: float, temperature: float, cells: int,
                q_map: str = "inverse_odds", clamp: float = 1e-6) -> float:
    q = soc_to_q(soc, q_map, clamp)
    return cells * nernst_voltage(NernstInput(chem.e_standard, temperature, chem.n_electrons, q))


def split_current(resistances: Sequence[float], current: float) -> list[float]:
    """
    Parallel-resistor split of ``current``; the last branch takes the
    remainder so the branch currents sum back to ``current``.
    """
    g = [1.0 / r for r in resistances]
    total = sum(g)
    shares = [current * (gk / total) for gk in g[:-1]]
    shares.append(current - sum(shares))
    return shares


def pack_voltage(clusters: Sequence[ClusterElectrical], current: float) -> float:
    """
    Terminal voltage of the active clusters carrying load ``current``
    (discharge-positive).

    Within a group the cluster voltages ``ocv - I*R`` are combined
    conductance-weighted; groups add in series.
    """
    if not clusters:
        raise ValueError("pack_voltage needs at least one active cluster")
    groups: dict[int, list[ClusterElectrical]] = {}
    for c in clusters:
        groups.setdefault(c.group, []).append(c)
    total = 0.0
    for gid in sorted(groups):
        members = groups[gid]
        shares = split_current([m.resistance for m in members], current)
        gsum = sum(1.0 / m.resistance for m in members)
        total += sum((m.ocv - i * m.resistance) / m.resistance for m, i in zip(members, shares)) / gsum
    return total


def equivalent_cycles(running_total: float, level: float, dt: float, capacity_ref: float) -> float:
    """Throughput cycle count: a full charge plus discharge of ``capacity_ref`` adds 1."""
    if not capacity_ref > 0:
        raise ValueError(f"capacity_ref must be > 0 (got {capacity_ref})")
    return running_total + abs(level) * dt / (2.0 * capacity_ref)


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------

@dataclass(eq=False)
class SimulationTrace:
    dt: float
    cluster_ids: list
    cluster_chemistry: list
    time: np.ndarray
    applied_level: np.ndarray
    pack_voltage: np.ndarray
    mode: np.ndarray  # 1 = REST
    cluster_current: np.ndarray
    surface_concentration: np.ndarray
    temperature: np.ndarray
    resistance: np.ndarray
    soc: np.ndarray
    capacity: dict  # chemistry -> retained capacity [%]
    cycles: dict  # chemistry -> equivalent cycles
    events: list
    rest_time: list  # cumulative REST seconds per cluster at end of run

    @property
    def rest_event_count(self) -> int:
        return sum(1 for e in self.events if e.event == "rest")

    @property
    def peak_surface_concentration(self) -> float:
        return float(np.max(self.surface_concentration)) if self.surface_concentration.size else 0.0


@dataclass(eq=False)
class _Cluster:
    state: ClusterState
    chem_name: str
    chem: ChemistryParams
    group: int
    grid: diffusion.DiffusionGrid
    cycles: float = 0.0


def _build_clusters(config: PackConfig) -> list[_Cluster]:
    chem_order = list(config.chemistries)
    t0 = config.simulation.initial_temperature
    if t0 is None:
        t0 = config.simulation.ambient_temperature
    out = []
    cid = 0
    for spec in config.clusters:
        chem = config.chemistries[spec.chemistry]
        group = spec.group if spec.group is not None else chem_order.index(spec.chemistry)
        for _ in range(spec.count):
            state = ClusterState(
                id=cid,
                soc=chem.initial_soc,
                temperature=t0,
                internal_resistance=_resistance(chem, t0),
                cells_in_cluster=spec.cells,
            )
            grid = diffusion.make_grid(chem.thickness, chem.n_nodes, chem.diffusivity, chem.initial_concentration)
            out.append(_Cluster(state, spec.chemistry, chem, group, grid))
            cid += 1
    return out


def _resistance(chem: ChemistryParams, temperature: float) -> float:
    return chem.base_resistance + chem.resistance_temp_coeff * max(0.0, temperature - chem.nominal_temperature)


def engine_dt(config: PackConfig) -> float:
    """Common step: safety times the tightest stability limit over all chemistries in use."""
    used = {s.chemistry for s in config.clusters}
    limits = []
    for name in sorted(used):
        chem = config.chemistries[name]
        grid = diffusion.make_grid(chem.thickness, chem.n_nodes, chem.diffusivity)
        limits.append(diffusion.stable_dt(grid, 1.0))
    return config.simulation.safety * min(limits)


def run_simulation(config: PackConfig) -> SimulationTrace:
    """
    Run the pack for ``simulation.total_time`` seconds.

    Per step: pick the protocol level, split it across active clusters,
    advance grids (rested clusters at zero flux), update temperature,
    resistance, SOC and cycle counts, then call the scheduler at its
    cadence. Records every ``record_every`` steps.
    """
    sim = config.simulation
    dt = engine_dt(config)
    steps = int(sim.total_time / dt)
    clusters = _build_clusters(config)
    states = [c.state for c in clusters]
    groups = sorted({c.group for c in clusters})
    fade = config.fade_model
    profile = config.protocol
    c_ref = {name: chem.capacity_ah * 3600.0 for name, chem in config.chemistries.items()}

    def electrical(subset) -> list[ClusterElectrical]:
        return [
            ClusterElectrical(
                cluster_ocv(c.chem, c.state.soc, c.state.temperature, c.state.cells_in_cluster,
                            sim.q_map, sim.soc_clamp),
                c.state.internal_resistance,
                c.group,
            )
            for c in subset
        ]

    def voltage_of(subset, level: float) -> float:
        if {c.group for c in subset} != set(groups):
            return -math.inf  # an open series group carries no current
        return pack_voltage(electrical(subset), -level)

    by_id = {c.state.id: c for c in clusters}
    sched_every = max(1, round(sim.scheduler_interval / dt)) if sim.scheduler_interval > 0 else 0

    n_rec = steps // sim.record_every
    m = len(clusters)
    rec_time = np.empty(n_rec)
    rec_level = np.empty(n_rec)
    rec_voltage = np.empty(n_rec)
    rec_mode = np.zeros((n_rec, m), dtype=np.int8)
    rec_current = np.empty((n_rec, m))
    rec_surface = np.empty((n_rec, m))
    rec_temp = np.empty((n_rec, m))
    rec_res = np.empty((n_rec, m))
    rec_soc = np.empty((n_rec, m))
    chem_names = sorted({c.chem_name for c in clusters})
    rec_cap = {name: np.empty(n_rec) for name in chem_names}
    rec_cyc = {name: np.empty(n_rec) for name in chem_names}
    events: list[SchedulerEvent] = []

    perc_state = initial_percussive_state(profile.params) if isinstance(profile, Percussive) else None
    cccv_done = False
    last_level = 0.0
    below_min_for = 0.0
    r = 0

    for k in range(steps):
        t = k * dt
        active = [c for c in clusters if c.state.mode is Mode.ACTIVE]

        # (1) protocol level
        if isinstance(profile, (Constant, FixedPulse)):
            level = flux_at(profile, t)
        elif isinstance(profile, Percussive):
            hottest = max(active, key=lambda c: (c.state.temperature, -c.state.id))
            sample = FeedbackSample(t, hottest.state.internal_resistance, hottest.state.temperature,
                                    hottest.grid.surface)
            level, perc_state = next_percussive_level(profile.params, perc_state, sample)
        elif isinstance(profile, CCCV):
            if cccv_done:
                level = 0.0
            else:
                elec = electrical(active)
                ocv = pack_voltage(elec, 0.0)
                r_pack = sum(
                    1.0 / sum(1.0 / e.resistance for e in elec if e.group == g) for g in groups
                )
                measured = pack_voltage(elec, -last_level)
                res = cccv_level(profile, measured, t, ocv, r_pack)
                level = res.level
                if res.complete:
                    cccv_done = True
                    level = 0.0
                    logger.info("CC-CV charge complete at t=%.6g s", t)
        else:  # pragma: no cover
            raise TypeError(f"unsupported protocol {profile!r}")

        # (2) current split per series group
        currents = dict.fromkeys(by_id, 0.0)
        for g in groups:
            members = [c for c in active if c.group == g]
            for c, i in zip(members, split_current([c.state.internal_resistance for c in members], level)):
                currents[c.state.id] = i

        # (3)-(5) per-cluster physics
        for c in clusters:
            i = currents[c.state.id]
            c.grid = diffusion.step(c.grid, i * c.chem.flux_per_amp, dt)
            s = c.state
            heat = i * i * s.internal_resistance - c.chem.cooling_coefficient * (s.temperature - sim.ambient_temperature)
            s.temperature = s.temperature + dt * heat / c.chem.heat_capacity
            s.internal_resistance = _resistance(c.chem, s.temperature)
            s.soc = min(1.0, max(0.0, s.soc + i * dt / c_ref[c.chem_name]))
            c.cycles = equivalent_cycles(c.cycles, i, dt, c_ref[c.chem_name])
        advance_clocks(states, dt)
        last_level = level
        t_end = (k + 1) * dt

        # (6) scheduler
        if sched_every and (k + 1) % sched_every == 0:
            new_events, warning = schedule_step(states, config.constraints, lambda sub: voltage_of(
                [by_id[s.id] for s in sub], level), t_end)
            events.extend(new_events)
            active_now = [c for c in clusters if c.state.mode is Mode.ACTIVE]
            if warning and voltage_of(active_now, level) < config.constraints.min_pack_voltage:
                below_min_for += sched_every * dt
                if below_min_for > sim.grace_time:
                    raise InfeasibleError(
                        f"pack voltage {voltage_of(active_now, level):.6g} V below min_pack_voltage="
                        f"{config.constraints.min_pack_voltage} V for {below_min_for:.6g} s "
                        f"(grace_time={sim.grace_time} s) at t={t_end:.6g} s"
                    )
            else:
                below_min_for = 0.0

        # a row describes the step just taken: mode and voltage use the set that carried current
        if (k + 1) % sim.record_every == 0:
            rec_time[r] = t_end
            rec_level[r] = level
            rec_voltage[r] = voltage_of(active, level)
            active_ids = {c.state.id for c in active}
            for j, c in enumerate(clusters):
                rec_mode[r, j] = c.state.id not in active_ids
                rec_current[r, j] = currents[c.state.id]
                rec_surface[r, j] = c.grid.concentration[0]
                rec_temp[r, j] = c.state.temperature
                rec_res[r, j] = c.state.internal_resistance
                rec_soc[r, j] = c.state.soc
            for name in chem_names:
                members = [c for c in clusters if c.chem_name == name]
                n_eq = sum(c.cycles for c in members) / len(members)
                rec_cyc[name][r] = n_eq
                rec_cap[name][r] = capacity_retained(fade, n_eq)
            r += 1

    end_time = steps * dt
    for c in clusters:
        if c.state.mode is Mode.REST:
            events.append(SchedulerEvent(end_time, c.state.id, "end_of_run", "still resting"))

    return SimulationTrace(
        dt=dt,
        cluster_ids=[c.state.id for c in clusters],
        cluster_chemistry=[c.chem_name for c in clusters],
        time=rec_time,
        applied_level=rec_level,
        pack_voltage=rec_voltage,
        mode=rec_mode,
        cluster_current=rec_current,
        surface_concentration=rec_surface,
        temperature=rec_temp,
        resistance=rec_res,
        soc=rec_soc,
        capacity=rec_cap,
        cycles=rec_cyc,
        events=events,
        rest_time=[c.state.cumulative_rest_time for c in clusters],
    )
