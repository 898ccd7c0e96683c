"""
Cluster rest scheduler.

Clusters whose resistance or temperature crosses its threshold are moved to
REST while the rest of the pack carries the load. Candidates are taken in a
fixed priority order (stress desc, cumulative rest asc, id asc) and kept
only if the pack stays within its active-count, rest-fraction and voltage
limits. Rested clusters wake after a minimum dwell once their stress falls
below a hysteresis band.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

WAKE_BAND = 0.9


class Mode(str, enum.Enum):
    ACTIVE = "ACTIVE"
    REST = "REST"


@dataclass
class ClusterState:
    id: int
    mode: Mode = Mode.ACTIVE
    soc: float = 0.5
    temperature: float = 298.15
    internal_resistance: float = 0.01
    cells_in_cluster: int = 1
    time_in_mode: float = 0.0
    cumulative_rest_time: float = 0.0

    def __post_init__(self):
        if not 0 <= self.soc <= 1:
            raise ValueError(f"cluster {self.id}: soc must lie in [0, 1] (got {self.soc})")
        if not self.internal_resistance > 0:
            raise ValueError(f"cluster {self.id}: internal_resistance must be > 0")
        if not self.temperature > 0:
            raise ValueError(f"cluster {self.id}: temperature must be > 0 K")


@dataclass(frozen=True)
class ScheduleConstraints:
    resistance_threshold: float
    temperature_threshold: float
    min_active_clusters: int = 1
    min_pack_voltage: float = 0.0
    max_rest_fraction: float = 0.5
    min_rest_duration: float = 0.0
    min_active_duration: float = 0.0

    def __post_init__(self):
        if self.min_active_clusters < 1:
            raise ValueError(f"min_active_clusters must be >= 1 (got {self.min_active_clusters})")
        if not 0 <= self.max_rest_fraction < 1:
            raise ValueError(f"max_rest_fraction must lie in [0, 1) (got {self.max_rest_fraction})")
        if self.min_rest_duration < 0 or self.min_active_duration < 0:
            raise ValueError("dwell durations must be >= 0")
        if not (self.resistance_threshold > 0 and self.temperature_threshold > 0):
            raise ValueError("thresholds must be > 0")


class RestDecision(NamedTuple):
    rest_ids: frozenset
    feasibility_warning: bool


class SchedulerEvent(NamedTuple):
    time: float
    cluster_id: int
    event: str  # "rest" | "wake" | "end_of_run"
    reason: str


PackVoltageFn = Callable[[Sequence[ClusterState]], float]


def stress_score(cluster: ClusterState, constraints: ScheduleConstraints) -> float:
    return max(
        cluster.internal_resistance / constraints.resistance_threshold,
        cluster.temperature / constraints.temperature_threshold,
    )


def priority_key(cluster: ClusterState, constraints: ScheduleConstraints):
    return (-stress_score(cluster, constraints), cluster.cumulative_rest_time, cluster.id)


def rest_feasible(
    clusters: Sequence[ClusterState],
    rest_ids,
    constraints: ScheduleConstraints,
    pack_voltage_fn: PackVoltageFn,
) -> bool:
    """Whether resting ``rest_ids`` on top of the current REST set is allowed."""
    active = [c for c in clusters if c.mode is Mode.ACTIVE and c.id not in rest_ids]
    if len(active) < constraints.min_active_clusters:
        return False
    if (len(clusters) - len(active)) / len(clusters) > constraints.max_rest_fraction:
        return False
    return pack_voltage_fn(active) >= constraints.min_pack_voltage


def select_rest_set(
    clusters: Sequence[ClusterState],
    constraints: ScheduleConstraints,
    pack_voltage_fn: PackVoltageFn,
) -> RestDecision:
    """
    Pick ACTIVE clusters to rest.

    Eligible clusters (score > 1 and active for at least
    ``min_active_duration``) are visited in priority order; each is kept if
    the pack stays feasible with it rested. If the pack is infeasible even
    with nothing rested, the empty set is returned with the warning flag.
    """
    if not rest_feasible(clusters, frozenset(), constraints, pack_voltage_fn):
        return RestDecision(frozenset(), True)
    candidates = sorted(
        (
            c
            for c in clusters
            if c.mode is Mode.ACTIVE
            and c.time_in_mode >= constraints.min_active_duration
            and stress_score(c, constraints) > 1.0
        ),
        key=lambda c: priority_key(c, constraints),
    )
    chosen: set = set()
    for c in candidates:
        trial = chosen | {c.id}
        if rest_feasible(clusters, trial, constraints, pack_voltage_fn):
            chosen = trial
    return RestDecision(frozenset(chosen), False)


def wake_due(clusters: Sequence[ClusterState], constraints: ScheduleConstraints, t: float = 0.0) -> frozenset:
    """Rested clusters past their minimum rest whose stress fell below the wake band."""
    return frozenset(
        c.id
        for c in clusters
        if c.mode is Mode.REST
        and c.time_in_mode >= constraints.min_rest_duration
        and stress_score(c, constraints) < WAKE_BAND
    )


def _reason(cluster: ClusterState, constraints: ScheduleConstraints) -> str:
    r = cluster.internal_resistance / constraints.resistance_threshold
    T = cluster.temperature / constraints.temperature_threshold
    if r >= T:
        return f"resistance {cluster.internal_resistance:.6g} ohm > {constraints.resistance_threshold:.6g}"
    return f"temperature {cluster.temperature:.6g} K > {constraints.temperature_threshold:.6g}"


def schedule_step(
    clusters: Sequence[ClusterState],
    constraints: ScheduleConstraints,
    pack_voltage_fn: PackVoltageFn,
    t: float,
) -> tuple[list[SchedulerEvent], bool]:
    """
    One scheduler decision: wake due clusters, then rest a new set.

    Mutates mode and ``time_in_mode`` of the affected clusters and returns
    the events plus the feasibility warning flag. Dwell clocks are advanced
    by the caller via :func:`advance_clocks`.
    """
    events = []
    by_id = {c.id: c for c in clusters}
    for cid in sorted(wake_due(clusters, constraints, t)):
        c = by_id[cid]
        events.append(SchedulerEvent(t, cid, "wake", f"stress {stress_score(c, constraints):.6g} < {WAKE_BAND}"))
        c.mode = Mode.ACTIVE
        c.time_in_mode = 0.0
    decision = select_rest_set(clusters, constraints, pack_voltage_fn)
    for cid in sorted(decision.rest_ids):
        c = by_id[cid]
        events.append(SchedulerEvent(t, cid, "rest", _reason(c, constraints)))
        c.mode = Mode.REST
        c.time_in_mode = 0.0
    return events, decision.feasibility_warning


def advance_clocks(clusters: Sequence[ClusterState], dt: float) -> None:
    for c in clusters:
        c.time_in_mode += dt
        if c.mode is Mode.REST:
            c.cumulative_rest_time += dt
