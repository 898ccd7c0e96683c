"""
Charging current / surface-flux profiles.

Stateless profiles (:class:`Constant`, :class:`FixedPulse`) answer
:func:`flux_at` directly. :class:`CCCV` needs a voltage measurement
(:func:`cccv_level`) and :class:`Percussive` needs impedance/temperature
feedback (:func:`next_percussive_level`).

Levels are charging-positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Union

# Feedback below this fraction of both thresholds counts as "clean".
CLEAN_BAND = 0.9


class ProfileError(ValueError):
    """Invalid profile parameters or an unsupported query."""


@dataclass(frozen=True)
class Constant:
    level: float


@dataclass(frozen=True)
class FixedPulse:
    high_level: float
    rest_level: float
    period: float
    duty: float = 0.5

    def __post_init__(self):
        if not self.period > 0:
            raise ProfileError(f"period must be > 0 (got {self.period})")
        if not 0 < self.duty < 1:
            raise ProfileError(f"duty must lie in (0, 1) (got {self.duty})")

    @property
    def mean_level(self) -> float:
        return self.duty * self.high_level + (1.0 - self.duty) * self.rest_level


@dataclass(frozen=True)
class CCCV:
    cc_level: float
    cv_voltage: float
    cv_current_floor: float = 0.0

    def __post_init__(self):
        if self.cv_current_floor < 0:
            raise ProfileError(f"cv_current_floor must be >= 0 (got {self.cv_current_floor})")
        if not self.cv_voltage > 0:
            raise ProfileError(f"cv_voltage must be > 0 (got {self.cv_voltage})")


@dataclass(frozen=True)
class PercussiveParams:
    """
    Adaptive pulse controller settings.

    ``amplitude_step`` is the multiplicative down-step (0 < step < 1); the
    up-step after a clean cycle divides by it.
    """

    base_amplitude: float
    min_amplitude: float
    max_amplitude: float
    pulse_duration: float
    rest_duration: float
    impedance_threshold: float
    temperature_threshold: float
    amplitude_step: float = 0.8
    bidirectional: bool = False
    reverse_fraction: float = 0.0

    def __post_init__(self):
        if not self.min_amplitude <= self.base_amplitude <= self.max_amplitude:
            raise ProfileError(
                "need min_amplitude <= base_amplitude <= max_amplitude "
                f"(got {self.min_amplitude}, {self.base_amplitude}, {self.max_amplitude})"
            )
        if not (self.pulse_duration > 0 and self.rest_duration > 0):
            raise ProfileError("pulse_duration and rest_duration must be > 0")
        if not 0 <= self.reverse_fraction <= 1:
            raise ProfileError(f"reverse_fraction must lie in [0, 1] (got {self.reverse_fraction})")
        if not 0 < self.amplitude_step < 1:
            raise ProfileError(f"amplitude_step must lie in (0, 1) (got {self.amplitude_step})")
        if not (self.impedance_threshold > 0 and self.temperature_threshold > 0):
            raise ProfileError("feedback thresholds must be > 0")


@dataclass(frozen=True)
class Percussive:
    params: PercussiveParams


CurrentProfile = Union[Constant, FixedPulse, CCCV, Percussive]


def is_pulsed(profile: CurrentProfile) -> bool:
    """True for the pulse families (fixed-duty and percussive)."""
    return isinstance(profile, (FixedPulse, Percussive))


def flux_at(profile: CurrentProfile, t: float) -> float:
    """Applied level of a stateless profile at time ``t``."""
    if t < 0:
        raise ProfileError(f"t must be >= 0 (got {t})")
    if isinstance(profile, Constant):
        return profile.level
    if isinstance(profile, FixedPulse):
        if (t % profile.period) < profile.duty * profile.period:
            return profile.high_level
        return profile.rest_level
    raise ProfileError(
        f"{type(profile).__name__} profiles need feedback; "
        "use cccv_level / next_percussive_level instead of flux_at"
    )


# --------------------------------------------------------------------------
# Percussive controller
# --------------------------------------------------------------------------

class FeedbackSample(NamedTuple):
    time: float
    impedance: float
    temperature: float
    surface_concentration: float | None = None


@dataclass(frozen=True)
class PercussiveState:
    phase: str  # "pulse" | "rest"
    phase_start: float
    amplitude: float
    breached: bool = False  # any threshold breach in the current cycle
    clean: bool = True  # every sample in the current cycle below the clean band
    samples: int = 0  # samples seen in the current cycle


def initial_percussive_state(params: PercussiveParams, t0: float = 0.0) -> PercussiveState:
    return PercussiveState(phase="pulse", phase_start=t0, amplitude=params.base_amplitude)


def _adapt(params: PercussiveParams, state: PercussiveState) -> float:
    amp = state.amplitude
    if state.breached:
        return max(params.min_amplitude, amp * params.amplitude_step)
    if state.clean and state.samples > 0:
        return min(params.max_amplitude, amp / params.amplitude_step)
    return amp


def next_percussive_level(
    params: PercussiveParams, state: PercussiveState, sample: FeedbackSample
) -> tuple[float, PercussiveState]:
    """
    Advance the controller to ``sample.time`` and return the level to apply.

    Phase boundaries are placed at exact multiples of the configured
    durations, so phase lengths do not drift with the sampling step.
    Amplitude only changes at a pulse start: down after a cycle containing a
    breach, up after a cycle whose samples all sat inside the clean band.
    """
    for name in ("time", "impedance", "temperature"):
        if not math.isfinite(getattr(sample, name)):
            raise ProfileError(f"feedback {name} must be finite (got {getattr(sample, name)})")
    if sample.surface_concentration is not None and not math.isfinite(sample.surface_concentration):
        raise ProfileError("feedback surface_concentration must be finite")
    if not (sample.impedance > 0 and sample.temperature > 0):
        raise ProfileError("feedback impedance and temperature must be > 0")
    if sample.time < state.phase_start:
        raise ProfileError(f"feedback time {sample.time} precedes phase start {state.phase_start}")

    while True:
        duration = params.pulse_duration if state.phase == "pulse" else params.rest_duration
        if sample.time - state.phase_start < duration:
            break
        boundary = state.phase_start + duration
        if state.phase == "pulse":
            state = replace(state, phase="rest", phase_start=boundary)
        else:
            state = PercussiveState(phase="pulse", phase_start=boundary, amplitude=_adapt(params, state))

    breach = sample.impedance > params.impedance_threshold or sample.temperature > params.temperature_threshold
    clean = (
        sample.impedance < CLEAN_BAND * params.impedance_threshold
        and sample.temperature < CLEAN_BAND * params.temperature_threshold
    )
    state = replace(
        state,
        breached=state.breached or breach,
        clean=state.clean and clean,
        samples=state.samples + 1,
    )

    if state.phase == "pulse":
        level = state.amplitude
    elif params.bidirectional:
        level = -params.reverse_fraction * state.amplitude
    else:
        level = 0.0
    return level, state


# --------------------------------------------------------------------------
# CC-CV
# --------------------------------------------------------------------------

class CCCVLevel(NamedTuple):
    level: float
    cv_phase: bool
    complete: bool


def cccv_level(profile: CCCV, measured_voltage: float, t: float, ocv: float, resistance: float) -> CCCVLevel:
    """
    Two-phase CC-CV level.

    Below ``cv_voltage`` the constant-current level is returned unchanged.
    At or above it, the level is the ohmic holding current
    ``(cv_voltage - ocv) / resistance`` limited to ``[0, cc_level]``; the
    charge is complete once that level falls to the current floor.
    """
    if not measured_voltage > 0:
        raise ProfileError(f"measured_voltage must be > 0 (got {measured_voltage})")
    if measured_voltage < profile.cv_voltage:
        return CCCVLevel(profile.cc_level, False, False)
    if not resistance > 0:
        raise ProfileError(f"resistance must be > 0 (got {resistance})")
    hold = (profile.cv_voltage - ocv) / resistance
    hold = min(profile.cc_level, max(0.0, hold))
    return CCCVLevel(hold, True, hold <= profile.cv_current_floor)
