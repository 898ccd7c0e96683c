"""
Closed-form electrochemical models for a hybrid energy/power pack.

- Mass-weighted pack specific energy and its inversion for a target.
- Nernst open-circuit voltage.
- Two-term (square-root + linear) capacity fade law and its inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Physical constants
R_GAS = 8.314  # J/(mol·K)
FARADAY = 96485.0  # C/mol


class InvalidCompositionError(ValueError):
    """Pack composition outside its physical bounds."""


class InvalidInputError(ValueError):
    """Electrochemical model input outside its domain."""


@dataclass(frozen=True)
class PackComposition:
    """Mass split between energy modules and power modules.

    Attributes
    ----------
    e_energy : specific energy of the energy modules [Wh/kg]
    e_power : specific energy of the power modules [Wh/kg]
    f : mass fraction of power modules, 0..1
    """

    e_energy: float
    e_power: float
    f: float

    def __post_init__(self):
        if not (self.e_energy > 0 and self.e_power > 0):
            raise InvalidCompositionError(
                f"specific energies must be > 0 (got e_energy={self.e_energy}, e_power={self.e_power})"
            )
        if not 0.0 <= self.f <= 1.0:
            raise InvalidCompositionError(f"power fraction f must lie in [0, 1] (got f={self.f})")


@dataclass(frozen=True)
class NernstInput:
    e_standard: float
    temperature: float
    n_electrons: int
    q: float

    def __post_init__(self):
        if not self.temperature > 0:
            raise InvalidInputError(f"temperature must be > 0 K (got {self.temperature})")
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise InvalidInputError(f"n_electrons must be a positive integer (got {self.n_electrons})")
        if not self.q > 0:
            raise InvalidInputError(f"reaction quotient q must be > 0 (got {self.q})")


@dataclass(frozen=True)
class FadeModel:
    """Capacity fade C(N) = c0 - alpha*sqrt(N) - beta*N, capacities in %."""

    c0: float = 100.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.c0 > 0:
            raise InvalidInputError(f"c0 must be > 0 (got {self.c0})")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidInputError(f"fade coefficients must be >= 0 (got alpha={self.alpha}, beta={self.beta})")


# Calibrated fade sets: constant-current reaches 80 % at 10 000 cycles.
FADE_CONSTANT_CURRENT = FadeModel(c0=100.0, alpha=0.1, beta=1e-3)
FADE_PULSED = FadeModel(c0=100.0, alpha=0.08, beta=8e-4)


def pack_specific_energy(comp: PackComposition) -> float:
    """Average specific energy of the pack [Wh/kg]."""
    return (1.0 - comp.f) * comp.e_energy + comp.f * comp.e_power


def max_power_fraction_for_target(e_energy: float, e_power: float, target: float) -> float | None:
    """
    Largest power-module fraction that still meets ``target`` Wh/kg.

    Returns ``None`` when the target is unreachable even with no power
    modules at all.
    """
    if not (e_energy > 0 and e_power > 0 and target > 0):
        raise InvalidCompositionError(
            f"energies and target must be > 0 (got {e_energy}, {e_power}, {target})"
        )
    if e_power >= target:
        return 1.0
    if e_energy < target:
        return None
    f = (e_energy - target) / (e_energy - e_power)
    return min(1.0, max(0.0, f))


def nernst_voltage(inp: NernstInput) -> float:
    """E = E0 - (R T / n F) ln Q  [V]."""
    return inp.e_standard - (R_GAS * inp.temperature) / (inp.n_electrons * FARADAY) * math.log(inp.q)


def capacity_retained(model: FadeModel, n_cycles: float) -> float:
    """Retained capacity [%] after ``n_cycles``; not clamped at zero."""
    if n_cycles < 0:
        raise InvalidInputError(f"n_cycles must be >= 0 (got {n_cycles})")
    return model.c0 - model.alpha * math.sqrt(n_cycles) - model.beta * n_cycles


def cycles_to_capacity(model: FadeModel, threshold: float) -> int | None:
    """
    Smallest integer cycle count N with ``capacity_retained(N) <= threshold``.

    Solves beta*s**2 + alpha*s - (c0 - threshold) = 0 for s = sqrt(N), then
    corrects the rounded root by bisection on :func:`capacity_retained`
    itself (non-increasing in N even under rounding), so the two always
    agree. Returns ``None`` if the model never fades.
    """
    if not 0 < threshold < model.c0:
        raise InvalidInputError(f"threshold must lie in (0, c0={model.c0}) (got {threshold})")
    if model.alpha == 0 and model.beta == 0:
        return None
    loss = model.c0 - threshold
    if model.beta == 0:
        s = loss / model.alpha
    else:
        # numerically stable root of the quadratic
        s = 2.0 * loss / (model.alpha + math.sqrt(model.alpha**2 + 4.0 * model.beta * loss))
    guess = s * s
    if not guess < 1e300:
        raise InvalidInputError("threshold is not reached within floating-point range")

    def reached(n: int) -> bool:
        return capacity_retained(model, n) <= threshold

    # bracket: reached(hi) is True, lo == -1 or reached(lo) is False
    hi = math.ceil(guess)
    step = 1
    while not reached(hi):
        hi += step
        step *= 2
    lo = hi - 1
    step = 1
    while lo >= 0 and reached(lo):
        hi = lo
        lo = max(-1, lo - step)
        step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if reached(mid):
            hi = mid
        else:
            lo = mid
    return hi
