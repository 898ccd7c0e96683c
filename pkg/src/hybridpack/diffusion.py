"""
Explicit finite-difference solver for 1-D diffusion in an electrode slab.

Node 0 is the electrode surface (where the applied flux enters); the last
node is the back face. The update reproduces the reference figure script
exactly:

    new[0]  = c[0] + r*(c[1] - c[0])*2 + flux*dt/h
    new[i]  = c[i] + r*(c[i+1] - 2*c[i] + c[i-1])      (interior)
    new[-1] = new[-2]                                   (zero gradient)

with r = D*dt/h**2. Note this surface/back treatment does not conserve the
rectangle-rule mass ``h*sum(c)``; the quantity it does conserve is given by
:func:`scheme_invariant_mass`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .protocols import CurrentProfile, flux_at


class StabilityError(ValueError):
    """Time step exceeds the explicit-scheme stability bound."""


@dataclass(frozen=True, eq=False)
class DiffusionGrid:
    length: float
    diffusivity: float
    concentration: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.concentration.shape[0]

    @property
    def node_spacing(self) -> float:
        return self.length / (self.n_nodes - 1)

    @property
    def surface(self) -> float:
        return float(self.concentration[0])

    def copy(self) -> "DiffusionGrid":
        return replace(self, concentration=self.concentration.copy())


@dataclass(frozen=True, eq=False)
class SurfaceTrace:
    times: np.ndarray
    surface_concentration: np.ndarray
    step_index: np.ndarray


def make_grid(length: float, n_nodes: int, diffusivity: float, initial_concentration: float = 0.0) -> DiffusionGrid:
    if int(n_nodes) != n_nodes or n_nodes < 3:
        raise ValueError(f"n_nodes must be an integer >= 3 (got {n_nodes})")
    if not length > 0:
        raise ValueError(f"length must be > 0 (got {length})")
    if not diffusivity > 0:
        raise ValueError(f"diffusivity must be > 0 (got {diffusivity})")
    if not math.isfinite(initial_concentration):
        raise ValueError("initial_concentration must be finite")
    conc = np.full(int(n_nodes), float(initial_concentration))
    return DiffusionGrid(length=float(length), diffusivity=float(diffusivity), concentration=conc)


def stability_limit(grid: DiffusionGrid) -> float:
    """Largest stable explicit step, h**2 / (2 D)."""
    return grid.node_spacing**2 / (2 * grid.diffusivity)


def stable_dt(grid: DiffusionGrid, safety: float = 0.5) -> float:
    if not 0 < safety <= 1:
        raise ValueError(f"safety must lie in (0, 1] (got {safety})")
    return safety * grid.node_spacing**2 / (2 * grid.diffusivity)


def step(grid: DiffusionGrid, surface_flux: float, dt: float) -> DiffusionGrid:
    """Advance one explicit step with ``surface_flux`` entering at node 0."""
    limit = stability_limit(grid)
    if not 0 < dt <= limit:
        raise StabilityError(
            f"dt={dt!r} s violates the explicit stability bound h^2/(2D)={limit!r} s "
            f"(h={grid.node_spacing!r} m, D={grid.diffusivity!r} m^2/s)"
        )
    if not math.isfinite(surface_flux):
        raise ValueError(f"surface_flux must be finite (got {surface_flux})")
    D = grid.diffusivity
    h = grid.node_spacing
    c = grid.concentration
    new = c.copy()
    new[0] = c[0] + (D * dt / h**2) * (c[1] - c[0]) * 2 + surface_flux * dt / h
    new[1:-1] = c[1:-1] + D * dt / h**2 * (c[2:] - 2 * c[1:-1] + c[:-2])
    new[-1] = new[-2]
    return replace(grid, concentration=new)


def total_mass(grid: DiffusionGrid) -> float:
    """Rectangle-rule content, h * sum(c)."""
    return grid.node_spacing * float(np.sum(grid.concentration))


def scheme_invariant_mass(grid: DiffusionGrid, dt: float) -> float:
    """
    Weighted content left unchanged by a zero-flux :func:`step`.

    Weights are 1/2 at the surface node, 1 in the interior, and
    (1 - r, r) on the last two nodes, r = D*dt/h**2. Each step with flux
    ``q`` raises it by exactly ``q*dt/2``.
    """
    h = grid.node_spacing
    r = grid.diffusivity * dt / h**2
    c = grid.concentration
    return h * (0.5 * c[0] + float(np.sum(c[1:-2])) + (1 - r) * c[-2] + r * c[-1])


def surface_history(grid: DiffusionGrid, profile: CurrentProfile, total_time: float, dt: float):
    """
    Step ``grid`` for floor(total_time/dt) steps, querying ``profile`` at each
    step's start time.

    Returns ``(fluxes, surface, final_grid)`` where ``surface[k]`` is the
    surface value after step ``k``.
    """
    if not total_time > 0:
        raise ValueError(f"total_time must be > 0 (got {total_time})")
    steps = int(total_time / dt)
    fluxes = np.empty(steps)
    surface = np.empty(steps)
    for k in range(steps):
        fluxes[k] = flux_at(profile, k * dt)
        grid = step(grid, fluxes[k], dt)
        surface[k] = grid.concentration[0]
    return fluxes, surface, grid


def downsample_indices(steps: int, sample_count: int) -> np.ndarray:
    """Index-linear downsampling, floor(linspace(0, steps-1, sample_count))."""
    if sample_count < 2:
        raise ValueError(f"sample_count must be >= 2 (got {sample_count})")
    if sample_count > steps:
        raise ValueError(f"sample_count={sample_count} exceeds the {steps} available steps")
    return np.linspace(0, steps - 1, sample_count).astype(int)


def run_diffusion(
    grid: DiffusionGrid, profile: CurrentProfile, total_time: float, dt: float, sample_count: int = 200
) -> SurfaceTrace:
    """Run and return ``sample_count`` evenly-indexed surface samples.

    Sample times are end-of-step times, (k + 1) * dt.
    """
    _, surface, _ = surface_history(grid, profile, total_time, dt)
    idx = downsample_indices(len(surface), sample_count)
    return SurfaceTrace(times=(idx + 1) * dt, surface_concentration=surface[idx], step_index=idx)
