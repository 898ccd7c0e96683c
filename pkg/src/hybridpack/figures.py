"""Figure data: energy density vs power fraction, surface concentration, capacity fade."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diffusion import downsample_indices, make_grid, stable_dt, surface_history
from .electrochem import (
    FADE_CONSTANT_CURRENT,
    FADE_PULSED,
    PackComposition,
    capacity_retained,
    pack_specific_energy,
)
from .protocols import Constant, FixedPulse

E_ENERGY = 250.0  # Wh/kg
E_POWER = 150.0  # Wh/kg
TARGET = 175.0  # Wh/kg

# reference slab and charging schedule
SLAB_LENGTH = 50e-6  # m
SLAB_NODES = 100
SLAB_DIFFUSIVITY = 1e-13  # m^2/s
DT_SAFETY = 0.5
TOTAL_TIME = 200.0  # s
SAMPLE_COUNT = 200
CONSTANT_FLUX = 2.0
PULSE = FixedPulse(high_level=5.0, rest_level=0.0, period=20.0, duty=0.5)

FIG1_HEADER = ["power_fraction", "specific_energy_wh_per_kg", "target_wh_per_kg"]
FIG2_HEADER = ["step", "time_s", "surface_constant", "surface_pulsed"]
FIG3_HEADER = ["cycles", "capacity_constant_pct", "capacity_pulsed_pct"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def figure1_rows():
    rows = []
    for i in range(7):
        f = i / 10
        rows.append((f, pack_specific_energy(PackComposition(E_ENERGY, E_POWER, f)), TARGET))
    return rows


def figure2_rows(charge_matched: bool = False):
    """
    Downsampled surface concentration for constant vs pulsed flux.

    With ``charge_matched`` the constant level is set to the pulse's
    time-average so both runs inject the same charge.
    """
    grid = make_grid(SLAB_LENGTH, SLAB_NODES, SLAB_DIFFUSIVITY, 0.0)
    dt = stable_dt(grid, DT_SAFETY)
    level = PULSE.mean_level if charge_matched else CONSTANT_FLUX
    _, s_const, _ = surface_history(grid, Constant(level), TOTAL_TIME, dt)
    _, s_pulse, _ = surface_history(grid, PULSE, TOTAL_TIME, dt)
    idx = downsample_indices(len(s_const), SAMPLE_COUNT)
    return [(int(k), (k + 1) * dt, s_const[k], s_pulse[k]) for k in idx]


def figure3_rows():
    return [
        (n, capacity_retained(FADE_CONSTANT_CURRENT, n), capacity_retained(FADE_PULSED, n))
        for n in range(0, 20001, 2000)
    ]


def write_figures(out_dir, charge_matched: bool = False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "fig1.csv", out / "fig2.csv", out / "fig3.csv"]
    write_csv(paths[0], FIG1_HEADER, figure1_rows())
    write_csv(paths[1], FIG2_HEADER, figure2_rows(charge_matched))
    write_csv(paths[2], FIG3_HEADER, figure3_rows())
    return paths
