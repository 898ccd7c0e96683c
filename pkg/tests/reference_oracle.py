"""
Line-by-line re-run of the reference figure script, loop form, no package imports.

Used as the independent oracle for the diffusion solver and figure data.
The truncated pulse conditional is read as a 50 % duty square wave.
"""

import numpy as np

L = 50e-6
n = 100
D = 1e-13
h = L / (n - 1)
dt = 0.5 * h**2 / (2 * D)
total_time = 200
steps = int(total_time / dt)
high_flux = 5.0
rest_flux = 0.0
period = 20


def update(c, flux):
    new = c.copy()
    new[0] = c[0] + (D * dt / h**2) * (c[1] - c[0]) * 2 + flux * dt / h
    for i in range(1, n - 1):
        new[i] = c[i] + D * dt / h**2 * (c[i + 1] - 2 * c[i] + c[i - 1])
    new[-1] = new[-2]
    return new


def run():
    """Full surface traces (one value per step, recorded after the update)."""
    c_const = np.zeros(n)
    c_pulse = np.zeros(n)
    surface_const = []
    surface_pulse = []
    for step in range(steps):
        t = step * dt
        c_const = update(c_const, flux=2.0)
        surface_const.append(c_const[0])
        flux = high_flux if (t % period) < period / 2 else rest_flux
        c_pulse = update(c_pulse, flux=flux)
        surface_pulse.append(c_pulse[0])
    return np.array(surface_const), np.array(surface_pulse)


def downsample_indices():
    return np.linspace(0, steps - 1, 200).astype(int)


def energy_density():
    fractions = np.arange(0, 0.7, 0.1)
    return fractions, (1 - fractions) * 250 + fractions * 150


def capacity_fade():
    cycles = np.arange(0, 20001, 2000)
    c_const = 100 - (0.1 * np.sqrt(cycles) + 0.001 * cycles)
    c_pulse = 100 - (0.08 * np.sqrt(cycles) + 0.0008 * cycles)
    return cycles, c_const, c_pulse
