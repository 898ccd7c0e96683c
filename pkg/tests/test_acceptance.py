"""
Acceptance criteria, one test per criterion.

Each test records its outcome; ``conftest.py`` prints one PASS/FAIL line per
criterion at the end of the session. Tolerances and runtime budgets are the
contractual ones and are not relaxed.
"""

import csv
import time
from pathlib import Path

import numpy as np
import pytest

import reference_oracle as oracle
import scheduler_oracle
from conftest import make_config
from hybridpack import cli, diffusion
from hybridpack.electrochem import (
    FADE_CONSTANT_CURRENT,
    FADE_PULSED,
    FadeModel,
    NernstInput,
    capacity_retained,
    max_power_fraction_for_target,
    nernst_voltage,
)
from hybridpack.engine import ClusterSpec, run_simulation
from hybridpack.protocols import Constant, FixedPulse
from hybridpack.scheduler import select_rest_set

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
PULSE = FixedPulse(5.0, 0.0, 20.0, 0.5)


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def reference_grid():
    return diffusion.make_grid(oracle.L, oracle.n, oracle.D, 0.0)


class Budget:
    """Context manager asserting a wall-clock budget in seconds."""

    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, *_):
        self.elapsed = time.perf_counter() - self.start
        if exc_type is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.2f} s, budget {self.seconds} s"


@pytest.mark.acceptance(1, "fade calibration")
def test_criterion_01_fade_calibration():
    with Budget(1.0):
        assert capacity_retained(FadeModel(100.0, 0.1, 1e-3), 10_000) == pytest.approx(80.0, abs=1e-9)


@pytest.mark.acceptance(2, "capacity fade figure data")
def test_criterion_02_fade_figure(tmp_path):
    with Budget(1.0):
        cli.main(["figures", "--out", str(tmp_path)])
        _, rows = read_csv(tmp_path / "fig3.csv")
        cycles, c_const, c_pulse = oracle.capacity_fade()
        assert [int(r[0]) for r in rows] == list(cycles)
        np.testing.assert_allclose([float(r[1]) for r in rows], c_const, rtol=0, atol=1e-9)
        np.testing.assert_allclose([float(r[2]) for r in rows], c_pulse, rtol=0, atol=1e-9)
        gap = capacity_retained(FADE_PULSED, 20_000) - capacity_retained(FADE_CONSTANT_CURRENT, 20_000)
        assert gap == pytest.approx(6.828, abs=0.01)
        assert float(rows[-1][2]) - float(rows[-1][1]) == pytest.approx(6.828, abs=0.01)


@pytest.mark.acceptance(3, "energy density figure data")
def test_criterion_03_energy_figure(tmp_path):
    with Budget(1.0):
        cli.main(["figures", "--out", str(tmp_path)])
        _, rows = read_csv(tmp_path / "fig1.csv")
        f = np.array([float(r[0]) for r in rows])
        np.testing.assert_allclose(f, np.arange(7) / 10, rtol=0, atol=1e-12)
        np.testing.assert_allclose([float(r[1]) for r in rows], 250.0 - 100.0 * f, rtol=0, atol=1e-12)
        _, expected = oracle.energy_density()
        np.testing.assert_allclose([float(r[1]) for r in rows], expected, rtol=0, atol=1e-12)
        assert max_power_fraction_for_target(250.0, 150.0, 175.0) == pytest.approx(0.75, abs=1e-12)


@pytest.mark.acceptance(4, "surface concentration matches reference script")
def test_criterion_04_diffusion_oracle():
    with Budget(5.0):
        ref_const, ref_pulse = oracle.run()
        grid = reference_grid()
        dt = diffusion.stable_dt(grid, 0.5)
        assert dt == oracle.dt
        _, s_const, _ = diffusion.surface_history(grid, Constant(2.0), 200.0, dt)
        _, s_pulse, _ = diffusion.surface_history(grid, PULSE, 200.0, dt)
        assert len(s_const) == len(ref_const) == oracle.steps
        np.testing.assert_allclose(s_const, ref_const, rtol=1e-9, atol=0)
        np.testing.assert_allclose(s_pulse, ref_pulse, rtol=1e-9, atol=0)


@pytest.mark.acceptance(5, "mass conservation of total_mass")
def test_criterion_05_conservation():
    with Budget(5.0):
        rng = np.random.default_rng(12345)
        base = reference_grid()
        dt = diffusion.stable_dt(base, 0.5)
        grid = diffusion.DiffusionGrid(base.length, base.diffusivity, rng.uniform(0.5, 1.5, base.n_nodes))
        m0 = diffusion.total_mass(grid)
        for _ in range(10_000):
            grid = diffusion.step(grid, 0.0, dt)
        drift = abs(diffusion.total_mass(grid) - m0) / m0

        _, _, final = diffusion.surface_history(base, Constant(2.0), 200.0, dt)
        injected = 2.0 * oracle.steps * dt
        mismatch = abs(diffusion.total_mass(final) - injected) / injected

        report = f"zero-flux relative drift {drift:.3e}; constant-flux mass vs injected mismatch {mismatch:.3e}"
        assert drift < 1e-9 and mismatch < 0.01, report


@pytest.mark.acceptance(6, "stability guard")
def test_criterion_06_stability_guard():
    with Budget(10.0):
        grid = reference_grid()
        limit = diffusion.stability_limit(grid)
        with pytest.raises(diffusion.StabilityError):
            diffusion.step(grid, 1.0, 1.01 * limit)
        dt = 0.99 * limit
        finite = True
        for k in range(100_000):
            grid = diffusion.step(grid, PULSE.high_level if (k * dt) % 20.0 < 10.0 else 0.0, dt)
            finite &= bool(np.isfinite(grid.concentration).all())
        assert finite


@pytest.mark.acceptance(7, "voltage slope per decade")
def test_criterion_07_nernst_slope():
    with Budget(1.0):
        v1 = nernst_voltage(NernstInput(3.0, 298.15, 1, 1.0))
        v10 = nernst_voltage(NernstInput(3.0, 298.15, 1, 10.0))
        assert (v1 - v10) * 1000.0 == pytest.approx(59.16, abs=0.01)


@pytest.mark.acceptance(8, "scheduler properties and enumeration oracle")
def test_criterion_08_scheduler():
    with Budget(30.0):
        violations, counts = scheduler_oracle.random_schedule(seed=8, steps=100_000)
        assert violations == dict.fromkeys(violations, 0), violations
        assert counts["rest"] > 100 and counts["wake"] > 100

        rng = np.random.default_rng(1000)
        nonempty = 0
        for _ in range(1000):
            clusters, cons = scheduler_oracle.random_pack(rng, n_max=6)
            expected = scheduler_oracle.enumerate_best(clusters, cons)
            got = select_rest_set(clusters, cons, scheduler_oracle.series_voltage)
            assert got == expected, (clusters, cons)
            nonempty += bool(got.rest_ids)
        assert nonempty > 50  # the oracle comparison is not vacuous


@pytest.mark.acceptance(9, "engine composes the diffusion solver")
def test_criterion_09_engine_composition():
    with Budget(10.0):
        grid = reference_grid()
        dt = diffusion.stable_dt(grid, 0.5)
        for profile in (Constant(2.0), PULSE):
            tr = run_simulation(make_config(protocol=profile))
            fluxes, surface, _ = diffusion.surface_history(grid, profile, 200.0, dt)
            assert np.array_equal(tr.cluster_current[:, 0], fluxes)
            assert np.array_equal(tr.surface_concentration[:, 0], surface)

        two = run_simulation(make_config(protocol=PULSE, clusters=[ClusterSpec("energy", count=2)]))
        half = FixedPulse(PULSE.high_level / 2, PULSE.rest_level / 2, PULSE.period, PULSE.duty)
        _, single, _ = diffusion.surface_history(grid, half, 200.0, dt)
        for j in range(2):
            np.testing.assert_allclose(two.surface_concentration[:, j], single, rtol=1e-12, atol=1e-12)


@pytest.mark.acceptance(10, "simulate is byte-deterministic")
def test_criterion_10_determinism(tmp_path):
    with Budget(10.0):
        cfg = str(CONFIGS / "hybrid_pack.yaml")
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
        assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "trace.csv").read_bytes()
        assert len(a) > 0
        assert a == (tmp_path / "b" / "trace.csv").read_bytes()
