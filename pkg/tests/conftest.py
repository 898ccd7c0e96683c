import pytest

from hybridpack.electrochem import PackComposition
from hybridpack.engine import ChemistryParams, ClusterSpec, PackConfig, SimulationSettings
from hybridpack.protocols import Constant
from hybridpack.scheduler import ScheduleConstraints

# thresholds no cluster can reach
RELAXED = ScheduleConstraints(resistance_threshold=10.0, temperature_threshold=1000.0)


def make_config(
    protocol=None,
    clusters=None,
    chemistries=None,
    constraints=RELAXED,
    f=0.0,
    **sim,
):
    sim.setdefault("total_time", 200.0)
    return PackConfig(
        composition=PackComposition(250.0, 150.0, f),
        chemistries=chemistries or {"energy": ChemistryParams()},
        clusters=clusters or [ClusterSpec("energy", count=1)],
        protocol=protocol if protocol is not None else Constant(2.0),
        constraints=constraints,
        simulation=SimulationSettings(**sim),
    )


@pytest.fixture
def config_factory():
    return make_config


# --------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion
# --------------------------------------------------------------------------

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    failed = call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception)
    prev = _acceptance.get(number, (title, "PASS"))[1]
    if call.when == "call" or failed:
        _acceptance[number] = (title, "FAIL" if failed or prev == "FAIL" else "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, outcome = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d} {outcome}  {title}")
