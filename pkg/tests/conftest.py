import numpy as np
import pytest
from hypothesis import settings

from prethermal import DriveParams, InitialConditionSpec, SpinLattice, build_geometry, init_polarized, init_random

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def geom4():
    return build_geometry(4)


@pytest.fixture
def drive():
    return DriveParams(omega=2.86, g=0.25, h=0.1)


@pytest.fixture
def random4(geom4):
    return init_random(geom4, seed=11)


@pytest.fixture
def polarized6():
    return init_polarized(build_geometry(6), InitialConditionSpec(W=0.1, delta=0.01, seed=3))


def uniform_lattice(L, vector):
    """Every spin equal to ``vector``."""
    geom = build_geometry(L)
    spins = np.tile(np.asarray(vector, dtype=float)[:, None], (1, geom.N))
    return SpinLattice(geom, spins)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def report(request):
    """``report(number, passed, detail)`` prints and stores one criterion line."""
    lines = request.config.stash[_ACCEPTANCE]

    def _report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
