import numpy as np
import pytest

from goalsens import Advection1D, Advection1DConfig, Advection2D, EngineConfig
from goalsens.oracle import oracle_maps


@pytest.fixture(scope="session")
def upwind():
    return Advection1D(Advection1DConfig())


@pytest.fixture(scope="session")
def upwind_oracle(upwind):
    f = upwind.default_functional()
    return oracle_maps(upwind, f, EngineConfig().levels(upwind.n_steps))


@pytest.fixture(scope="session")
def short_upwind():
    """Short horizon: the propagator is well conditioned so full-rank runs are exact."""
    return Advection1D(Advection1DConfig(n_steps=20))


@pytest.fixture(scope="session")
def small_upwind():
    return Advection1D(Advection1DConfig(n_cells=21, n_steps=30))


@pytest.fixture(scope="session")
def small_nvd():
    return Advection1D(Advection1DConfig(n_cells=21, n_steps=30, scheme="nvd"))


@pytest.fixture(scope="session")
def grid2d():
    return Advection2D()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def record_criterion(request):
    """Append ``(number, passed, detail)`` to the acceptance summary."""
    rows = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, passed, detail):
        rows.append((number, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(rows):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
