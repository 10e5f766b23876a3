import pytest

from tperiods.ffcore import FqCtx
from tperiods.localfield import LocalFieldCfg
from tperiods.models import default_cfg_for_q


_ACCEPTANCE_LINES = []


def record_acceptance(name: str, passed: bool, detail: str = ""):
    _ACCEPTANCE_LINES.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE_LINES:
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{name}: {mark}" + (f"  ({detail})" if detail else ""))


@pytest.fixture(scope="session")
def f2():
    return FqCtx(2)


@pytest.fixture(scope="session")
def f3():
    return FqCtx(3)


@pytest.fixture(scope="session")
def cfg_q2():
    """theta = z^-1 over F_2, precision 150."""
    return default_cfg_for_q(2, prec=150)


@pytest.fixture(scope="session")
def cfg_q3():
    """Ramified z^2 = -1/theta over F_3, precision 150."""
    return default_cfg_for_q(3, prec=150)


@pytest.fixture(scope="session")
def cfg_ram2():
    """Ramified z^2 = 1/theta over F_2 (the lattice example field)."""
    return LocalFieldCfg(FqCtx(2), 1, {-2: 1}, 150)
