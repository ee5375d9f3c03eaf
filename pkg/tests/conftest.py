import numpy as np
import pytest

from floquet_well import Truncation, enumerate_static_levels, reference_well, solve_floquet

V0 = 15.0


@pytest.fixture(scope="session")
def static_well():
    return reference_well()


@pytest.fixture(scope="session")
def static_levels(static_well):
    return enumerate_static_levels(static_well)


@pytest.fixture(scope="session")
def driven_well():
    return reference_well(V1_ratio=0.2, omega_ratio=0.62)


@pytest.fixture(scope="session")
def driven_roots(driven_well, static_levels):
    """(more stable, less stable) roots at V1 = 0.2 V0, omega = 0.62 V0, N = 2."""
    trunc = Truncation(N=2)
    roots = [solve_floquet(driven_well, trunc, lv.energy) for lv in static_levels]
    return tuple(sorted(roots, key=lambda r: -r.epsilon.imag))


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or report.when != "call":
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_"):
        number = int(name.split("_")[2])
        prev = _ACCEPTANCE.get(number, True)
        _ACCEPTANCE[number] = prev and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict = "PASS" if _ACCEPTANCE[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}")
