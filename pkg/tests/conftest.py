import pytest

from normground.params import ProblemParams
from normground.radial import RadialGrid
from normground.scalar import unit_ground_state

# pinned instances used across the suite
MIXED = dict(N=3, p=2.5, q=4, r1=1.5, r2=1.5, mu1=1, mu2=1, beta=1, a1=2.0, a2=0.5)
SUPER = dict(N=3, p=4, q=4, r1=1.9, r2=1.9, mu1=1, mu2=1, beta=1, a1=2.5, a2=2.5)
DIM4 = dict(N=4, p=3.5, q=3.5, r1=1.75, r2=1.75, mu1=1, mu2=1, beta=0.5, a1=1.0, a2=1.0)
DIM4_R_MAX = 1.5


@pytest.fixture(scope="session")
def grid3():
    return RadialGrid(3)


@pytest.fixture(scope="session")
def gs4(grid3):
    return unit_ground_state(3, 4.0, grid3)


@pytest.fixture(scope="session")
def gs25(grid3):
    return unit_ground_state(3, 2.5, grid3)


@pytest.fixture
def mixed_params():
    return ProblemParams(**MIXED)


@pytest.fixture
def super_params():
    return ProblemParams(**SUPER)


ACCEPTANCE_LINES = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
