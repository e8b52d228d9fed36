import pytest

from dualbaxter.deform import DeformContext
from dualbaxter.dilog import GammaContext
from dualbaxter.polyalg import TraceData
from dualbaxter.spectrum import build_point

GAMMA = 0.9


@pytest.fixture(scope="session")
def ctx():
    return GammaContext(GAMMA)


@pytest.fixture(scope="session")
def point_one(ctx):
    return build_point(ctx, TraceData.from_free((-5.0,)), TraceData.from_free((-6.0,)))


@pytest.fixture(scope="session")
def point_two(ctx):
    return build_point(ctx, TraceData.from_free((-5.5,)), TraceData.from_free((-6.5,)))


@pytest.fixture(scope="session")
def diagonal_pair(point_one):
    return DeformContext.from_points(point_one, point_one)


@pytest.fixture(scope="session")
def mixed_pair(point_one, point_two):
    return DeformContext.from_points(point_one, point_two)


@pytest.fixture(scope="session")
def genus_two_pair(ctx):
    a = build_point(ctx, TraceData.from_free((-9.0, 9.0)), TraceData.from_free((-10.0, 8.0)))
    b = build_point(ctx, TraceData.from_free((-9.5, 9.5)), TraceData.from_free((-10.5, 8.5)))
    return DeformContext.from_points(a, b)


_CRITERIA = {}


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion (printed at session end)."""
    def record(label, passed, detail=""):
        line = f"{label}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
        _CRITERIA[request.node.nodeid] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA.values():
            terminalreporter.write_line(line)
