import pytest

from thermofractal.maps import chebyshev, doubling, manneville_pomeau, piecewise_linear, tent


@pytest.fixture
def dbl():
    return doubling()


@pytest.fixture
def lin3():
    # two full linear branches, breakpoint 1/3
    return piecewise_linear([1 / 3])


@pytest.fixture
def cheb():
    return chebyshev()


@pytest.fixture
def mp():
    return manneville_pomeau(0.5)


@pytest.fixture
def tent2():
    return tent()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
