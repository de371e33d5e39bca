import pytest

from balayage.grid import build_circle, build_polar_sphere, build_sphere_latlong

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def circle64():
    return build_circle(64)


@pytest.fixture(scope="session")
def sphere_small():
    return build_sphere_latlong(16, 32)


@pytest.fixture(scope="session")
def polar512():
    return build_polar_sphere(512, 2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
