import sys

import numpy as np
import pytest

from frontlab.medium import PeriodicMedium, ReactionSpec, homogeneous_medium


@pytest.fixture(scope="session")
def cubic():
    return ReactionSpec.bistable(0.25)


@pytest.fixture(scope="session")
def homog2d(cubic):
    return homogeneous_medium(cubic, 2)


@pytest.fixture(scope="session")
def homog1d(cubic):
    return homogeneous_medium(cubic, 1)


@pytest.fixture(scope="session")
def periodic_alpha():
    return PeriodicMedium.from_catalog(2, ReactionSpec.periodic_bistable(0.25, 0.1))


@pytest.fixture(scope="session")
def shear():
    return PeriodicMedium.from_catalog(2, ReactionSpec.bistable(0.25), "identity", "shear",
                                       drift_params={"beta": 2.0})


@pytest.fixture(scope="session")
def planar(cubic):
    from frontlab.fronts import planar_front_shooting
    return planar_front_shooting(cubic)


C_CUBIC = np.sqrt(2.0) * 0.25


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
