import numpy as np
import pytest

from geotrack.liecore import Family, GroupElement, GroupSpec, standard_basis
from geotrack.reference import build_reference_plan
from geotrack.systems import preset_system
from geotrack.tracking import FeedbackContext

SO3 = GroupSpec(Family.SO, 3)
SU2 = GroupSpec(Family.SU, 2)
SU3 = GroupSpec(Family.SU, 3)
U2 = GroupSpec(Family.U, 2)

PRESET_NAMES = ["so3-e1e2", "su2-f3f1", "su3-gellmann-2gen"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def systems():
    return {name: preset_system(name) for name in PRESET_NAMES}


@pytest.fixture(scope="session")
def plans(systems):
    out = {}
    for name, sys in systems.items():
        out[name] = build_reference_plan(sys, GroupElement.identity(sys.spec), 1.0)
    return out


@pytest.fixture(scope="session")
def contexts(systems, plans):
    return {name: FeedbackContext(systems[name], plans[name]) for name in systems}


@pytest.fixture(scope="session")
def bases():
    return {spec: standard_basis(spec) for spec in (SO3, SU2, SU3, U2)}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, format_result
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(format_result(k))
