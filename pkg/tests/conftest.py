import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpcert.config import load_config
from gpcert.lmi import bisect_delta
from gpcert.model_core import GainBand, PolytopeModel, build_error_polytope

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def scalar_lag(a: float) -> PolytopeModel:
    return PolytopeModel((np.array([[-a]]),), [1.0], [1.0])


@pytest.fixture(scope="session")
def poly_bench() -> PolytopeModel:
    return build_error_polytope(10.0, 20.0, GainBand(1.0, 10.0))


@pytest.fixture(scope="session")
def cert_bench(poly_bench):
    return bisect_delta(poly_bench)


@pytest.fixture(scope="session")
def poly_pneumatic_printed() -> PolytopeModel:
    poly, _ = load_config("pneumatic_polytope").polytope()
    return poly
