import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mesoscale.geometry import AmbientDomain, CloudSpec, generate_cloud
from mesoscale.kernels import Bump, SourceTerm

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def free():
    return AmbientDomain.free_space()


@pytest.fixture(scope="session")
def bump_source():
    return SourceTerm((Bump((0.05, -0.03, 0.02), 0.2, 1.0, 4),))


@pytest.fixture(scope="session")
def lattice8():
    return generate_cloud(CloudSpec("lattice", radius=1e-3, spacing=0.5, n_per_axis=2))


def random_sphere_points(rng, n, center, radius):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return np.asarray(center) + radius * v


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" in report.nodeid and name.startswith("test_criterion_"):
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda s: int(s.split("_")[2])):
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        number, label = name.split("_")[2], " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {number} ({label}): {verdict}")
