import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from heterotic import models
from heterotic.algebroid import MetricPair, trivial_bundle
from heterotic.hermitian import canonical_volume

settings.register_profile(
    "repo", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def hopf_entry():
    return models.hopf(w=1.0, a=1.0)


@pytest.fixture(scope="session")
def hopf_pair(hopf_entry):
    return MetricPair(hopf_entry.omega, trivial_bundle(hopf_entry.J)), canonical_volume(hopf_entry.psi)


@pytest.fixture(scope="session")
def hopf_su2_pair(hopf_entry):
    return MetricPair(hopf_entry.omega, models.hopf_su2_bundle(hopf_entry)), canonical_volume(hopf_entry.psi)


@pytest.fixture(scope="session")
def torus4_entry():
    return models.torus(2)


@pytest.fixture(scope="session")
def torus6_entry():
    return models.torus(3, scales=[1.0, 1.5, 0.7])


@pytest.fixture(scope="session")
def h3_entry():
    return models.h3()


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one summary line per acceptance criterion."""

    def record(number: int, title: str, passed: bool, elapsed: float, limit: float | None, detail: str = "") -> None:
        budget = f" [{elapsed:.2f}s / {limit:g}s]" if limit is not None else f" [{elapsed:.2f}s]"
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}{budget}" + (f" {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
