import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_model_pair(rng, dim, with_number=False):
    """Random Hamiltonian and (optionally) a commuting number-like observable."""
    from seaqt.operators import random_unitary

    u = random_unitary(dim, rng)
    h = (u * np.sort(rng.uniform(0, 2, dim))) @ u.conj().T
    extra = []
    if with_number:
        extra = [(u * rng.integers(0, 3, dim).astype(float)) @ u.conj().T]
    return h, extra


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip("abc:")), s)):
            terminalreporter.write_line(line)
