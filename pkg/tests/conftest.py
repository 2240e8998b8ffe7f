import numpy as np
import pytest

from poincare_kernel.geometry import FlatTorus, GenusTwoSurface, group_stats
from poincare_kernel.quadrature import octagon_rule, torus_rule
from poincare_kernel.quotient import PoincareFamily, ThetaFamily, build_basis


@pytest.fixture(scope="session")
def flat():
    return FlatTorus(1j)


@pytest.fixture(scope="session")
def disc():
    return GenusTwoSurface()


@pytest.fixture(scope="session")
def disc_stats(disc):
    return group_stats(disc)


@pytest.fixture(scope="session")
def theta_bases(flat):
    quad = torus_rule(1j, 64)
    check = torus_rule(1j, 48)
    return {N: build_basis(ThetaFamily(flat, N), quad, check=check) for N in (1, 2, 3, 5)}


@pytest.fixture(scope="session")
def small_disc_basis(disc):
    """Weight-4 basis on a modest rule; cheap enough for unit tests."""
    fam = PoincareFamily(disc, 4, tolerance=1e-8)
    return build_basis(fam, octagon_rule(12))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def record(number: int, ok: bool, message: str):
        lines.append((number, f"{'PASS' if ok else 'FAIL'} criterion {number}: {message}"))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
