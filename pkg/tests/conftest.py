import numpy as np
import pytest

from netid.covariates import CovariateSpec
from netid.equilibrium import DgpSpec, simulate


@pytest.fixture(scope="session")
def small_full_draw():
    """A converged Full-model draw at n=30 with a spread-out support (sparse enough to be interesting)."""
    for seed in range(200):
        spec = DgpSpec.full(n=30, gamma0=1.0, beta0=-1.0, z_support=np.arange(0.0, 6.0),
                            covariate=CovariateSpec.jaccard(), seed=seed)
        draw = simulate(spec)
        if draw.converged:
            return spec, draw
    raise RuntimeError("no converged draw")


@pytest.fixture(scope="session")
def cf_draw():
    for seed in range(200):
        spec = DgpSpec.full(n=12, gamma0=0.5, beta0=-0.8, z_support=np.arange(0.0, 4.0),
                            covariate=CovariateSpec.common_friends(), seed=seed)
        draw = simulate(spec)
        if draw.converged and len(draw.network.edges()) > 5:
            return spec, draw
    raise RuntimeError("no converged draw")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Log a PASS/FAIL line for an acceptance criterion, then assert it."""
    def _record(name: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
