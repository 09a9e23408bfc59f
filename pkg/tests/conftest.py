import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from curvemix import BasisSpec, CurveSet, MixtureParams  # noqa: E402


def random_instance(rng, n=6, m=8, K=3, p=2, shared=True):
    """Small random CurveSet, design stack and valid mixture parameters."""
    if shared:
        x = np.sort(rng.uniform(0, 1, m))
    else:
        x = np.sort(rng.uniform(0, 1, (n, m)), axis=1)
    y = rng.normal(size=(n, m))
    data = CurveSet(x, y)
    basis = BasisSpec.polynomial(p)
    X = np.asarray(data.designs(basis))
    pi = rng.dirichlet(np.ones(K))
    beta = rng.normal(size=(K, p + 1))
    sigma2 = rng.uniform(0.3, 2.0, K)
    return data, X, MixtureParams(pi, beta, sigma2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
