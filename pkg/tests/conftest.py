import numpy as np
import pytest

from rollingmaps.geometry import builtin_manifold


@pytest.fixture(scope="session")
def E2():
    return builtin_manifold("euclidean", n=2)


@pytest.fixture(scope="session")
def E3():
    return builtin_manifold("euclidean", n=3)


@pytest.fixture(scope="session")
def S2():
    return builtin_manifold("sphere_stereo", n=2)


@pytest.fixture(scope="session")
def S3():
    return builtin_manifold("sphere_stereo", n=3)


@pytest.fixture(scope="session")
def H2():
    return builtin_manifold("hyperbolic_halfplane")


@pytest.fixture(scope="session")
def SU2():
    return builtin_manifold("su2")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_rotation(rng, n):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
