"""Shared fixtures and seeded matrix generators for the test suite."""
import numpy as np
import pytest

from hessform import Mode
from hessform.linalg import inf_norm

# 3x3 pair whose discrete-time controller form is provably infeasible even
# though the matrix itself is similar to a nonnegative Hessenberg matrix
INFEASIBLE_DT_A = np.array([[0.0, 0.0, 14.0],
                            [0.0, 6.0, 0.0],
                            [15.0, 4.0, 6.0]])
INFEASIBLE_DT_B = np.array([1.0, 1.0, 0.0])

# planar projections of the first ten iterates of the pair above, plus limit
INFEASIBLE_DT_POINTS = [
    (5.0000000e-01, 0.0000000e+00),
    (2.4000000e-01, 7.6000000e-01),
    (8.1818182e-02, 3.1363636e-01),
    (3.0379747e-02, 6.9789030e-01),
    (9.9401749e-03, 4.5724804e-01),
    (3.4601522e-03, 6.2515018e-01),
    (1.1464765e-03, 5.1553759e-01),
    (3.9146805e-04, 5.8886733e-01),
    (1.3090841e-04, 5.4039031e-01),
    (4.4372480e-05, 5.7255958e-01),
]
INFEASIBLE_DT_LIMIT = (0.0, 0.55973)


def random_metzler(rng, n):
    """Off-diagonal uniform [-5, 5] clipped at zero, diagonal uniform [-5, 5]."""
    A = rng.uniform(-5.0, 5.0, size=(n, n))
    off = ~np.eye(n, dtype=bool)
    A[off] = np.maximum(A[off], 0.0)
    return A


def random_nonneg(rng, n):
    A = random_metzler(rng, n)
    np.fill_diagonal(A, np.maximum(np.diag(A), 0.0))
    return A


def random_rank_one_shift(rng, n):
    """Member of the family c (u v^T - s I) with u, v > 0."""
    u = rng.uniform(0.1, 2.0, size=n)
    v = rng.uniform(0.1, 2.0, size=n)
    s = rng.uniform(0.0, float(np.min(u * v)))
    c = rng.uniform(0.1, 3.0)
    return c * (np.outer(u, v) - s * np.eye(n))


def random_irreducible_nonneg(rng, n):
    """Strictly positive entries, hence irreducible."""
    return rng.uniform(0.05, 5.0, size=(n, n))


def random_psd_nonneg(rng, n):
    """B^T B with B >= 0: nonnegative, symmetric, spectrum in R_{>=0}."""
    B = rng.uniform(0.0, 1.0, size=(n, n))
    return B.T @ B


def structure_scale(A):
    return max(1.0, inf_norm(A))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[acceptance] {name}: {report.outcome.upper()}", flush=True)
