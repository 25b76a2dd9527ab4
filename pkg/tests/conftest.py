import numpy as np
import pytest

from bselanczos import gen_pentadiag, gen_random_definite


@pytest.fixture(scope="session")
def penta200():
    return gen_pentadiag(200)


@pytest.fixture(scope="session")
def penta1000():
    return gen_pentadiag(1000)


def true_residuals(op, res):
    """Absolute residual norms of the normalized right/left eigenvectors."""
    lam = res.values_full()
    X = res.right_vectors()
    Y = res.left_vectors()
    rr = np.linalg.norm(op.apply_stacked(X) - X * lam, axis=0)
    rl = np.linalg.norm(op.apply_stacked_adjoint(Y) - Y * lam, axis=0)
    return rr, rl


@pytest.fixture(scope="session")
def rand16():
    return gen_random_definite(16, seed=3, margin=0.5)
