import numpy as np
import pytest

from manifold_descent import SolverConfig, builtin


@pytest.fixture
def sphere():
    return builtin("sphere")


@pytest.fixture
def paraboloid():
    return builtin("paraboloid")


@pytest.fixture
def config():
    # Lipschitz bound 2 is exact for the benchmark cost (Hessian 2I).
    return SolverConfig(lipschitz_f=2.0)


def random_full_rank_jacobian(rng, n, k, min_rcond=1e-6):
    """Random n-by-k matrix with comfortably full column rank."""
    while True:
        jac = rng.standard_normal((n, k))
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] / sv[0] > min_rcond:
            return jac
