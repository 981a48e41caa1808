import os
import subprocess
import sys

import numpy as np
import pytest

from bridged import kernels
from bridged.data import gen_flow_network
from bridged.numerics import make_rng, squared_exp_kernel

py = kernels.get_backend("python")
try:
    cy = kernels.get_backend("cython")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("python", "cython")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_pure_python_env_var():
    env = dict(os.environ, BRIDGED_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import bridged.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_ext
@pytest.mark.parametrize("seed", range(3))
def test_max_flow_backends_agree(seed):
    net = gen_flow_network(20, seed=seed, n_rep=1).net
    args = (20, net.tail, net.head, np.ascontiguousarray(net.capacity), 0, 19, 1e-12)
    fp, vp, ap = py.max_flow(*args)
    fc, vc, ac = cy.max_flow(*args)
    np.testing.assert_array_equal(np.asarray(fp), np.asarray(fc))
    assert vp == vc and ap == ac


@needs_ext
def test_smo_backends_agree():
    rng = make_rng(4)
    X = rng.standard_normal((40, 2))
    y = np.where(X[:, 0] > 0, 1.0, -1.0)
    K = np.ascontiguousarray(squared_exp_kernel(X, tau=1.0, b=1.0))
    a1, a2 = np.zeros(40), np.zeros(40)
    it1, v1, _ = py.smo_solve(K, y, 2.0, a1, 1e-10, 10000)
    it2, v2, _ = cy.smo_solve(K, y, 2.0, a2, 1e-10, 10000)
    assert it1 == it2
    np.testing.assert_allclose(a1, a2, rtol=1e-10, atol=1e-12)


@needs_ext
@pytest.mark.parametrize("c", [0.0, 1.5, 6.0])
def test_pg_backends_same_distribution(c):
    from scipy.stats import ks_2samp

    a = py.pg_sample(np.full(4000, c), make_rng(1))
    b = cy.pg_sample(np.full(4000, c), make_rng(2))
    assert ks_2samp(a, b).pvalue > 1e-3
