import os
import subprocess
import sys

import numpy as np
import pytest

from ggmcomposite import _accel, kernels
from ggmcomposite.gauss import empirical_covariance
from ggmcomposite.graphs import Graph


def _instance(seed, p=9, n=25):
    r = np.random.default_rng(seed)
    S = empirical_covariance(r.standard_normal((n, p))).ridged(1e-6)
    adj = Graph.from_adjacency(np.triu(r.random((p, p)) < 0.35, k=1)).adjacency()
    return S, adj


@pytest.mark.parametrize("seed", range(3))
def test_ips_backends_agree(seed):
    S, adj = _instance(seed)
    a = kernels.ips_fit_numba(S, adj, S.copy(), 1e-10, 500)
    b = kernels.ips_fit_numpy(S, adj, S.copy(), 1e-10, 500)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-9, atol=1e-10)
    assert a[1] == b[1]


@pytest.mark.parametrize("seed", range(3))
def test_glasso_backends_agree(seed):
    S, _ = _instance(seed)
    rho = 0.1
    a = kernels.glasso_bcd_numba(S, rho, S.copy(), np.zeros_like(S), 1e-6, 200, 1e-10, 1000)
    b = kernels.glasso_bcd_numpy(S, rho, S.copy(), np.zeros_like(S), 1e-6, 200, 1e-10, 1000)
    np.testing.assert_allclose(a[0], b[0], rtol=1e-8, atol=1e-10)


def test_lasso_backends_agree():
    S, _ = _instance(4)
    Q, c = S[1:, 1:].copy(), S[1:, 0].copy()
    b1, b2 = np.zeros(8), np.zeros(8)
    kernels.lasso_cd_numba(Q, c, 0.05, b1, 1e-12, 10_000)
    kernels.lasso_cd_numpy(Q, c, 0.05, b2, 1e-12, 10_000)
    np.testing.assert_allclose(b1, b2, atol=1e-12)
    # subgradient optimality of the result
    g = Q @ b1 - c
    on = b1 != 0
    np.testing.assert_allclose(g[on], -0.05 * np.sign(b1[on]), atol=1e-9)
    assert np.all(np.abs(g[~on]) <= 0.05 + 1e-9)


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, GGMCOMPOSITE_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", "import ggmcomposite as g; print(g.backend_name())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_backend_binding():
    expected = kernels.ips_fit_numba if _accel.USE_NUMBA else kernels.ips_fit_numpy
    assert kernels.ips_fit is expected
