import numpy as np
import pytest
import scipy.linalg

from mdlan.baselines import RpcaConfig, rpca_ialm, svt
from mdlan.bench import SyntheticSpec, gen_synthetic
from mdlan.core import nrmse


def nuclear_prox_oracle(M, tau):
    # independent LAPACK driver (gesvd rather than numpy's gesdd)
    U, S, Vt = scipy.linalg.svd(M, lapack_driver="gesvd")
    k = min(M.shape)
    return U[:, :k] @ np.diag(np.maximum(S - tau, 0)) @ Vt[:k]


def test_svt_matches_full_svd_oracle(rng):
    for _ in range(20):
        M = rng.normal(size=(5, 5))
        tau = rng.uniform(0, 2)
        X, _ = svt(M, tau)
        assert np.max(np.abs(X - nuclear_prox_oracle(M, tau))) <= 1e-10


def test_svt_is_prox(rng):
    M = rng.normal(size=(5, 5))
    tau = 0.8
    X, _ = svt(M, tau)
    f = lambda Z: tau * np.linalg.svd(Z, compute_uv=False).sum() + 0.5 * np.sum((Z - M) ** 2)  # noqa
    base = f(X)
    for _ in range(200):
        assert f(X + 1e-3 * rng.normal(size=(5, 5))) >= base - 1e-12


def test_svt_returns_kept_values():
    X, s = svt(np.diag([3.0, 1.0, 0.2]), 0.5)
    np.testing.assert_allclose(s, [2.5, 0.5])
    np.testing.assert_allclose(X, np.diag([2.5, 0.5, 0.0]), atol=1e-15)


def test_zero_input():
    res = rpca_ialm(np.zeros((4, 3)))
    assert res.converged and not res.X.any() and not res.E.any()


def test_rank1_exact(rng):
    Y = np.outer(rng.normal(size=30), rng.normal(size=20))
    assert nrmse(Y, rpca_ialm(Y).X) <= 1e-4


def test_huge_gamma_puts_everything_in_x(rng):
    Y = rng.normal(size=(8, 6))
    res = rpca_ialm(Y, RpcaConfig(gamma=1e6))
    assert not res.E.any()
    assert nrmse(Y, res.X) <= 1e-6


def test_default_gamma_and_history():
    _, _, Y = gen_synthetic(SyntheticSpec(50, 20, 2, 0.1, 0))
    res = rpca_ialm(Y)
    assert res.converged
    assert res.history[0].theta == pytest.approx(1 / np.sqrt(50))
    assert res.history[-1].feasibility <= 1e-7
    mu1 = res.history[0].mu
    assert all(r.mu == pytest.approx(mu1 * 1.5 ** (r.iter - 1)) for r in res.history)


def test_config_validation():
    with pytest.raises(ValueError):
        RpcaConfig(gamma=0)
    with pytest.raises(ValueError):
        RpcaConfig(rho=0.9)
