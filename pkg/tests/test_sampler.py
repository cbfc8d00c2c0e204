import numpy as np
import pytest

from mpln import PlnParams, SeededStream, ZeroInflationMask, sample_iid, sample_pln, sample_zipln
from mpln.exceptions import SamplingError
from mpln.sampler import Binomial, NegBin, Poisson, random_orthogonal, sample_latent


def _params(mu=0.0, tau2=1.0, l1=(1.0,), l2=(1.0,), p1=1, p2=1):
    U1 = np.eye(p1)[:, : len(l1)]
    U2 = np.eye(p2)[:, : len(l2)]
    return PlnParams(np.full((p1, p2), mu), U1, U2, np.array(l1), np.array(l2), tau2, canonical=False)


def test_latent_identity_is_standard_normal():
    z = sample_latent(_params(p1=2, p2=2, l1=(1, 1), l2=(1, 1)), 10000, 1)
    v = z.reshape(len(z), -1).var(axis=0)
    assert np.all(np.abs(v - 1) < 3 * np.sqrt(2 / 10000))


def test_latent_covariance_kronecker():
    p = _params(p1=2, p2=1, l1=(1.5, 0.5), l2=(1.0,))
    n = 20000
    z = sample_latent(p, n, 2)
    flat = np.stack([zi.flatten(order="F") for zi in z])
    emp = np.cov(flat.T, bias=True)
    target = p.tau2 * np.kron(np.diag(p.lambda2), np.diag(p.lambda1))
    assert np.abs(emp - target).max() < 4 * np.sqrt(2 / n)


def test_determinism_and_thread_invariance():
    p = PlnParams.from_factors(np.zeros((3, 2)), np.eye(3)[:, :1], [3.0], np.eye(2), [1.0, 1.0], 0.5)
    a, za = sample_pln(p, 50, 7)
    b, zb = sample_pln(p, 50, SeededStream(7), workers=4)
    np.testing.assert_array_equal(a.data, b.data)
    np.testing.assert_array_equal(za, zb)
    c, _ = sample_pln(p, 50, 8)
    assert not np.array_equal(a.data, c.data)


def test_near_degenerate_latent_is_poisson3():
    p = _params(mu=np.log(3), tau2=1e-12, p1=2, p2=2, l1=(1, 1), l2=(1, 1))
    x, _ = sample_pln(p, 5000, 3)
    assert 2.8 <= x.data.mean(axis=0).min() and x.data.mean(axis=0).max() <= 3.2


def test_cell_mean_matches_lognormal_mean():
    p = PlnParams.from_factors(np.full((2, 2), 0.2), np.eye(2), [1.2, 0.8], np.eye(2)[:, :1], [2.0], 0.4)
    n = 50000
    x, _ = sample_pln(p, n, 11)
    s1 = np.diag(p.S1)[:, None] / p.tau2
    s2 = np.diag(p.S2)[None, :] / p.tau2
    target = np.exp(p.mu + 0.5 * p.tau2 * s1 * s2)
    se = x.data.std(axis=0) / np.sqrt(n)
    assert np.all(np.abs(x.data.mean(axis=0) - target) < 3 * se)


def test_zipln_pi_one_matches_pln():
    p = _params(p1=2, p2=3, l1=(1,), l2=(1,))
    a, _ = sample_pln(p, 40, 5)
    b = sample_zipln(p, ZeroInflationMask(np.ones((2, 3))), 40, 5)
    np.testing.assert_array_equal(a.data, b.data)


def test_zipln_zero_fraction():
    p = _params(mu=np.log(2), tau2=1e-12, p1=1, p2=1)
    n = 20000
    x = sample_zipln(p, ZeroInflationMask(np.full((1, 1), 0.5)), n, 6)
    q = 0.5 + 0.5 * np.exp(-2)
    assert abs((x.data == 0).mean() - q) < 3 * np.sqrt(q * (1 - q) / n)
    again = sample_zipln(p, ZeroInflationMask(np.full((1, 1), 0.5)), n, 6)
    np.testing.assert_array_equal(x.data, again.data)


def test_mean_overflow_is_reported():
    p = _params(mu=40.0)
    with pytest.raises(SamplingError, match="observation 0"):
        sample_pln(p, 3, 0)


@pytest.mark.parametrize(
    "dist, mean",
    [(Poisson(1.0), 1.0), (NegBin(2, 0.5), 2.0), (Binomial(4, 0.5), 2.0)],
)
def test_iid_means(dist, mean):
    x = sample_iid(dist, 4000, 2, 2, 9).data
    se = x.std() / np.sqrt(x.size)
    assert abs(x.mean() - mean) < 3 * se
    if isinstance(dist, Binomial):
        assert x.min() >= 0 and x.max() <= 4


def test_random_orthogonal():
    q = random_orthogonal(6, np.random.default_rng(0))
    np.testing.assert_allclose(q.T @ q, np.eye(6), atol=1e-12)
