import numpy as np
import pytest

from mpln import CountTensor, GaussianParams, PlnParams, estimate_dim, phi_from_spectrum, sample_iid, sample_pln
from mpln.dimension import augment
from mpln.sampler import Poisson, sample_gaussian


def test_augment_shapes_and_content():
    x = CountTensor(np.random.default_rng(0).poisson(3, (400, 3, 4)))
    a = augment(x, "left", 2, np.random.default_rng(1))
    assert a.data.shape == (400, 5, 4)
    np.testing.assert_array_equal(a.data[:, :3], x.data)
    block = a.data[:, 3:]
    assert abs(block.mean() - 1) < 3 * np.sqrt(1 / block.size)
    b = augment(x, "right", 2, np.random.default_rng(1))
    assert b.data.shape == (400, 3, 6)
    np.testing.assert_array_equal(b.data[:, :, :4], x.data)


def test_phi_worked_example():
    phi, k = phi_from_spectrum([2, 0, 0], [0, 0.64, 0.36], 2)
    np.testing.assert_array_equal(phi, [2 / 3, 0, 0.64])
    assert k == 1


def test_phi_degenerate():
    phi, k = phi_from_spectrum(np.zeros(4), np.zeros(4), 3)
    assert not phi.any() and k == 0


def test_phi_vs_naive():
    rng = np.random.default_rng(5)
    for _ in range(50):
        p = int(rng.integers(1, 8))
        lam = np.sort(rng.exponential(1, p + 2))[::-1]
        b = rng.uniform(0, 1, p + 2)
        phi, k = phi_from_spectrum(lam, b, p)
        ref = []
        for kk in range(p + 1):
            ref.append(sum(b[:kk]) + lam[kk] / (1 + sum(lam[: kk + 1])))
        np.testing.assert_allclose(phi, ref, rtol=1e-14, atol=1e-15)
        assert k == int(np.argmin(ref))
        assert len(phi) == p + 1


def test_right_side_is_left_of_transpose():
    p = PlnParams.from_factors(np.zeros((4, 3)), np.eye(4)[:, :1], [4.0], np.eye(3), [1, 1, 1], 0.8)
    x, _ = sample_pln(p, 300, 2)
    a = estimate_dim(x, "right", rng=3)
    b = estimate_dim(x.transpose(), "left", rng=3)
    np.testing.assert_array_equal(a.phi, b.phi)
    c = estimate_dim(x, "right", rng=3, workers=4)
    np.testing.assert_array_equal(a.phi, c.phi)


def test_rank_one_recovery():
    p1, p2 = 10, 5
    hits = 0
    for t in range(20):
        W = np.linalg.qr(np.random.default_rng(t).standard_normal((p2, p2)))[0][:, :5]
        params = PlnParams.from_factors(np.zeros((p1, p2)), np.full((p1, 1), 1 / np.sqrt(p1)), [p1], W, np.ones(5), 1.0)
        x, _ = sample_pln(params, 500, 1000 + t)
        hits += estimate_dim(x, "left", rng=t).selected == 1
    assert hits >= 19


def test_pure_noise_zero():
    hits = 0
    for t in range(20):
        x = sample_iid(Poisson(1.0), 2000, 10, 5, t)
        hits += estimate_dim(x, "left", rng=t).selected == 0
    assert hits >= 16


def test_gaussian_baseline_rank_one():
    p1, p2 = 10, 5
    base = PlnParams.from_factors(np.zeros((p1, p2)), np.full((p1, 1), 1 / np.sqrt(p1)), [p1], np.eye(p2), np.ones(p2), 1.0)
    hits = 0
    for t in range(20):
        x, _ = sample_gaussian(GaussianParams(base, 1.0), 500, t)
        hits += estimate_dim(x, "left", estimator="gaussian", rng=t).selected == 1
    assert hits >= 18
