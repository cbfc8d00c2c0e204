"""Symmetric eigendecomposition, loading extraction and the Gaussian baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .exceptions import EstimationError, ValidationError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
FLOOR_REL = 1e-8


@numba.njit(cache=True)
def _jacobi(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    norm = np.sqrt(np.sum(a * a))
    sweeps = 0
    for sweeps in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if np.sqrt(off) <= tol * norm or sweeps == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    return np.diag(a).copy(), v, sweeps


def eigen_sym(A):
    """Eigenvalues (descending) and orthonormal eigenvectors of a symmetric matrix.

    Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
    1e-12 * ||A||_F. Each eigenvector is signed so that its largest-magnitude
    entry is positive; equal eigenvalues keep their diagonal order.
    """
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"eigen_sym needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    scale = np.abs(A).max(initial=0.0)
    if np.abs(A - A.T).max(initial=0.0) > 1e-8 * max(scale, 1e-300):
        raise ValidationError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    vals, vecs, _ = _jacobi(A, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vals, vecs * signs


@dataclass(frozen=True)
class Loadings:
    """Leading eigenvectors and (floored) eigenvalues of S1 / tau2 and S2 / tau2."""

    U1: np.ndarray
    U2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    floored1: np.ndarray
    floored2: np.ndarray
    spectrum1: np.ndarray
    spectrum2: np.ndarray


def _leading(S, tau2, d):
    vals, vecs = eigen_sym(S / tau2)
    eps = FLOOR_REL * max(1.0, vals[0])
    lam = vals[:d].copy()
    floored = lam < eps
    lam[floored] = eps
    return vecs[:, :d], lam, floored, vals


def extract_loadings(spair, d1, d2):
    """Loadings from an SPair: leading d eigenpairs of S / tau2 on each side."""
    p1, p2 = spair.S1.shape[0], spair.S2.shape[0]
    if not (1 <= d1 <= p1 and 1 <= d2 <= p2):
        raise ValidationError(f"latent dimensions ({d1}, {d2}) must lie in [1, {p1}] x [1, {p2}]")
    if not spair.tau2 > 0:
        raise EstimationError(f"tau2 must be positive, got {spair.tau2}")
    U1, l1, f1, v1 = _leading(spair.S1, spair.tau2, d1)
    U2, l2, f2, v2 = _leading(spair.S2, spair.tau2, d2)
    return Loadings(U1, U2, l1, l2, f1, f2, v1, v2)


def gaussian_cov(data, side="left"):
    """Sample left (or right) covariance (1/p2) mean_i (X_i - Xbar)(X_i - Xbar)'."""
    x = np.asarray(getattr(data, "data", data), dtype=float)
    if side == "right":
        x = np.swapaxes(x, 1, 2)
    elif side != "left":
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    n, _, q = x.shape
    if n < 2:
        raise ValidationError("need at least 2 observations")
    c = x - x.mean(axis=0)
    cov = np.einsum("ijk,ilk->jl", c, c) / (n * q)
    return 0.5 * (cov + cov.T)


def projector_distance(U_est, U_true):
    """Frobenius distance between the orthogonal projectors onto two column spaces."""
    return float(np.linalg.norm(U_est @ U_est.T - U_true @ U_true.T))


def principal_angle(U_est, U_true):
    """Largest principal angle (radians) between two column spaces."""
    q1, _ = np.linalg.qr(U_est)
    q2, _ = np.linalg.qr(U_true)
    sv = np.linalg.svd(q1.T @ q2, compute_uv=False)
    return float(np.arccos(np.clip(sv.min(), -1.0, 1.0)))
