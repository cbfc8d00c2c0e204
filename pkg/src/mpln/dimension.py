"""Latent dimension estimation by predictor augmentation.

Pure Poisson(1) noise rows are appended to every observation. The
overdispersion matrix of pure Poisson noise is zero, so eigenvectors of the
augmented S that belong to the signal carry little weight on the appended
coordinates, while null eigenvectors spread into them. The objective

    phi(k) = sum_{j<=k} ||beta_j||^2 + lambda_{k+1} / (1 + sum_{j<=k+1} lambda_j)

combines that leakage with a scaled scree term; the estimate is its argmin.
"""
from __future__ import annotations

import numpy as np

from .exceptions import EstimationError, ValidationError
from .model import AugmentationCurve, CountTensor
from .moments import estimate_S
from .sampler import as_stream, parallel_map
from .spectral import eigen_sym, gaussian_cov

ESTIMATORS = ("poisson", "gaussian")


def _raw(data):
    return data.data if isinstance(data, CountTensor) else np.asarray(data)


def augment(data, side, r, gen):
    """Append r rows (``side='left'``) or columns (``'right'``) of Poisson(1) noise.

    The right side is handled by transposing, augmenting rows, and
    transposing back, so both sides consume the generator identically.
    """
    if r < 1:
        raise ValidationError(f"number of augmented rows must be >= 1, got {r}")
    x = _raw(data)
    if side == "right":
        out = np.swapaxes(augment(np.swapaxes(x, 1, 2), "left", r, gen), 1, 2)
        return CountTensor(out) if isinstance(data, CountTensor) else out
    if side != "left":
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    noise = gen.poisson(1.0, (x.shape[0], r, x.shape[2])).astype(x.dtype)
    out = np.concatenate([x, noise], axis=1)
    return CountTensor(out) if isinstance(data, CountTensor) else out


def phi_from_spectrum(eigenvalues, beta_sq, p):
    """Objective values phi(0..p) and the smallest minimizing k.

    ``beta_sq[j]`` is the squared norm of the noise block of the (j+1)-th
    eigenvector; the empty sum at k = 0 is zero.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    b = np.asarray(beta_sq, dtype=float)
    if lam.size < p + 1 or b.size < p:
        raise ValidationError(f"need at least {p + 1} eigenvalues and {p} beta norms, got {lam.size} and {b.size}")
    cum_b = np.concatenate([[0.0], np.cumsum(b[:p])])
    cum_lam = np.cumsum(lam[: p + 1])
    phi = cum_b + lam[: p + 1] / (1.0 + cum_lam)
    return phi, int(np.argmin(phi))


def _replicate_spectrum(x, r, gen, estimator):
    aug = augment(x, "left", r, gen)
    if estimator == "poisson":
        M, _ = estimate_S(CountTensor(aug), "left")
    else:
        M = gaussian_cov(aug, "left")
    vals, vecs = eigen_sym(M)
    p = x.shape[1]
    return vals, np.sum(vecs[p:, :] ** 2, axis=0)


def estimate_dim(data, side="left", r=1, s=5, estimator="poisson", rng=0, workers=1):
    """Average the augmented spectra over s replicates and minimize phi.

    Replicate t draws its noise from substream t of ``rng``. Replicates whose
    S matrix cannot be formed are dropped and counted in ``dropped``.
    """
    if s < 1:
        raise ValidationError(f"number of replicates must be >= 1, got {s}")
    if estimator not in ESTIMATORS:
        raise ValidationError(f"estimator must be one of {ESTIMATORS}, got {estimator!r}")
    x = _raw(data)
    if side == "right":
        x = np.swapaxes(x, 1, 2)
    elif side != "left":
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")
    stream = as_stream(rng)
    p = x.shape[1]

    def one(t):
        try:
            return _replicate_spectrum(x, r, stream.generator(t), estimator)
        except EstimationError:
            return None

    results = parallel_map(one, range(s), workers)
    kept = [res for res in results if res is not None]
    if not kept:
        raise EstimationError(f"all {s} augmentation replicates failed")
    mean_vals = np.mean([k[0] for k in kept], axis=0)
    mean_beta = np.mean([k[1] for k in kept], axis=0)
    phi, k = phi_from_spectrum(mean_vals, mean_beta, p)
    return AugmentationCurve(
        side=side,
        r=int(r),
        s=int(s),
        phi=phi,
        mean_beta_sq=mean_beta,
        mean_eigenvalues=mean_vals,
        selected=k,
        dropped=s - len(kept),
    )
