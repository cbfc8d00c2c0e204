"""Method-of-moments estimators built from sample factorial moments.

All sample moments are sums of integer monomials, accumulated exactly in
integer (or exactly representable floating point) arithmetic before the
single division by n, so results do not depend on summation order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EstimationError, ValidationError
from .model import CountTensor

SIDES = ("left", "right")


@dataclass(frozen=True)
class FactorialMoments:
    """Cellwise factorial moments and within-column / within-row cross moments.

    ``cross_left[l]`` is the p1 x p1 matrix of mean(x_jl x_kl) and
    ``cross_right[l]`` the p2 x p2 matrix of mean(x_lj x_lk).
    """

    m1: np.ndarray
    m2: np.ndarray
    m3: np.ndarray
    cross_left: np.ndarray
    cross_right: np.ndarray

    @property
    def shape(self):
        return self.m1.shape

    def transpose(self):
        return FactorialMoments(self.m1.T, self.m2.T, self.m3.T, self.cross_right, self.cross_left)


def _cross(x):
    """Mean products within each column: out[l, j, k] = mean_i x_ijl x_ikl."""
    n = x.shape[0]
    big = float(x.max(initial=0))
    cols = np.moveaxis(x, 2, 0)  # (p2, n, p1)
    if n * big * big < 2.0**52:
        c = cols.astype(float)
        s = np.matmul(np.swapaxes(c, 1, 2), c)
    else:
        s = np.einsum("lij,lik->ljk", cols, cols).astype(float)
    return s / n


def factorial_moments(data):
    """Sample factorial moments m1, m2, m3 and cross moments of a CountTensor."""
    x = data.data if isinstance(data, CountTensor) else np.asarray(data, dtype=np.int64)
    n = x.shape[0]
    if n < 1:
        raise ValidationError("need at least one observation")
    f1 = x
    f2 = x * (x - 1)
    f3 = f2 * (x - 2)
    return FactorialMoments(
        m1=f1.sum(axis=0) / n,
        m2=f2.sum(axis=0) / n,
        m3=f3.sum(axis=0) / n,
        cross_left=_cross(x),
        cross_right=_cross(np.swapaxes(x, 1, 2)),
    )


def _as_moments(data):
    if isinstance(data, FactorialMoments):
        return data
    return factorial_moments(data)


def _check_side(side):
    if side not in SIDES:
        raise ValidationError(f"side must be 'left' or 'right', got {side!r}")


def estimate_S(data, side="left", pi=None):
    """Overdispersion matrix S1 (``side='left'``) or S2 (``side='right'``).

    Each entry averages log moment ratios over the columns (rows for S2)
    where all the required moments are strictly positive. With ``pi`` given
    (a p1 x p2 array of inclusion probabilities) the diagonal ratios are
    multiplied by pi as in the zero-inflated model.

    Returns ``(S, diagnostics)``; diagnostics holds the skipped (j, k, l)
    triples with j <= k and the number of valid terms per entry.
    """
    _check_side(side)
    mom = _as_moments(data)
    if side == "right":
        mom = mom.transpose()
        if pi is not None:
            pi = np.asarray(pi, dtype=float).T
    m1, m2, cross = mom.m1, mom.m2, mom.cross_left
    p, q = m1.shape

    # ratio[j, k, l] for j != k; diagonal replaced below
    denom = m1.T[:, :, None] * m1.T[:, None, :]  # (q, p, p)
    num = cross.copy()
    diag_num = m2.T if pi is None else np.asarray(pi, dtype=float).T * m2.T
    idx = np.arange(p)
    num[:, idx, idx] = diag_num
    denom[:, idx, idx] = m1.T**2
    valid = (num > 0) & (denom > 0)
    terms = np.zeros_like(num)
    np.log(num / np.where(valid, denom, 1.0), out=terms, where=valid)
    count = valid.sum(axis=0)
    if np.any(count == 0):
        j, k = np.argwhere(count == 0)[0]
        which = "S1" if side == "left" else "S2"
        raise EstimationError(f"{which} entry ({j}, {k}) has no column with strictly positive moments")
    S = terms.sum(axis=0) / count
    skipped = [(int(j), int(k), int(l)) for l, j, k in np.argwhere(~valid) if j <= k]
    return S, {"skipped": skipped, "n_valid": count}


def estimate_tau2(S1, S2):
    """tau2 = tr(S1) / (2 p1) + tr(S2) / (2 p2)."""
    S1 = np.asarray(S1, dtype=float)
    S2 = np.asarray(S2, dtype=float)
    t = np.trace(S1) / (2 * S1.shape[0]) + np.trace(S2) / (2 * S2.shape[0])
    if not t > 0:
        raise EstimationError(f"non-positive tau2 ({t:.6g})")
    return float(t)


def _safe_log(a):
    a = np.asarray(a, dtype=float)
    out = np.full(a.shape, np.nan)
    np.log(a, out=out, where=a > 0)
    return out


def estimate_mu(data, zi=False):
    """Cellwise mean parameter estimate and validity flags.

    Regular model: 2 log m1 - log(m2) / 2. Zero-inflated model:
    -5/2 log m1 + 4 log m2 - 3/2 log m3. Cells with a non-positive
    required moment are NaN and flagged invalid.
    """
    mom = _as_moments(data)
    l1, l2 = _safe_log(mom.m1), _safe_log(mom.m2)
    if zi:
        mu = -2.5 * l1 + 4.0 * l2 - 1.5 * _safe_log(mom.m3)
    else:
        mu = 2.0 * l1 - 0.5 * l2
    valid = np.isfinite(mu)
    return mu, valid


@dataclass(frozen=True)
class PiEstimate:
    """Raw and (optionally) clamped zero-inflation estimates."""

    raw: np.ndarray
    value: np.ndarray
    valid: np.ndarray


def estimate_pi(data, threshold=None):
    """pi_jk = m1^3 m3 / m2^3 per cell, optionally clamped into ``threshold``."""
    mom = _as_moments(data)
    m1, m2, m3 = mom.m1, mom.m2, mom.m3
    valid = m2 > 0
    raw = np.full(m1.shape, np.nan)
    np.divide(m1**3 * m3, m2**3, out=raw, where=valid)
    value = raw
    if threshold is not None:
        lo, hi = threshold
        if not lo <= hi:
            raise ValidationError(f"invalid clamp interval {threshold}")
        value = np.where(valid, np.clip(raw, lo, hi), np.nan)
    return PiEstimate(raw=raw, value=value, valid=valid)
