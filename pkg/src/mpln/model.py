"""Domain types for the matrix Poisson log-normal model.

Observations are p1 x p2 count matrices X_i. Conditional on a latent
d1 x d2 Gaussian matrix Z_i with Cov(vec Z_i) = tau2 * (Lambda2 kron Lambda1),
the entries of X_i are independent Poisson with means exp(mu + U1 Z_i U2').

Vectorization is column-major everywhere: ``vec(A)`` is ``A.flatten("F")``,
so ``vec(U1 Z U2') = (U2 kron U1) vec(Z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError

ORTHO_TOL = 1e-10
_CANON_TOL = 1e-12


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def vec(a):
    """Column-major vectorization of the trailing two axes."""
    a = np.asarray(a)
    if a.ndim == 2:
        return a.flatten(order="F")
    return np.swapaxes(a, -1, -2).reshape(a.shape[:-2] + (-1,))


def unvec(v, rows, cols):
    """Inverse of :func:`vec` for a single vector."""
    return np.asarray(v).reshape((cols, rows)).T


@dataclass(frozen=True)
class CountTensor:
    """n observations of p1 x p2 non-negative integer matrices."""

    data: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.data)
        if raw.ndim != 3:
            raise ValidationError(f"count data must be 3-dimensional (n, p1, p2), got shape {raw.shape}")
        if raw.size and not np.issubdtype(raw.dtype, np.integer):
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise ValidationError("counts must be integral")
        arr = raw.astype(np.int64)
        if np.any(arr < 0):
            raise ValidationError("counts must be non-negative")
        n, p1, p2 = arr.shape
        if n < 2:
            raise ValidationError(f"need at least 2 observations, got {n}")
        if p1 < 1 or p2 < 1:
            raise ValidationError(f"empty observation shape ({p1}, {p2})")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def p1(self):
        return self.data.shape[1]

    @property
    def p2(self):
        return self.data.shape[2]

    def transpose(self):
        """Swap the roles of rows and columns in every observation."""
        return CountTensor(np.swapaxes(self.data, 1, 2))

    def vectorized(self):
        """n x (p1*p2) matrix of column-major vectorized observations."""
        return vec(self.data)


def canonicalize(raw_lambda1, raw_lambda2, raw_tau2, p1, p2):
    """Rescale latent variances so that sum(lambda1) = p1 and sum(lambda2) = p2.

    Both scale factors are absorbed into tau2, so the Kronecker covariance
    tau2 * diag(lambda2) kron diag(lambda1) is unchanged.
    """
    l1 = np.asarray(raw_lambda1, dtype=float).ravel()
    l2 = np.asarray(raw_lambda2, dtype=float).ravel()
    tau2 = float(raw_tau2)
    if l1.size == 0 or l2.size == 0:
        raise ValidationError("lambda vectors must be non-empty")
    if np.any(~(l1 > 0)) or np.any(~(l2 > 0)) or not tau2 > 0:
        raise ValidationError("canonicalize requires strictly positive lambda1, lambda2 and tau2")
    c1 = l1.sum() / p1
    c2 = l2.sum() / p2
    # already canonical to rounding: leave untouched so the map is idempotent
    if abs(c1 - 1.0) <= _CANON_TOL:
        c1 = 1.0
    if abs(c2 - 1.0) <= _CANON_TOL:
        c2 = 1.0
    if c1 == 1.0 and c2 == 1.0:
        return l1, l2, tau2
    return l1 / c1, l2 / c2, tau2 * c1 * c2


@dataclass(frozen=True)
class PlnParams:
    """Parameters (mu, U1, U2, lambda1, lambda2, tau2) of the Poisson model.

    ``canonical`` marks parameters that satisfy the trace constraints
    sum(lambda1) = p1, sum(lambda2) = p2. Estimates carry ``canonical=False``.
    """

    mu: np.ndarray
    U1: np.ndarray
    U2: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    tau2: float
    canonical: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mu", _frozen(np.atleast_2d(self.mu)))
        object.__setattr__(self, "U1", _frozen(np.atleast_2d(self.U1)))
        object.__setattr__(self, "U2", _frozen(np.atleast_2d(self.U2)))
        object.__setattr__(self, "lambda1", _frozen(np.atleast_1d(self.lambda1)))
        object.__setattr__(self, "lambda2", _frozen(np.atleast_1d(self.lambda2)))
        object.__setattr__(self, "tau2", float(self.tau2))

    @classmethod
    def from_factors(cls, mu, U1, lambda1, U2, lambda2, tau2=1.0):
        """Build canonical parameters from arbitrary positive latent variances.

        Columns are reordered so that the lambdas are descending (ties keep
        their original order).
        """
        mu = np.atleast_2d(np.asarray(mu, dtype=float))
        U1 = np.atleast_2d(np.asarray(U1, dtype=float))
        U2 = np.atleast_2d(np.asarray(U2, dtype=float))
        p1, p2 = mu.shape
        l1, l2, t2 = canonicalize(lambda1, lambda2, tau2, p1, p2)
        o1 = np.argsort(-l1, kind="stable")
        o2 = np.argsort(-l2, kind="stable")
        return cls(mu, U1[:, o1], U2[:, o2], l1[o1], l2[o2], t2, canonical=True)

    @property
    def p1(self):
        return self.mu.shape[0]

    @property
    def p2(self):
        return self.mu.shape[1]

    @property
    def d1(self):
        return self.U1.shape[1]

    @property
    def d2(self):
        return self.U2.shape[1]

    @property
    def m(self):
        """vec(mu)."""
        return vec(self.mu)

    @property
    def U(self):
        """Loading matrix U2 kron U1 acting on vec(Z)."""
        return np.kron(self.U2, self.U1)

    @property
    def lam(self):
        """Diagonal of Lambda2 kron Lambda1."""
        return np.kron(self.lambda2, self.lambda1)

    @property
    def S1(self):
        """Population left overdispersion matrix tau2 U1 Lambda1 U1'."""
        return self.tau2 * (self.U1 * self.lambda1) @ self.U1.T

    @property
    def S2(self):
        return self.tau2 * (self.U2 * self.lambda2) @ self.U2.T


@dataclass(frozen=True)
class GaussianParams:
    """Low-rank matrix normal model: PlnParams plus isotropic noise variance."""

    base: PlnParams
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValidationError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class ZeroInflationMask:
    """Cellwise probabilities pi_jk in (0, 1] that a count is observed."""

    pi: np.ndarray

    def __post_init__(self):
        pi = _frozen(np.atleast_2d(self.pi))
        if np.any(~(pi > 0)) or np.any(pi > 1):
            raise ValidationError("zero-inflation probabilities must lie in (0, 1]")
        object.__setattr__(self, "pi", pi)


def _orthonormal_defect(U):
    return float(np.max(np.abs(U.T @ U - np.eye(U.shape[1])))) if U.size else 0.0


def validate(params):
    """Return a list of violated invariants of ``params`` (empty when valid)."""
    out = []
    p1, p2 = params.mu.shape
    for name, U, p in (("U1", params.U1, p1), ("U2", params.U2, p2)):
        if U.ndim != 2 or U.shape[0] != p:
            out.append(f"{name} has shape {U.shape}, expected ({p}, d)")
            continue
        if U.shape[1] > p:
            out.append(f"{name} has {U.shape[1]} columns, more than {p} rows")
        defect = _orthonormal_defect(U)
        if not defect <= ORTHO_TOL:
            out.append(f"{name} not orthonormal (max |U'U - I| = {defect:.3g})")
    for name, lam, U, p in (
        ("lambda1", params.lambda1, params.U1, p1),
        ("lambda2", params.lambda2, params.U2, p2),
    ):
        if lam.ndim != 1 or lam.shape[0] != U.shape[-1]:
            out.append(f"{name} has length {lam.shape}, expected {U.shape[-1]}")
            continue
        if not np.all(lam > 0):
            out.append(f"{name} not strictly positive (min {lam.min():.6g})")
        if np.any(np.diff(lam) > 0):
            out.append(f"{name} not descending ({lam.tolist()})")
        if params.canonical and abs(lam.sum() - p) > 1e-10 * p:
            out.append(f"{name} sums to {lam.sum():.17g}, canonical form requires {p}")
    if not params.tau2 > 0:
        out.append(f"tau2 not positive ({params.tau2})")
    if not np.all(np.isfinite(params.mu)):
        out.append("mu has non-finite entries")
    return out


def require_valid(params):
    problems = validate(params)
    if problems:
        raise ValidationError("invalid parameters: " + "; ".join(problems))


@dataclass(frozen=True)
class SPair:
    """Estimated left and right overdispersion matrices with diagnostics."""

    S1: np.ndarray
    S2: np.ndarray
    tau2: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreSet:
    """Centered MAP latent scores, one row of vec(Z_i) per observation."""

    scores: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray


@dataclass(frozen=True)
class AugmentationCurve:
    """Predictor-augmentation objective over k = 0..p and its minimizer."""

    side: str
    r: int
    s: int
    phi: np.ndarray
    mean_beta_sq: np.ndarray
    mean_eigenvalues: np.ndarray
    selected: int
    dropped: int = 0
