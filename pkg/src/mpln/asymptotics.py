"""Scalar (p1 = p2 = 1) asymptotics of the diagonal overdispersion estimate.

For x | z ~ Po(exp(mu + sigma z)), z ~ N(0, 1), the j-th factorial moment is
m_j = exp(j mu + j^2 sigma2 / 2), and sqrt(n) (log(m_n2 / m_n1^2) - sigma2)
is asymptotically normal with a variance that is a rational function of
m_1..m_4.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .sampler import as_stream, parallel_map


def pln_factorial_moment(j, mu, sigma2):
    """E{x (x-1) ... (x-j+1)} = exp(j mu + j^2 sigma2 / 2)."""
    if j < 1:
        raise ValidationError(f"moment order must be >= 1, got {j}")
    return float(np.exp(j * mu + 0.5 * j * j * sigma2))


def _m(mu, sigma2):
    return [pln_factorial_moment(j, mu, sigma2) for j in (1, 2, 3, 4)]


def asym_var_s11(mu, sigma2):
    """Limiting variance of sqrt(n) (s_n - s) in the scalar model."""
    if sigma2 < 0:
        raise ValidationError(f"sigma2 must be non-negative, got {sigma2}")
    m1, m2, m3, m4 = _m(mu, sigma2)
    return -4 / m1 + 4 * m2 / m1**2 - 4 * m3 / (m1 * m2) + 2 / m2 + 4 * m3 / m2**2 + m4 / m2**2 - 1


def raw_from_factorial(m1, m2, m3, m4):
    """Raw moments t_j = E(x^j) from factorial moments."""
    return m1, m1 + m2, m1 + 3 * m2 + m3, m1 + 7 * m2 + 6 * m3 + m4


def moment_covariance(mu, sigma2):
    """Covariance of (x, x(x-1)), assembled from raw moments."""
    m1, m2, m3, m4 = _m(mu, sigma2)
    t1, t2, t3, t4 = raw_from_factorial(m1, m2, m3, m4)
    # x(x-1) = x^2 - x
    var_x = t2 - t1**2
    cov = (t3 - t2) - t1 * m2
    var_f2 = (t4 - 2 * t3 + t2) - m2**2
    return np.array([[var_x, cov], [cov, var_f2]])


def delta_method_var(mu, sigma2):
    """g' Sigma g with g = (-2/m1, 1/m2), the gradient of log(a2 / a1^2)."""
    m1, m2, _, _ = _m(mu, sigma2)
    g = np.array([-2.0 / m1, 1.0 / m2])
    return float(g @ moment_covariance(mu, sigma2) @ g)


@dataclass(frozen=True)
class McResult:
    empirical: float
    formula: float
    ratio: float
    dropped: int
    reps: int


def mc_verify(mu, sigma2, n, reps, rng=0, workers=1):
    """Monte-Carlo variance of sqrt(n) (s_n - s) against the closed form.

    Replicates with m_n2 = 0 (no count above 1) are dropped and counted.
    """
    if n < 100 or reps < 100:
        raise ValidationError("mc_verify needs n >= 100 and reps >= 100")
    stream = as_stream(rng)
    s_true = np.log(pln_factorial_moment(2, mu, sigma2) / pln_factorial_moment(1, mu, sigma2) ** 2)
    sd = np.sqrt(sigma2)

    def one(t):
        gen = stream.generator(t)
        x = gen.poisson(np.exp(mu + sd * gen.standard_normal(n)))
        m1 = x.sum() / n
        m2 = (x * (x - 1)).sum() / n
        if m2 <= 0 or m1 <= 0:
            return None
        return np.sqrt(n) * (np.log(m2 / m1**2) - s_true)

    h = [v for v in parallel_map(one, range(reps), workers) if v is not None]
    emp = float(np.var(h, ddof=1))
    formula = float(asym_var_s11(mu, sigma2))
    return McResult(emp, formula, emp / formula, reps - len(h), reps)
