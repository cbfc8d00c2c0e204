"""End-to-end parameter estimation: moments, tau2, loadings."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import PlnParams, SPair
from .moments import FactorialMoments, estimate_mu, estimate_pi, estimate_S, estimate_tau2, factorial_moments
from .spectral import extract_loadings


@dataclass(frozen=True)
class FitResult:
    params: PlnParams
    spair: SPair
    mu_valid: np.ndarray
    pi: object  # PiEstimate or None
    spectrum1: np.ndarray
    spectrum2: np.ndarray
    floored1: np.ndarray
    floored2: np.ndarray

    @property
    def diagnostics(self):
        d = self.spair.diagnostics
        out = {
            "skipped_S1": [list(t) for t in d["left"]["skipped"]],
            "skipped_S2": [list(t) for t in d["right"]["skipped"]],
            "floored_lambda1": np.flatnonzero(self.floored1).tolist(),
            "floored_lambda2": np.flatnonzero(self.floored2).tolist(),
            "invalid_mu": np.argwhere(~self.mu_valid).tolist(),
        }
        if self.pi is not None:
            out["invalid_pi"] = np.argwhere(~self.pi.valid).tolist()
        return out


def fit_spair(data, pi=None):
    """S1, S2 and tau2 from a CountTensor or FactorialMoments.

    With ``pi`` given the diagonals use the zero-inflated ratios.
    """
    if not isinstance(data, FactorialMoments):
        data = factorial_moments(data)
    S1, diag1 = estimate_S(data, "left", pi=pi)
    S2, diag2 = estimate_S(data, "right", pi=pi)
    tau2 = estimate_tau2(S1, S2)
    return SPair(S1, S2, tau2, {"left": diag1, "right": diag2})


def fit(data, d1, d2, zero_inflated=False, pi_clamp=None):
    """Method-of-moments fit of the (zero-inflated) matrix Poisson model.

    With ``zero_inflated`` the inclusion probabilities are estimated first,
    optionally clamped into ``pi_clamp``, and used in the S diagonals.
    Estimated lambdas are not renormalized, so ``params.canonical`` is False.
    """
    mom = factorial_moments(data)
    pi_est = None
    pi = None
    if zero_inflated:
        pi_est = estimate_pi(mom, threshold=pi_clamp)
        pi = pi_est.value
    spair = fit_spair(mom, pi=pi)
    tau2 = spair.tau2
    mu, mu_valid = estimate_mu(mom, zi=zero_inflated)
    load = extract_loadings(spair, d1, d2)
    params = PlnParams(mu, load.U1, load.U2, load.lambda1, load.lambda2, tau2, canonical=False)
    return FitResult(
        params=params,
        spair=spair,
        mu_valid=mu_valid,
        pi=pi_est,
        spectrum1=load.spectrum1 * tau2,
        spectrum2=load.spectrum2 * tau2,
        floored1=load.floored1,
        floored2=load.floored2,
    )
