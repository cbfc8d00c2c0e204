"""How much does dropping counts at random hurt the regular estimator,
and how much of that does the zero-inflated estimator recover?"""
import numpy as np

from mpln import ZeroInflationMask, estimate_mu, estimate_pi, factorial_moments, sample_zipln
from mpln.bench import zi_design

params = zi_design("full")
print(" pi   |mu_R - mu|  |mu_Z - mu|  mean pi_hat")
for pi in (1.0, 0.75, 0.5, 0.25):
    x = sample_zipln(params, ZeroInflationMask(np.full(params.mu.shape, pi)), 5000, rng=int(100 * pi))
    mom = factorial_moments(x)
    mu_r, _ = estimate_mu(mom)
    mu_z, _ = estimate_mu(mom, zi=True)
    print(
        f"{pi:5.2f} {np.linalg.norm(mu_r - params.mu):11.3f} {np.linalg.norm(mu_z - params.mu):12.3f}"
        f" {estimate_pi(mom).raw.mean():12.3f}"
    )
