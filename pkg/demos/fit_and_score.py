"""Simulate matrix counts with a rank-one row structure, fit by moments,
and compare the estimated loadings and scores with the truth."""
import numpy as np

import mpln
from mpln.spectral import principal_angle

rng = np.random.default_rng(1)
p1, p2 = 8, 4
W = np.linalg.qr(rng.standard_normal((p2, p2)))[0]
truth = mpln.PlnParams.from_factors(
    mu=np.full((p1, p2), 0.5),
    U1=np.full((p1, 1), 1 / np.sqrt(p1)),
    lambda1=[p1],
    U2=W[:, :2],
    lambda2=[1.5, 0.5],
    tau2=0.5,
)
x, z = mpln.sample_pln(truth, 3000, rng=11)
print(f"counts: n={x.n}, {x.p1}x{x.p2}, mean {x.data.mean():.2f}, zeros {100 * (x.data == 0).mean():.0f}%")

res = mpln.fit(x, d1=1, d2=2)
est = res.params
print("tau2      true %.3f  est %.3f" % (truth.tau2, est.tau2))
print("lambda2   true %s  est %s" % (np.round(truth.lambda2, 3), np.round(est.lambda2, 3)))
print("angle(U1) %.3f rad, angle(U2) %.3f rad" % (principal_angle(est.U1, truth.U1), principal_angle(est.U2, truth.U2)))
print("|mu_hat - mu|_F = %.3f" % np.linalg.norm(est.mu - truth.mu))

scores = mpln.score_sample(x, est)
r = [abs(np.corrcoef(scores.scores[:, j], z.reshape(len(z), -1, order="F")[:, j])[0, 1]) for j in range(2)]
print("score/latent correlation per component:", np.round(r, 2), f"({scores.converged.mean():.0%} converged)")
