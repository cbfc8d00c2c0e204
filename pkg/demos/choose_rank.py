# Predictor augmentation on both sides of a (1, 3)-rank design, and on pure noise.
import numpy as np

import mpln

p1, p2 = 10, 5
W = np.linalg.qr(np.random.default_rng(3).standard_normal((p2, p2)))[0]
params = mpln.PlnParams.from_factors(
    np.zeros((p1, p2)), np.full((p1, 1), p1**-0.5), [p1], W[:, :3], [1.0, 1.0, 1.0], 1.0
)
x, _ = mpln.sample_pln(params, 800, rng=4)
noise = mpln.sample_iid(mpln.sampler.Poisson(1.0), 800, p1, p2, rng=5)

for label, data in (("signal", x), ("noise", noise)):
    for side in ("left", "right"):
        curve = mpln.estimate_dim(data, side, r=1, s=5, rng=6)
        phis = " ".join(f"{v:.3f}" for v in curve.phi)
        print(f"{label:6s} {side:5s} selected {curve.selected}   phi: {phis}")
