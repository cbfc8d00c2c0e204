"""Seeded simulation from the Poisson, zero-inflated and Gaussian models.

Every observation i draws from its own substream derived from (seed, i), so
the output does not depend on how observations are split across threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .exceptions import SamplingError, ValidationError
from .model import CountTensor, require_valid

MAX_MEAN = 1e12


@dataclass(frozen=True)
class SeededStream:
    """Root of a tree of independent, reproducible random substreams."""

    seed: int
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

    def child(self, *keys):
        return SeededStream(self.seed, self.path + tuple(int(k) for k in keys))

    def generator(self, *keys):
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path + tuple(int(k) for k in keys))
        return np.random.Generator(np.random.PCG64(ss))


def as_stream(rng):
    if isinstance(rng, SeededStream):
        return rng
    return SeededStream(int(rng))


def _chunks(n, workers):
    workers = max(1, min(int(workers), n))
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def parallel_map(fn, items, workers=1):
    """Map ``fn`` over ``items`` preserving order; threads only when workers > 1."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _per_observation(n, draw, stream, workers):
    def block(idx):
        return [draw(stream.generator(i), i) for i in idx]

    parts = parallel_map(block, _chunks(n, workers), workers)
    return [x for part in parts for x in part]


def _draw_latent(gen, params):
    g = gen.standard_normal((params.d1, params.d2))
    return np.sqrt(params.tau2) * np.sqrt(params.lambda1)[:, None] * g * np.sqrt(params.lambda2)[None, :]


def _draw_counts(gen, params, i):
    z = _draw_latent(gen, params)
    eta = params.mu + params.U1 @ z @ params.U2.T
    with np.errstate(over="ignore"):
        mean = np.exp(eta)
    bad = ~(mean <= MAX_MEAN)
    if np.any(bad):
        j, k = np.argwhere(bad)[0]
        raise SamplingError(f"Poisson mean {mean[j, k]:.3g} exceeds {MAX_MEAN:g} at observation {i}, cell ({j}, {k})")
    return gen.poisson(mean), z


def sample_latent(params, n, rng, workers=1):
    """n x d1 x d2 latent matrices with Cov(vec Z) = tau2 (Lambda2 kron Lambda1)."""
    require_valid(params)
    stream = as_stream(rng)
    out = _per_observation(n, lambda g, i: _draw_latent(g, params), stream, workers)
    return np.stack(out)


def sample_pln(params, n, rng, workers=1):
    """Draw n count matrices; returns (CountTensor, latent n x d1 x d2 array)."""
    require_valid(params)
    stream = as_stream(rng)
    out = _per_observation(n, lambda g, i: _draw_counts(g, params, i), stream, workers)
    x = np.stack([o[0] for o in out])
    z = np.stack([o[1] for o in out])
    return CountTensor(x), z


def sample_zipln(params, mask, n, rng, workers=1, return_latent=False):
    """Zero-inflated draws x = b * y with b_jk ~ Bernoulli(pi_jk).

    Each observation uses the same substream as :func:`sample_pln`, with the
    Bernoulli uniforms drawn after the Poisson counts, so pi = 1 reproduces
    ``sample_pln`` exactly.
    """
    require_valid(params)
    pi = np.asarray(mask.pi, dtype=float)
    if pi.shape != params.mu.shape:
        raise ValidationError(f"mask shape {pi.shape} does not match mu shape {params.mu.shape}")
    stream = as_stream(rng)

    def draw(gen, i):
        y, z = _draw_counts(gen, params, i)
        b = gen.random(pi.shape) < pi
        return y * b, z

    out = _per_observation(n, draw, stream, workers)
    x = CountTensor(np.stack([o[0] for o in out]))
    if return_latent:
        return x, np.stack([o[1] for o in out])
    return x


def sample_gaussian(params, n, rng, workers=1):
    """Real-valued draws X = mu + U1 Z U2' + eps with eps iid N(0, sigma2)."""
    base = params.base
    require_valid(base)
    stream = as_stream(rng)
    sd = np.sqrt(params.sigma2)

    def draw(gen, i):
        z = _draw_latent(gen, base)
        return base.mu + base.U1 @ z @ base.U2.T + sd * gen.standard_normal(base.mu.shape), z

    out = _per_observation(n, draw, stream, workers)
    return np.stack([o[0] for o in out]), np.stack([o[1] for o in out])


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"Poisson mean must be positive, got {self.lam}")

    def draw(self, gen, shape):
        return gen.poisson(self.lam, shape)


@dataclass(frozen=True)
class NegBin:
    """Number of successes before the r-th failure; mean r p / (1 - p)."""

    r: float
    p: float

    def __post_init__(self):
        if not self.r > 0 or not 0 < self.p < 1:
            raise ValidationError(f"NegBin requires r > 0 and 0 < p < 1, got r={self.r}, p={self.p}")

    def draw(self, gen, shape):
        rate = gen.gamma(self.r, self.p / (1 - self.p), shape)
        return gen.poisson(rate)


@dataclass(frozen=True)
class Binomial:
    m: int
    q: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1 or not 0 <= self.q <= 1:
            raise ValidationError(f"Binomial requires integer m >= 1 and 0 <= q <= 1, got m={self.m}, q={self.q}")

    def draw(self, gen, shape):
        return (gen.random((int(self.m),) + tuple(shape)) < self.q).sum(axis=0)


def sample_iid(dist, n, p1, p2, rng, workers=1):
    """n x p1 x p2 tensor with all entries iid from ``dist``."""
    stream = as_stream(rng)
    out = _per_observation(n, lambda g, i: dist.draw(g, (p1, p2)), stream, workers)
    return CountTensor(np.stack(out))


def random_orthogonal(p, gen):
    """Haar-distributed p x p orthogonal matrix (QR of a Gaussian matrix, sign-fixed)."""
    q, r = np.linalg.qr(gen.standard_normal((p, p)))
    return q * np.sign(np.diag(r))
