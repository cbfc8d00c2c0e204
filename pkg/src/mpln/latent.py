"""MAP estimation of the latent scores z = vec(Z) given an observation x = vec(X).

Regular model: the log conditional density

    l(z | x) = x'Uz - 1'exp(m + Uz) - z' Lambda^{-1} z / (2 tau2)

is strictly concave, so damped Newton converges to the unique maximizer.
The zero-inflated density is not concave and is maximized with Nelder-Mead,
starting from the regular-model solution. Additive constants are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import EstimationError, ValidationError
from .model import CountTensor, ScoreSet, vec
from .sampler import parallel_map

_EXP_MAX = 700.0


@dataclass(frozen=True)
class ScoreOptions:
    max_iter: int = 100
    grad_tol: float = 1e-8
    max_halvings: int = 30
    init: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iter < 1 or not self.grad_tol > 0 or self.max_halvings < 0:
            raise ValidationError("need max_iter >= 1, grad_tol > 0 and max_halvings >= 0")


@dataclass(frozen=True)
class NelderMeadOptions:
    spread: float = 0.1
    fatol: float = 1e-8
    max_evals: int = 2000


class _Design:
    """Vectorized model quantities reused across observations."""

    def __init__(self, params):
        self.U = params.U
        self.m = params.m
        lam = params.lam
        if np.any(~(lam > 0)):
            raise ValidationError("latent variances must be strictly positive")
        self.prec = 1.0 / (params.tau2 * lam)
        if not np.all(np.isfinite(self.m)):
            raise ValidationError("mu has non-finite entries")

    def linear(self, z):
        return self.m + self.U @ z

    def rate(self, z, strict=True):
        h = self.linear(z)
        if np.any(h > _EXP_MAX):
            if strict:
                j = int(np.argmax(h))
                raise EstimationError(f"exp overflow in component {j} (linear predictor {h[j]:.6g})")
            return None
        return np.exp(h)

    def penalty(self, z):
        return 0.5 * np.dot(z * self.prec, z)

    def value(self, z, x, strict=True):
        eh = self.rate(z, strict)
        if eh is None:
            return -np.inf
        return x @ (self.U @ z) - eh.sum() - self.penalty(z)

    def grad_hess(self, z, x):
        eh = self.rate(z)
        g = self.U.T @ (x - eh) - self.prec * z
        H = -(self.U.T * eh) @ self.U - np.diag(self.prec)
        return g, H

    def zi_value(self, z, x, logpi, log1mpi, strict=True):
        eh = self.rate(z, strict)
        if eh is None:
            return -np.inf
        zero = x == 0
        mix = np.logaddexp(logpi[zero] - eh[zero], log1mpi[zero]).sum()
        return mix + x @ (self.U @ z) - eh[~zero].sum() - self.penalty(z)


def _vector(x, design):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = vec(x)
    if x.shape != design.m.shape:
        raise ValidationError(f"observation has {x.size} entries, model expects {design.m.size}")
    return x


def _zvec(z, design):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim == 2:
        z = vec(z)
    if z.shape != design.prec.shape:
        raise ValidationError(f"latent vector has {z.size} entries, model expects {design.prec.size}")
    return z


def log_cond_density(z, x, params):
    """l(z | x) up to an additive constant (taken as 0)."""
    d = _Design(params)
    return float(d.value(_zvec(z, d), _vector(x, d)))


def grad_hess(z, x, params):
    """Gradient and Hessian of l(z | x) with respect to z."""
    d = _Design(params)
    return d.grad_hess(_zvec(z, d), _vector(x, d))


def _newton(design, x, opts):
    z = np.zeros(design.prec.shape) if opts.init is None else _zvec(opts.init, design).copy()
    f = design.value(z, x)
    for it in range(opts.max_iter + 1):
        g, H = design.grad_hess(z, x)
        if np.linalg.norm(g) <= opts.grad_tol:
            return z, True, it
        if it == opts.max_iter:
            break
        try:
            L = np.linalg.cholesky(-H)
            step = np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            step = np.linalg.solve(-H, g)
        t = 1.0
        gnorm = np.linalg.norm(g)
        slack = 64 * np.finfo(float).eps * (1.0 + abs(f))
        for _ in range(opts.max_halvings + 1):
            cand = z + t * step
            fc = design.value(cand, x, strict=False)
            if fc >= f:
                break
            # near the optimum f is flat to rounding; let the gradient decide
            if fc >= f - slack and np.linalg.norm(design.grad_hess(cand, x)[0]) < gnorm:
                break
            t *= 0.5
        else:
            return z, False, it
        if np.array_equal(cand, z):
            return z, False, it  # step below floating resolution
        z, f = cand, fc
    return z, False, opts.max_iter


def map_score(x, params, opts=None):
    """Maximize l(z | x) by damped Newton. Returns (z, converged, iterations)."""
    opts = opts or ScoreOptions()
    d = _Design(params)
    return _newton(d, _vector(x, d), opts)


def _pi_logs(pi, design):
    pi = np.asarray(pi, dtype=float)
    if pi.ndim == 2:
        pi = vec(pi)
    if pi.shape != design.m.shape:
        raise ValidationError(f"pi has {pi.size} entries, model expects {design.m.size}")
    if np.any(~(pi > 0)) or np.any(pi > 1):
        raise ValidationError("pi entries must lie in (0, 1]")
    with np.errstate(divide="ignore"):
        return np.log(pi), np.log1p(-pi)


def zi_log_cond_density(z, x, params, pi):
    """Zero-inflated l(z | x) up to an additive constant (taken as 0)."""
    d = _Design(params)
    logpi, log1mpi = _pi_logs(pi, d)
    return float(d.zi_value(_zvec(z, d), _vector(x, d), logpi, log1mpi))


def _nelder_mead(design, x, logpi, log1mpi, z0, nm):
    dim = z0.size
    simplex = np.vstack([z0, z0 + nm.spread * np.eye(dim)])

    def objective(z):
        return -design.zi_value(z, x, logpi, log1mpi, strict=False)

    res = minimize(
        objective,
        z0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "fatol": nm.fatol, "xatol": np.inf, "maxfev": nm.max_evals},
    )
    return res.x, bool(res.success), int(res.nfev)


def zi_map_score(x, params, pi, opts=None, nm=None):
    """Maximize the zero-inflated l(z | x) with Nelder-Mead.

    The simplex starts at the regular-model MAP with spread ``nm.spread`` per
    coordinate. Returns (z, converged, evaluations).
    """
    nm = nm or NelderMeadOptions()
    d = _Design(params)
    x = _vector(x, d)
    logpi, log1mpi = _pi_logs(pi, d)
    z0, _, _ = _newton(d, x, opts or ScoreOptions())
    return _nelder_mead(d, x, logpi, log1mpi, z0, nm)


def center_scores(z, converged):
    """Subtract the column means of the converged rows from every row."""
    converged = np.asarray(converged, dtype=bool)
    if not converged.any():
        raise EstimationError("no observation converged")
    return z - z[converged].mean(axis=0)


def score_sample(data, params, opts=None, pi=None, nm=None, workers=1):
    """Centered MAP scores for every observation of a CountTensor.

    With ``pi`` (a p1 x p2 matrix) the zero-inflated density is maximized.
    Non-converged observations are flagged and left out of the centering mean.
    """
    if not isinstance(data, CountTensor):
        data = CountTensor(data)
    if (data.p1, data.p2) != (params.p1, params.p2):
        raise ValidationError(f"data shape ({data.p1}, {data.p2}) does not match parameters ({params.p1}, {params.p2})")
    opts = opts or ScoreOptions()
    nm = nm or NelderMeadOptions()
    d = _Design(params)
    xs = data.vectorized().astype(float)
    logs = _pi_logs(pi, d) if pi is not None else None

    def one(i):
        z, ok, it = _newton(d, xs[i], opts)
        if logs is not None:
            z, ok, it = _nelder_mead(d, xs[i], logs[0], logs[1], z, nm)
        return z, ok, it

    out = parallel_map(one, range(data.n), workers)
    z = np.array([o[0] for o in out])
    converged = np.array([o[1] for o in out])
    iters = np.array([o[2] for o in out])
    return ScoreSet(center_scores(z, converged), converged, iters)


def gaussian_score(x, params):
    """Linear scores U'(x - m) of the matrix normal model (rows of x if 2-D batch)."""
    base = params.base if hasattr(params, "base") else params
    U, m = base.U, base.m
    x = np.asarray(x, dtype=float)
    if x.ndim == 3:
        x = vec(x)
    elif x.ndim == 2 and x.shape == base.mu.shape:
        x = vec(x)
    return (x - m) @ U
