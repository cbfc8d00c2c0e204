"""Simulation studies: dimension recovery and zero-inflated estimator accuracy.

``table1`` counts how often predictor augmentation recovers (d1, d2) under
two rank designs; ``table2`` (full rank) and ``table3`` (low rank) report
average Frobenius distances of regular (R) and zero-inflated (Z) estimates
from the truth across inclusion probabilities pi.

Every replicate draws from its own substream, so results are identical for
any number of worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dimension import estimate_dim
from .exceptions import EstimationError
from .model import PlnParams, ZeroInflationMask
from .moments import estimate_mu, estimate_pi, factorial_moments
from .pipeline import fit_spair
from .sampler import SeededStream, parallel_map, random_orthogonal, sample_pln, sample_zipln

DIMS = {"low": (10, 5), "high": (50, 25)}
SIGNAL_RANK = 5
PI_LEVELS = (1.0, 0.75, 0.5, 0.25)
REPS = {"desk": {"table1": 100, "table2": 100, "table3": 100}, "full": {"table1": 200, "table2": 1000, "table3": 1000}}
N_LIST = {"table1": (100, 500), "table2": (500, 1000), "table3": (500, 1000)}


@dataclass(frozen=True)
class Method:
    name: str
    estimator: str
    r1: int
    r2: int
    s: int = 5


def table1_methods(p1, p2):
    """Augmentation settings A1..A5 (Poisson) and G1, G2 (Gaussian)."""
    ceil = math.ceil
    return [
        Method("G1", "gaussian", 1, 1),
        Method("G2", "gaussian", 5, 5),
        Method("A1", "poisson", p1, p2),
        Method("A2", "poisson", ceil(p1 / 2), ceil(p2 / 2)),
        Method("A3", "poisson", ceil(p1 / 5), ceil(p2 / 5)),
        Method("A4", "poisson", ceil(p1 / 10), ceil(p2 / 10)),
        Method("A5", "poisson", 1, 1),
    ]


def _rank_block(p, gen):
    """First SIGNAL_RANK columns of a Haar orthogonal matrix, unit latent variances."""
    return random_orthogonal(p, gen)[:, :SIGNAL_RANK], np.ones(SIGNAL_RANK)


def table1_design(dim, model, gen):
    """Parameters and true (d1, d2) for the dimension study.

    Model 1: left side rank one with U1 Lambda1 U1' proportional to 1 1';
    right side rank five spanned by a random orthogonal W. Model 2: both
    sides rank five. The latent covariance has unit variance per direction
    before canonicalization; mu = 0.
    """
    p1, p2 = DIMS[dim]
    if model == 1:
        U1, a1 = np.full((p1, 1), 1 / np.sqrt(p1)), np.array([float(p1)])
    elif model == 2:
        U1, a1 = _rank_block(p1, gen)
    else:
        raise ValueError(f"unknown model {model}")
    U2, a2 = _rank_block(p2, gen)
    params = PlnParams.from_factors(np.zeros((p1, p2)), U1, a1, U2, a2, 1.0)
    return params, (params.d1, params.d2)


def table1_replicate(dim, model, n, methods, stream):
    """One study repetition: {(method, side): correct?} for freshly drawn data."""
    gen = stream.generator(0)
    params, truth = table1_design(dim, model, gen)
    data, _ = sample_pln(params, n, stream.child(1))
    out = {}
    for mi, m in enumerate(methods):
        for side, r, true_d in (("left", m.r1, truth[0]), ("right", m.r2, truth[1])):
            try:
                curve = estimate_dim(data, side, r, m.s, m.estimator, stream.child(2, mi, side == "right"))
                out[(m.name, side)] = curve.selected == true_d
            except EstimationError:
                out[(m.name, side)] = False
    return out


def run_table1(reps, n_list=None, seed=0, dims=("low", "high"), models=(1, 2), methods=None, workers=1):
    """Percent of replicates with correctly estimated d1 (L) and d2 (R).

    Returns a list of dicts with keys dim, model, n, method, side, percent.
    """
    n_list = n_list or N_LIST["table1"]
    root = SeededStream(seed).child(1)
    rows = []
    for di, dim in enumerate(dims):
        ms = [m for m in table1_methods(*DIMS[dim]) if methods is None or m.name in methods]
        for model in models:
            for n in n_list:
                base = root.child(di, model, n)
                res = parallel_map(lambda t: table1_replicate(dim, model, n, ms, base.child(t)), range(reps), workers)
                for m in ms:
                    for side, tag in (("left", "L"), ("right", "R")):
                        hits = sum(r[(m.name, side)] for r in res)
                        rows.append(
                            {"dim": dim, "model": model, "n": n, "method": m.name, "side": tag, "percent": 100.0 * hits / reps}
                        )
    return rows


def zi_design(rank):
    """4 x 3 design with mu = 0 and tau2 = 1: identity (``'full'``) or all-ones (``'low'``) S matrices."""
    p1, p2 = 4, 3
    mu = np.zeros((p1, p2))
    if rank == "full":
        return PlnParams.from_factors(mu, np.eye(p1), np.ones(p1), np.eye(p2), np.ones(p2), 1.0)
    if rank == "low":
        return PlnParams.from_factors(
            mu, np.full((p1, 1), 0.5), [float(p1)], np.full((p2, 1), 1 / np.sqrt(p2)), [float(p2)], 1.0
        )
    raise ValueError(f"unknown rank design {rank!r}")


def zi_distances(data, params, pi_true):
    """Frobenius errors of the regular (R) and zero-inflated (Z) estimates.

    Returns {'R': {'mu', 'S1', 'S2'}, 'Z': {'mu', 'S1', 'S2', 'pi'}}; a value is
    NaN when the estimate could not be formed.
    """
    mom = factorial_moments(data)
    out = {"R": {}, "Z": {}}
    pi_hat = estimate_pi(mom).raw
    for est, pi in (("R", None), ("Z", pi_hat)):
        mu, _ = estimate_mu(mom, zi=est == "Z")
        out[est]["mu"] = float(np.linalg.norm(mu - params.mu))
        try:
            sp = fit_spair(mom, pi=pi)
            out[est]["S1"] = float(np.linalg.norm(sp.S1 - params.S1))
            out[est]["S2"] = float(np.linalg.norm(sp.S2 - params.S2))
        except EstimationError:
            out[est]["S1"] = out[est]["S2"] = float("nan")
    out["Z"]["pi"] = float(np.linalg.norm(pi_hat - pi_true))
    return out


def run_zi_table(rank, reps, n_list=None, seed=0, pis=PI_LEVELS, workers=1):
    """Average distances per (pi, estimator, n); rows also count failed replicates."""
    n_list = n_list or N_LIST["table2"]
    params = zi_design(rank)
    root = SeededStream(seed).child(2 if rank == "full" else 3)
    rows = []
    for pi_idx, pi in enumerate(pis):
        pi_true = np.full(params.mu.shape, pi)
        mask = ZeroInflationMask(pi_true)
        for n in n_list:
            base = root.child(pi_idx, n)

            def one(t):
                data = sample_zipln(params, mask, n, base.child(t))
                return zi_distances(data, params, pi_true)

            res = parallel_map(one, range(reps), workers)
            for est in ("R", "Z"):
                row = {"pi": pi, "est": est, "n": n}
                for key in ("mu", "S1", "S2", "pi_hat"):
                    src = "pi" if key == "pi_hat" else key
                    if src not in res[0][est]:
                        continue
                    vals = np.array([r[est][src] for r in res])
                    ok = np.isfinite(vals)
                    row[key] = float(vals[ok].mean()) if ok.any() else float("nan")
                    row[f"{key}_failed"] = int((~ok).sum())
                rows.append(row)
    return rows


def table1_markdown(rows):
    methods = list(dict.fromkeys(r["method"] for r in rows))
    keys = list(dict.fromkeys((r["dim"], r["model"], r["n"]) for r in rows))
    look = {(r["dim"], r["model"], r["n"], r["method"], r["side"]): r["percent"] for r in rows}
    head = "| Dim. | Model | n | " + " | ".join(f"{m} L | {m} R" for m in methods) + " |"
    sep = "|" + "---|" * (3 + 2 * len(methods))
    lines = [head, sep]
    for dim, model, n in keys:
        cells = []
        for m in methods:
            cells += [f"{look[(dim, model, n, m, s)]:.0f}" for s in ("L", "R")]
        lines.append(f"| {dim.capitalize()} | {model} | {n} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def zi_markdown(rows):
    ns = list(dict.fromkeys(r["n"] for r in rows))
    head = "| pi | Est | " + " | ".join(f"mu (n={n}) | S1 (n={n}) | S2 (n={n}) | pi (n={n})" for n in ns) + " |"
    sep = "|" + "---|" * (2 + 4 * len(ns))
    look = {(r["pi"], r["est"], r["n"]): r for r in rows}
    lines = [head, sep]
    for pi in dict.fromkeys(r["pi"] for r in rows):
        for est in ("R", "Z"):
            cells = []
            for n in ns:
                r = look[(pi, est, n)]
                cells += [f"{r[k]:.2f}" if k in r else "-" for k in ("mu", "S1", "S2", "pi_hat")]
            lines.append(f"| {pi:.2f} | {est} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
