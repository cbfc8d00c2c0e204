"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and must not be relaxed.
"""
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from mpln import CountTensor, PlnParams, SeededStream, estimate_dim, estimate_mu, estimate_S, phi_from_spectrum
from mpln import bench, map_score, sample_iid, sample_pln
from mpln.asymptotics import asym_var_s11, mc_verify, pln_factorial_moment
from mpln.io import long_csv_text, params_to_json
from mpln.latent import grad_hess, log_cond_density
from mpln.moments import FactorialMoments
from mpln.sampler import Binomial, NegBin, Poisson, parallel_map, random_orthogonal

WORKERS = min(8, os.cpu_count() or 1)


def report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _scalar_moments(m1, m2, m3):
    a = lambda v: np.full((1, 1), float(v))
    z = np.zeros((1, 1, 1))
    return FactorialMoments(a(m1), a(m2), a(m3), z, z)


def test_01_mu_recovery_exact():
    worst = 0.0
    for mu in np.linspace(-1.5, 1.5, 5):
        for s2 in np.linspace(0.0, 1.2, 5):
            mom = _scalar_moments(*(pln_factorial_moment(j, mu, s2) for j in (1, 2, 3)))
            for zi in (False, True):
                est, _ = estimate_mu(mom, zi=zi)
                worst = max(worst, abs(est[0, 0] - mu))
    report(1, worst <= 1e-12, f"max |mu_hat - mu| over 5x5 grid, both estimators = {worst:.2e} (tol 1e-12)")


def _model1_left(p1=10, p2=5, seed=0):
    W = random_orthogonal(p2, np.random.default_rng(seed))
    return PlnParams.from_factors(np.zeros((p1, p2)), np.full((p1, 1), 1 / np.sqrt(p1)), [float(p1)], W, np.ones(p2), 1.0)


def test_02_s1_root_n_rate():
    params = _model1_left()
    assert (params.d1, params.d2) == (1, 5)
    stream = SeededStream(2)

    def err(n, t):
        x, _ = sample_pln(params, n, stream.child(n, t))
        return float(np.linalg.norm(estimate_S(x, "left")[0] - params.S1))

    med = {}
    for n in (5000, 20000):
        med[n] = float(np.median(parallel_map(lambda t: err(n, t), range(20), WORKERS)))
    ratio = med[20000] / med[5000]
    ok = med[20000] < 0.15 and 0.4 <= ratio <= 0.6
    report(2, ok, f"median ||S_n1 - S1||_F at n=20000 = {med[20000]:.4f} (< 0.15); ratio to n=5000 = {ratio:.3f} (in [0.4, 0.6])")


def _influence_se(x):
    """Delta-method standard error of log(m2 / m1^2) from per-observation terms."""
    x = x.astype(float)
    m1, m2 = x.mean(), (x * (x - 1)).mean()
    infl = x * (x - 1) / m2 - 2 * x / m1
    return infl.std() / math.sqrt(x.size)


def test_03_diagonal_constants():
    r, p, m, q = 2, 0.5, 4, 0.5
    mean_nb = r * p / (1 - p)
    cases = [
        ("Poisson(2)", _scalar_moments(2.0, 4.0, 8.0), 0.0, Poisson(2.0)),
        ("NegBin(2,0.5)", _scalar_moments(mean_nb, r * (r + 1) * (p / (1 - p)) ** 2, 0.0), math.log(1 + 1 / r), NegBin(r, p)),
        ("Binomial(4,0.5)", _scalar_moments(m * q, m * (m - 1) * q * q, 0.0), math.log(1 - 1 / m), Binomial(m, q)),
    ]
    details, ok = [], True
    n = 20000
    for t, (name, mom, ref, dist) in enumerate(cases):
        pop = estimate_S(mom)[0][0, 0]
        x = sample_iid(dist, n, 1, 1, 30 + t)
        sim = estimate_S(x)[0][0, 0]
        se = _influence_se(x.data[:, 0, 0])
        ok &= pop == ref and abs(sim - ref) <= 4 * se
        details.append(f"{name}: pop={pop:.6g} ref={ref:.6g} sim z={(sim - ref) / se:+.2f}")
    report(3, ok, "; ".join(details) + " (exact, |z| <= 4)")


def _random_instance(rng):
    p1, p2 = rng.integers(1, 6, 2)
    d1, d2 = rng.integers(1, p1 + 1), rng.integers(1, p2 + 1)
    U1 = np.linalg.qr(rng.standard_normal((p1, d1)))[0]
    U2 = np.linalg.qr(rng.standard_normal((p2, d2)))[0]
    params = PlnParams(
        rng.normal(0, 0.5, (p1, p2)),
        U1,
        U2,
        np.sort(rng.uniform(0.2, 3, d1))[::-1],
        np.sort(rng.uniform(0.2, 3, d2))[::-1],
        float(rng.uniform(0.2, 2)),
        canonical=False,
    )
    return params, rng.poisson(rng.uniform(0.2, 5), (p1, p2)), rng.normal(0, 0.7, d1 * d2)


def test_04_latent_scoring():
    scalar = PlnParams(np.zeros((1, 1)), np.eye(1), np.eye(1), np.ones(1), np.ones(1), 1.0)
    z1 = map_score(np.array([[1]]), scalar)[0][0]
    z0 = map_score(np.array([[0]]), scalar)[0][0]
    lo, hi = -1.0, 0.0  # bisection on e^z + z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if math.exp(mid) + mid < 0 else (lo, mid)
    root = 0.5 * (lo + hi)
    rng = np.random.default_rng(4)
    g_err, h_max, h = 0.0, -np.inf, 1e-5
    for _ in range(100):
        params, x, z = _random_instance(rng)
        g, H = grad_hess(z, x, params)
        fd = np.array(
            [
                (log_cond_density(z + h * e, x, params) - log_cond_density(z - h * e, x, params)) / (2 * h)
                for e in np.eye(z.size)
            ]
        )
        g_err = max(g_err, np.abs(fd - g).max())
        h_max = max(h_max, np.linalg.eigvalsh(H).max())
    ok = z1 == 0 and abs(z0 - root) < 1e-6 and g_err < 1e-6 and h_max < 0
    report(
        4,
        ok,
        f"z*(x=1)={z1}; |z*(x=0) - root|={abs(z0 - root):.1e}; max |grad - FD|={g_err:.1e}; max Hessian eigenvalue={h_max:.3g}",
    )


def test_05_table1_low_A5():
    methods = [m for m in bench.table1_methods(10, 5) if m.name == "A5"]
    root = SeededStream(5)
    pct = {}
    for model in (1, 2):
        res = parallel_map(lambda t: bench.table1_replicate("low", model, 500, methods, root.child(model, t)), range(50), WORKERS)
        pct[model] = 100.0 * sum(r[("A5", "left")] and r[("A5", "right")] for r in res) / 50
    ok = min(pct.values()) >= 95
    report(5, ok, f"correct (d1, d2) with A5, Low, n=500, 50 reps: Model 1 {pct[1]:.0f}%, Model 2 {pct[2]:.0f}% (>= 95%)")


def test_06_pure_noise():
    root = SeededStream(6)

    def one(t):
        x = sample_iid(Poisson(1.0), 2000, 10, 5, root.child(t, 0))
        dl = estimate_dim(x, "left", rng=root.child(t, 1)).selected
        dr = estimate_dim(x, "right", rng=root.child(t, 2)).selected
        return dl == 0 and dr == 0

    hits = sum(parallel_map(one, range(50), WORKERS))
    report(6, hits >= 40, f"iid Poisson(1), n=2000: d1 = d2 = 0 in {hits}/50 reps (>= 40)")


def test_07_table2_desk():
    rows = bench.run_zi_table("full", 100, (500,), seed=0, workers=WORKERS)
    cell = {(r["pi"], r["est"]): r for r in rows}
    targets = [((1.0, "R"), 0.32), ((0.25, "R"), 7.10), ((0.25, "Z"), 2.15)]
    parts, ok = [], True
    for key, ref in targets:
        v = cell[key]["mu"]
        good = abs(v - ref) <= 0.3 * ref
        ok &= good
        parts.append(f"mu(pi={key[0]},{key[1]})={v:.2f} vs {ref}")
    order = all(cell[(pi, "Z")][k] < cell[(pi, "R")][k] for pi in (0.5, 0.25) for k in ("mu", "S1", "S2"))
    ok &= order
    report(7, ok, "; ".join(parts) + f" (+-30%); Z beats R at pi<=0.5 for mu,S1,S2: {order}")


def test_08_scalar_variance_mc():
    formula = asym_var_s11(0.0, 0.0)
    res = mc_verify(0.0, 0.0, 5000, 2000, rng=8, workers=WORKERS)
    ok = formula == 2 and 0.85 <= res.ratio <= 1.15
    report(8, ok, f"formula={formula}; empirical={res.empirical:.4f}; ratio={res.ratio:.4f} (in [0.85, 1.15]); dropped={res.dropped}")


def _cli(args, cwd):
    r = subprocess.run([sys.executable, "-m", "mpln", *map(str, args)], capture_output=True, text=True, cwd=cwd)
    assert r.returncode == 0, r.stderr
    return r.stdout


def _snapshot(d):
    out = {}
    for root, _, files in os.walk(d):
        for f in files:
            path = os.path.join(root, f)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, d)] = fh.read()
    return dict(sorted(out.items()))


def test_09_cli_determinism(tmp_path):
    params = bench.zi_design("full")
    (tmp_path / "p.json").write_text(params_to_json(params, pi=np.full((4, 3), 0.6)))
    commands = [
        ["simulate", "--params", "p.json", "--n", 300, "--seed", 9, "--out", "data.csv", "--latent-out", "z.csv"],
        ["fit", "data.csv", "--d1", 2, "--d2", 2, "--zero-inflated", "--out", "fit.json"],
        ["dims", "data.csv", "--side", "both", "--seed", 9, "--out", "curve.csv"],
        ["scores", "data.csv", "fit.json", "--zero-inflated", "--svg", "s.svg", "--out", "scores.csv"],
        ["bench", "table1", "--reps", 3, "--n-list", 100, "--dims", "low", "--seed", 9, "--out-dir", "b1"],
        ["bench", "table2", "--reps", 4, "--n-list", 200, "--seed", 9, "--out-dir", "b2"],
        ["bench", "table3", "--reps", 4, "--n-list", 200, "--seed", 9, "--out-dir", "b3"],
        ["check-asymptotics", "--n", 300, "--reps", 100, "--seed", 9],
    ]
    runs = []
    for label, threads in (("a", 1), ("b", 1), ("c", 4)):
        d = tmp_path / label
        d.mkdir()
        (d / "p.json").write_text((tmp_path / "p.json").read_text())
        outs = [_cli(cmd + ["--threads", threads], d) for cmd in commands]
        runs.append((outs, _snapshot(d)))
    same = all(r == runs[0] for r in runs[1:])
    report(9, same, f"{len(commands)} subcommand runs ({len(runs[0][1])} files) byte-identical across 2 runs and 1 vs 4 threads")


def test_10_phi_worked_example():
    phi, k = phi_from_spectrum([2.0, 0.0, 0.0], [0.0, 0.64, 0.36], 2)
    ok = phi.tolist() == [2 / 3, 0.0, 0.64] and k == 1
    report(10, ok, f"phi={phi.tolist()}, argmin={k} (expect [2/3, 0, 0.64], 1)")
