"""Command line interface: ``mpln <subcommand> ...``.

Exit codes: 0 success, 2 parse error, 3 estimation error, 4 validation error.
Errors are reported on stderr as one JSON object. All randomness flows from
``--seed`` (default 0); ``--threads`` never changes the output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench, io
from .asymptotics import mc_verify
from .dimension import estimate_dim
from .exceptions import EstimationError, ParseError, SamplingError, ValidationError
from .latent import score_sample
from .model import ZeroInflationMask, require_valid
from .pipeline import fit
from .sampler import SeededStream, sample_pln, sample_zipln
from .svg import biplot_svg

EXIT_PARSE, EXIT_ESTIMATION, EXIT_VALIDATION = 2, 3, 4


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        io.write_text(path, text)


def _read_params(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return io.params_from_json(fh.read())
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


def _read_data(path):
    try:
        return io.read_long_csv(path)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


def cmd_simulate(args):
    params, extras = _read_params(args.params)
    require_valid(params)
    stream = SeededStream(args.seed)
    pi = extras.get("pi")
    if args.pi is not None:
        pi = np.full(params.mu.shape, args.pi)
    if pi is not None:
        data, z = sample_zipln(params, ZeroInflationMask(pi), args.n, stream, workers=args.threads, return_latent=True)
    else:
        data, z = sample_pln(params, args.n, stream, workers=args.threads)
    _emit(io.long_csv_text(data), args.out)
    if args.latent_out:
        rows = [[i] + list(zi.flatten(order="F")) for i, zi in enumerate(z)]
        header = ["obs"] + [f"z_{j + 1}" for j in range(z.shape[1] * z.shape[2])]
        io.write_text(args.latent_out, io.rows_csv_text(header, rows))
    return 0


def cmd_fit(args):
    data = _read_data(args.data)
    clamp = None if args.no_pi_clamp else tuple(args.pi_clamp)
    res = fit(data, args.d1, args.d2, zero_inflated=args.zero_inflated, pi_clamp=clamp)
    extra = {
        "S1": res.spair.S1,
        "S2": res.spair.S2,
        "spectrum1": res.spectrum1,
        "spectrum2": res.spectrum2,
    }
    if res.pi is not None:
        extra["pi_raw"] = res.pi.raw
    diag = res.diagnostics
    if args.truth:
        truth, _ = _read_params(args.truth)
        diag["reconstruction_error"] = {
            "S1": float(np.linalg.norm(res.spair.S1 - truth.S1)),
            "S2": float(np.linalg.norm(res.spair.S2 - truth.S2)),
        }
    extra["diagnostics"] = diag
    pi = res.pi.value if res.pi is not None else None
    _emit(io.params_to_json(res.params, pi=pi, extra=extra), args.out)
    return 0


def _side_path(path, side, both):
    if not both:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}_{side}{ext or '.csv'}"


def cmd_dims(args):
    data = _read_data(args.data)
    sides = ("left", "right") if args.side == "both" else (args.side,)
    stream = SeededStream(args.seed)
    for side in sides:
        curve = estimate_dim(data, side, args.r, args.s, args.estimator, stream, workers=args.threads)
        path = _side_path(args.out, side, len(sides) > 1)
        io.write_text(path, io.curve_csv_text(curve))
        sys.stdout.write(
            json.dumps({"side": side, "selected": curve.selected, "r": curve.r, "s": curve.s, "dropped": curve.dropped, "file": path})
            + "\n"
        )
    return 0


def _explained(values, idx):
    v = np.asarray(values, dtype=float)
    return 100.0 * v[idx] / v.sum() if v.sum() != 0 else float("nan")


def _biplot(params, extras, scores, cols):
    d1 = params.d1
    c1, c2 = (c - 1 for c in cols)
    (a1, b1), (a2, b2) = divmod(c1, d1)[::-1], divmod(c2, d1)[::-1]
    if b1 == b2:
        rays, labels = params.U1[:, [a1, a2]], [str(j + 1) for j in range(params.p1)]
    elif a1 == a2:
        rays, labels = params.U2[:, [b1, b2]], [f"c{j + 1}" for j in range(params.p2)]
    else:
        U = params.U
        rays, labels = U[:, [c1, c2]], [f"{j % params.p1 + 1},{j // params.p1 + 1}" for j in range(U.shape[0])]
    s1 = extras.get("spectrum1", params.lambda1)
    s2 = extras.get("spectrum2", params.lambda2)
    pct = [_explained(s1, a) * _explained(s2, b) / 100.0 for a, b in ((a1, b1), (a2, b2))]
    return biplot_svg(
        scores.scores[:, c1],
        scores.scores[:, c2],
        rays,
        labels,
        f"score_{cols[0]} ({pct[0]:.1f}%)",
        f"score_{cols[1]} ({pct[1]:.1f}%)",
        converged=scores.converged,
    )


def cmd_scores(args):
    data = _read_data(args.data)
    params, extras = _read_params(args.params)
    if (data.p1, data.p2) != (params.p1, params.p2):
        raise ValidationError(f"data shape ({data.p1}, {data.p2}) does not match parameters ({params.p1}, {params.p2})")
    pi = None
    if args.zero_inflated:
        if "pi" not in extras:
            raise ValidationError("--zero-inflated needs a 'pi' matrix in the parameter file")
        pi = extras["pi"]
    scores = score_sample(data, params, pi=pi, workers=args.threads)
    _emit(io.scores_csv_text(scores), args.out)
    if args.svg:
        d = params.d1 * params.d2
        cols = args.columns
        if d < 2 or not all(1 <= c <= d for c in cols) or cols[0] == cols[1]:
            raise ValidationError(f"--columns must name two distinct score columns in 1..{d}")
        io.write_text(args.svg, _biplot(params, extras, scores, cols))
    return 0


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v)


def _str_list(text):
    return tuple(v for v in text.split(",") if v)


def cmd_bench(args):
    reps = args.reps or bench.REPS[args.scale][args.suite]
    n_list = _int_list(args.n_list) if args.n_list else bench.N_LIST[args.suite]
    if args.suite == "table1":
        rows = bench.run_table1(
            reps,
            n_list,
            args.seed,
            dims=_str_list(args.dims),
            models=_int_list(args.models),
            methods=_str_list(args.methods) if args.methods else None,
            workers=args.threads,
        )
        header = ["dim", "model", "n", "method", "side", "percent"]
        md = bench.table1_markdown(rows)
    else:
        rank = "full" if args.suite == "table2" else "low"
        pis = tuple(float(v) for v in args.pis.split(",")) if args.pis else bench.PI_LEVELS
        rows = bench.run_zi_table(rank, reps, n_list, args.seed, pis=pis, workers=args.threads)
        header = ["pi", "est", "n", "mu", "S1", "S2", "pi_hat"]
        md = bench.zi_markdown(rows)
    csv_rows = [[r.get(h, float("nan")) if h not in ("dim", "method", "side", "est") else r[h] for h in header] for r in rows]
    os.makedirs(args.out_dir, exist_ok=True)
    io.write_text(os.path.join(args.out_dir, f"{args.suite}.csv"), io.rows_csv_text(header, csv_rows))
    io.write_text(os.path.join(args.out_dir, f"{args.suite}.md"), md)
    sys.stdout.write(f"{args.suite}: reps={reps} n={','.join(map(str, n_list))} seed={args.seed}\n\n" + md)
    return 0


def cmd_check_asymptotics(args):
    rows = []
    for t, (mu, s2) in enumerate((m, s) for m in args.mu for s in args.sigma2):
        res = mc_verify(mu, s2, args.n, args.reps, SeededStream(args.seed).child(t), workers=args.threads)
        rows.append([mu, s2, res.formula, res.empirical, res.ratio, res.dropped])
    sys.stdout.write(io.rows_csv_text(["mu", "sigma2", "formula", "empirical", "ratio", "dropped"], rows))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="mpln", description="Poisson PCA for matrix-valued count data.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--threads", type=int, default=1, help="worker threads (output is unaffected)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("simulate", help="draw a count tensor from a parameter file")
    sp.add_argument("--params", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--pi", type=float, help="uniform zero-inflation probability (overrides 'pi' in the file)")
    sp.add_argument("--out", default="-")
    sp.add_argument("--latent-out")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="method-of-moments parameter estimates as JSON")
    sp.add_argument("data")
    sp.add_argument("--d1", type=int, required=True)
    sp.add_argument("--d2", type=int, required=True)
    sp.add_argument("--zero-inflated", action="store_true")
    sp.add_argument("--pi-clamp", nargs=2, type=float, default=(0.05, 1.0), metavar=("LO", "HI"))
    sp.add_argument("--no-pi-clamp", action="store_true")
    sp.add_argument("--truth", help="true parameter file; adds S reconstruction errors to diagnostics")
    sp.add_argument("--out", default="-")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("dims", help="predictor-augmentation dimension curves")
    sp.add_argument("data")
    sp.add_argument("--side", choices=("left", "right", "both"), default="both")
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--s", type=int, default=5)
    sp.add_argument("--estimator", choices=("poisson", "gaussian"), default="poisson")
    sp.add_argument("--out", required=True, help="curve CSV; with --side both, _left/_right are appended")
    common(sp)
    sp.set_defaults(func=cmd_dims)

    sp = sub.add_parser("scores", help="centered MAP latent scores")
    sp.add_argument("data")
    sp.add_argument("params")
    sp.add_argument("--zero-inflated", action="store_true")
    sp.add_argument("--svg")
    sp.add_argument("--columns", nargs=2, type=int, default=(1, 2), metavar=("I", "J"))
    sp.add_argument("--out", default="-")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_scores)

    sp = sub.add_parser("bench", help="rerun the simulation studies")
    sp.add_argument("suite", choices=("table1", "table2", "table3"))
    sp.add_argument("--reps", type=int)
    sp.add_argument("--n-list")
    sp.add_argument("--scale", choices=("desk", "full"), default="desk")
    sp.add_argument("--dims", default="low,high", help="table1 only")
    sp.add_argument("--models", default="1,2", help="table1 only")
    sp.add_argument("--methods", help="table1 only, e.g. A5,G1")
    sp.add_argument("--pis", help="table2/3 only, e.g. 1,0.5")
    sp.add_argument("--out-dir", default=".")
    common(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("check-asymptotics", help="Monte-Carlo check of the scalar limiting variance")
    sp.add_argument("--mu", type=float, nargs="+", default=[0.0])
    sp.add_argument("--sigma2", type=float, nargs="+", default=[0.0, 0.25])
    sp.add_argument("--n", type=int, default=5000)
    sp.add_argument("--reps", type=int, default=2000)
    common(sp)
    sp.set_defaults(func=cmd_check_asymptotics)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        code, kind, msg = EXIT_PARSE, "parse", str(e)
    except (EstimationError, SamplingError) as e:
        code, kind, msg = EXIT_ESTIMATION, "estimation", str(e)
    except ValidationError as e:
        code, kind, msg = EXIT_VALIDATION, "validation", str(e)
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
    return code

if __name__ == "__main__":
    sys.exit(main())
