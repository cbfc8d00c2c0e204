"""File formats: long-format count CSV, parameter JSON, result CSVs.

Long CSV
    Header ``obs,row,col,count``; one line per cell, 0-based indices, every
    (obs, row, col) present exactly once. Dimensions are max index + 1.

Parameter JSON
    Object with keys ``p1, p2, d1, d2, mu, U1, U2, lambda1, lambda2, tau2``
    and optional ``sigma2``, ``pi``, ``canonical``, ``spectrum1``,
    ``spectrum2`` and ``diagnostics``. Matrices are row-major nested arrays.
    Floats are written with 17 significant digits; NaN is written as null.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .exceptions import ParseError
from .model import CountTensor, PlnParams

HEADER = ["obs", "row", "col", "count"]
REQUIRED_KEYS = ("p1", "p2", "d1", "d2", "mu", "U1", "U2", "lambda1", "lambda2", "tau2")


def fmt(x):
    """17 significant digits; integers stay integers; non-finite becomes null."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _dumps(obj, indent=0):
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if any(isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            inner = [pad + _dumps(v, indent + 1) for v in obj]
            return "[\n" + ",\n".join(inner) + "\n" + "  " * indent + "]"
        return "[" + ", ".join(_dumps(v, indent) for v in obj) + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return fmt(obj)


def dumps_json(obj):
    return _dumps(obj) + "\n"


def params_to_dict(params, pi=None, sigma2=None, extra=None):
    out = {
        "p1": params.p1,
        "p2": params.p2,
        "d1": params.d1,
        "d2": params.d2,
        "mu": params.mu,
        "U1": params.U1,
        "U2": params.U2,
        "lambda1": params.lambda1,
        "lambda2": params.lambda2,
        "tau2": params.tau2,
        "canonical": bool(params.canonical),
    }
    if sigma2 is not None:
        out["sigma2"] = float(sigma2)
    if pi is not None:
        out["pi"] = np.asarray(pi, dtype=float)
    if extra:
        out.update(extra)
    return out


def params_to_json(params, pi=None, sigma2=None, extra=None):
    return dumps_json(params_to_dict(params, pi=pi, sigma2=sigma2, extra=extra))


def _matrix(obj, key, shape):
    try:
        a = np.array([[np.nan if v is None else v for v in row] for row in obj[key]], dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"parameter {key!r} is not a numeric matrix: {e}") from None
    if a.size == 0 and shape[0] * shape[1] == 0:
        a = a.reshape(shape)
    if a.shape != shape:
        raise ParseError(f"parameter {key!r} has shape {a.shape}, expected {shape}")
    return a


def params_from_json(text):
    """Parse parameter JSON. Returns (PlnParams, dict of optional entries)."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise ParseError("parameter file must hold a JSON object")
    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise ParseError(f"parameter file is missing keys {missing}")
    p1, p2, d1, d2 = (int(obj[k]) for k in ("p1", "p2", "d1", "d2"))
    mu = _matrix(obj, "mu", (p1, p2))
    U1 = _matrix(obj, "U1", (p1, d1))
    U2 = _matrix(obj, "U2", (p2, d2))
    l1 = np.asarray(obj["lambda1"], dtype=float)
    l2 = np.asarray(obj["lambda2"], dtype=float)
    if l1.shape != (d1,) or l2.shape != (d2,):
        raise ParseError(f"lambda lengths {l1.shape}, {l2.shape} do not match d1={d1}, d2={d2}")
    params = PlnParams(mu, U1, U2, l1, l2, float(obj["tau2"]), canonical=bool(obj.get("canonical", True)))
    extras = {}
    if obj.get("pi") is not None:
        extras["pi"] = _matrix(obj, "pi", (p1, p2))
    if obj.get("sigma2") is not None:
        extras["sigma2"] = float(obj["sigma2"])
    for key in ("spectrum1", "spectrum2"):
        if obj.get(key) is not None:
            extras[key] = np.asarray(obj[key], dtype=float)
    return params, extras


def _int_field(text, name, lineno):
    try:
        v = int(text)
    except ValueError:
        raise ParseError(f"line {lineno}: {name} {text!r} is not an integer") from None
    if v < 0:
        raise ParseError(f"line {lineno}: {name} {v} is negative")
    return v


def read_long_csv(source):
    """Read a long-format count CSV (path or file object) into a CountTensor."""
    if hasattr(source, "read"):
        return _parse_long(source)
    with open(source, newline="", encoding="utf-8") as fh:
        return _parse_long(fh)


def _parse_long(fh):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file") from None
    if header != HEADER:
        raise ParseError(f"line 1: header must be {','.join(HEADER)}, got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(rec)}")
        o, r, c = (_int_field(rec[i], HEADER[i], lineno) for i in range(3))
        rows.append((o, r, c, _int_field(rec[3], "count", lineno)))
    if not rows:
        raise ParseError("no data lines")
    a = np.array(rows, dtype=np.int64)
    n, p1, p2 = (int(a[:, i].max()) + 1 for i in range(3))
    flat = (a[:, 0] * p1 + a[:, 1]) * p2 + a[:, 2]
    _, first = np.unique(flat, return_index=True)
    repeat = np.ones(flat.size, dtype=bool)
    repeat[first] = False
    if repeat.any():
        o, r, c = a[np.argmax(repeat), :3]
        raise ParseError(f"duplicate cell (obs={o}, row={r}, col={c})")
    seen = np.zeros(n * p1 * p2, dtype=bool)
    seen[flat] = True
    if np.any(seen == 0):
        o, r, c = np.unravel_index(int(np.flatnonzero(seen == 0)[0]), (n, p1, p2))
        raise ParseError(f"missing cell (obs={o}, row={r}, col={c})")
    x = np.zeros(n * p1 * p2, dtype=np.int64)
    x[flat] = a[:, 3]
    try:
        return CountTensor(x.reshape(n, p1, p2))
    except ValueError as e:
        raise ParseError(str(e)) from None


def long_csv_text(tensor):
    """Canonical long CSV: sorted by (obs, row, col), LF newlines."""
    x = tensor.data if isinstance(tensor, CountTensor) else np.asarray(tensor)
    buf = io.StringIO()
    buf.write(",".join(HEADER) + "\n")
    n, p1, p2 = x.shape
    for o in range(n):
        for r in range(p1):
            row = x[o, r]
            buf.write("".join(f"{o},{r},{c},{int(row[c])}\n" for c in range(p2)))
    return buf.getvalue()


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def curve_csv_text(curve):
    """``k,phi,mean_beta_sq,mean_eigenvalue`` for k = 0..p.

    Row k carries ||beta_k||^2 (zero at k = 0) and lambda_{k+1}, the two
    quantities that enter phi(k) alongside the running sums.
    """
    lines = ["k,phi,mean_beta_sq,mean_eigenvalue"]
    beta = np.concatenate([[0.0], curve.mean_beta_sq])
    for k, ph in enumerate(curve.phi):
        lines.append(f"{k},{fmt(ph)},{fmt(beta[k])},{fmt(curve.mean_eigenvalues[k])}")
    return "\n".join(lines) + "\n"


def scores_csv_text(scores):
    d = scores.scores.shape[1]
    lines = ["obs," + ",".join(f"score_{j + 1}" for j in range(d)) + ",converged"]
    for i, (row, ok) in enumerate(zip(scores.scores, scores.converged)):
        lines.append(f"{i}," + ",".join(fmt(v) for v in row) + ("," + ("true" if ok else "false")))
    return "\n".join(lines) + "\n"


def rows_csv_text(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(fmt(v) if not isinstance(v, str) else v for v in r))
    return "\n".join(lines) + "\n"
