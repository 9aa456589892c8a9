"""File codecs shared by the CLI: matrix text files, distribution JSON,
ensemble descriptors, and broadcast problem/code JSON."""

from __future__ import annotations

import json
import math
import os

import numpy as np

from .broadcast import BcCode, BcProblem
from .ensemble import Ensemble, TypeFilter
from .gf import FieldMatrix
from .types import CondDistribution, Distribution


class ParseError(ValueError):
    """Malformed input file; message carries the offending location."""


# --- matrix text format -----------------------------------------------------
# First line "q l n"; each following line "r c v" (0-based row, col, nonzero
# value); entries sorted by (r, c); unlisted entries are zero.


def parse_matrix(text: str) -> FieldMatrix:
    lines = [ln for ln in text.splitlines()]
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        raise ParseError("line 1: missing 'q l n' header")
    lineno, header = rows[0]
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"line {lineno}: header must be 'q l n', got {header!r}")
    try:
        q, l, n = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"line {lineno}: non-integer header field in {header!r}")
    entries = []
    prev = None
    for lineno, ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ParseError(f"line {lineno}: entry must be 'r c v', got {ln!r}")
        try:
            r, c, v = (int(p) for p in parts)
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer entry field in {ln!r}")
        if not 0 <= r < l or not 0 <= c < n:
            raise ParseError(f"line {lineno}: entry ({r},{c}) outside {l}x{n}")
        if not 0 < v < q:
            raise ParseError(f"line {lineno}: value {v} not a nonzero residue mod {q}")
        if prev is not None and (r, c) <= prev:
            if (r, c) == prev:
                raise ParseError(f"line {lineno}: duplicate entry at ({r},{c})")
            raise ParseError(f"line {lineno}: entries must be sorted by (r, c)")
        prev = (r, c)
        entries.append((r, c, v))
    try:
        return FieldMatrix(q=q, rows=l, cols=n, entries=tuple(entries))
    except ValueError as exc:
        raise ParseError(str(exc))


def emit_matrix(m: FieldMatrix) -> str:
    lines = [f"{m.q} {m.rows} {m.cols}"]
    lines += [f"{r} {c} {v}" for r, c, v in m.entries]
    return "\n".join(lines) + "\n"


def load_matrix(path: str) -> FieldMatrix:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")
    try:
        return parse_matrix(text)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}")


# --- distribution JSON ------------------------------------------------------
# {"sizes": [s1, ..., sk], "probs": [flat row-major masses]}


def distribution_from_obj(obj) -> Distribution:
    if not isinstance(obj, dict) or "sizes" not in obj or "probs" not in obj:
        raise ParseError("distribution JSON needs 'sizes' and 'probs' fields")
    sizes = obj["sizes"]
    probs = obj["probs"]
    if len(probs) != math.prod(sizes):
        raise ParseError(
            f"'probs' has {len(probs)} entries, expected {math.prod(sizes)}"
        )
    try:
        return Distribution(np.asarray(probs, dtype=np.float64).reshape(sizes))
    except ValueError as exc:
        raise ParseError(str(exc))


def distribution_to_obj(d: Distribution) -> dict:
    return {"sizes": list(d.shape), "probs": [float(x) for x in d.table.reshape(-1)]}


def load_distribution(path: str) -> Distribution:
    return distribution_from_obj(_load_json(path))


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}")


# --- ensemble descriptor ----------------------------------------------------
# {"family": "sparse"|"uniform"|"binning", "q", "l", "n", "tau", "seed",
#  "w_min"}


def ensemble_from_obj(obj) -> tuple[Ensemble, TypeFilter, int | None]:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ParseError("ensemble descriptor needs a 'family' field")
    family = obj["family"]
    try:
        q, l, n = int(obj["q"]), int(obj["l"]), int(obj["n"])
    except (KeyError, ValueError, TypeError):
        raise ParseError("ensemble descriptor needs integer q, l, n")
    seed = int(obj["seed"]) if obj.get("seed") is not None else None
    filt = (
        TypeFilter(int(obj["w_min"])) if obj.get("w_min") is not None
        else TypeFilter.default(n)
    )
    try:
        if family == "uniform":
            ens = Ensemble.uniform_all(q, l, n)
        elif family == "sparse":
            if obj.get("tau") is None:
                raise ParseError("sparse ensembles need 'tau'")
            ens = Ensemble.sparse(q, l, n, int(obj["tau"]))
        elif family == "binning":
            ens = Ensemble.binning(q, n, int(obj.get("bins", q ** l)))
        else:
            raise ParseError(f"unknown ensemble family {family!r}")
    except ValueError as exc:
        raise ParseError(str(exc))
    return ens, filt, seed


# --- broadcast problem / code JSON ------------------------------------------
# problem: {"y_sizes": [...], "x_size": N,
#           "channel": [flat row-major over (y_1..y_k, x), columns sum to 1],
#           "mu_u": {"sizes": [...], "probs": [...]},
#           "f": [flat row-major ints]  or  "f_stochastic": [flat probs]}
# code: {"receivers": [{"A": path, "A_prime": path, "syndrome": [...]} ...]}


def bc_problem_from_obj(obj) -> BcProblem:
    if not isinstance(obj, dict):
        raise ParseError("problem JSON must be an object")
    try:
        y_sizes = [int(s) for s in obj["y_sizes"]]
        x_size = int(obj["x_size"])
        channel = np.asarray(obj["channel"], dtype=np.float64).reshape(
            tuple(y_sizes) + (x_size,)
        )
        mu_u = distribution_from_obj(obj["mu_u"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"problem JSON: {exc}")
    if "f" in obj:
        f = np.asarray(obj["f"], dtype=np.int64).reshape(mu_u.shape)
    elif "f_stochastic" in obj:
        f = np.asarray(obj["f_stochastic"], dtype=np.float64).reshape(
            mu_u.shape + (x_size,)
        )
    else:
        raise ParseError("problem JSON needs 'f' or 'f_stochastic'")
    try:
        return BcProblem(channel=CondDistribution(channel), mu_u=mu_u, f=f)
    except ValueError as exc:
        raise ParseError(f"problem JSON: {exc}")


def bc_code_from_obj(obj, base_dir: str = ".") -> BcCode:
    if not isinstance(obj, dict) or "receivers" not in obj:
        raise ParseError("code JSON needs a 'receivers' list")
    pairs = []
    syndromes = []
    for i, rec in enumerate(obj["receivers"]):
        try:
            a = load_matrix(os.path.join(base_dir, rec["A"]))
            ap = load_matrix(os.path.join(base_dir, rec["A_prime"]))
            syn = tuple(int(v) for v in rec["syndrome"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"receiver {i}: missing field {exc}")
        pairs.append((a, ap))
        syndromes.append(syn)
    try:
        return BcCode(pairs=tuple(pairs), syndromes=tuple(syndromes))
    except ValueError as exc:
        raise ParseError(f"code JSON: {exc}")


def load_bc_problem(path: str) -> BcProblem:
    return bc_problem_from_obj(_load_json(path))


def load_bc_code(path: str) -> BcCode:
    return bc_code_from_obj(_load_json(path), base_dir=os.path.dirname(path) or ".")


def parse_symbols(text: str) -> tuple[int, ...]:
    """A syndrome/message literal: digits, optionally comma-separated."""
    text = text.strip()
    if text == "":
        return ()
    if "," in text:
        parts = text.split(",")
    else:
        parts = list(text)
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ParseError(f"cannot parse symbol string {text!r}")
