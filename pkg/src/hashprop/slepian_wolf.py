"""Syndrome source coding for correlated sources: encoders a_j = A_j x_j,
minimum-divergence and typicality-constrained maximum-likelihood decoders,
and exact / Monte Carlo error evaluation.

Decoding is exhaustive over the coset product, which at desk scale is both
feasible and the reference oracle for the LP decoder.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gf import CosetSpec, FieldMatrix, solve_affine
from .mc import McEstimate, spawn_rngs
from .types import Distribution, TypicalityParams, divergence, entropy, is_typical, joint_type

DEFAULT_CAP = 1 << 20
# two mathematically tied joint types can produce float divergences an ulp
# apart depending on summation order; ties are therefore tolerance-based so
# the documented lexicographic tie-break is what actually decides
TIE_TOL = 1e-12


class SwError(ValueError):
    """Bad code parameters or a search space beyond the configured cap."""


@dataclass(frozen=True)
class SwCode:
    """Per-source parity matrices plus the joint source law.

    Source j's alphabet (axis j of mu) is embedded into GF(q_j) by index,
    so matrix j's modulus must be at least the alphabet size.
    """

    matrices: tuple[FieldMatrix, ...]
    mu: Distribution

    def __post_init__(self) -> None:
        if len(self.matrices) != len(self.mu.shape):
            raise SwError("one matrix per source axis is required")
        n = self.matrices[0].cols
        for m, size in zip(self.matrices, self.mu.shape):
            if m.cols != n:
                raise SwError("all matrices must share the block length n")
            if m.q < size:
                raise SwError(f"alphabet of size {size} does not embed in GF({m.q})")

    @property
    def k(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        return self.matrices[0].cols

    def rates(self) -> "SwRates":
        n = self.n
        return SwRates(tuple(m.rows * math.log2(m.q) / n for m in self.matrices))


@dataclass(frozen=True)
class SwRates:
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(r < 0 for r in self.rates):
            raise SwError("rates must be nonnegative")


@dataclass(frozen=True)
class SwDecodeResult:
    x_hat: tuple[tuple[int, ...], ...]
    failure: bool = False        # ML decoder: restricted candidate set empty
    all_infinite: bool = False   # MD decoder: every candidate off-support


def sw_encode(code: SwCode, x_K) -> tuple[tuple[int, ...], ...]:
    if len(x_K) != code.k:
        raise SwError("one sequence per source is required")
    return tuple(m.matvec(x) for m, x in zip(code.matrices, x_K))


def _coset_product(code: SwCode, syndromes, cap: int):
    cosets = []
    total = 1
    for m, a in zip(code.matrices, syndromes):
        c = list(solve_affine(CosetSpec(m, tuple(a))))
        if not c:
            raise SwError("syndrome outside the matrix image")
        cosets.append(c)
        total *= len(c)
        if total > cap:
            raise SwError(f"coset product of {total} candidates exceeds cap {cap}")
    # itertools.product over lex-sorted cosets yields candidates in
    # lexicographic order of the concatenated tuple, which is the tie order.
    return itertools.product(*cosets)


def sw_decode_md(code: SwCode, syndromes, cap: int = DEFAULT_CAP) -> SwDecodeResult:
    """Minimum joint-empirical-divergence decoding over the coset product."""
    best = None
    best_d = math.inf
    seen_finite = False
    for cand in _coset_product(code, syndromes, cap):
        d = divergence(joint_type(cand, code.mu.shape).empirical(), code.mu)
        if not math.isinf(d):
            seen_finite = True
        if best is None or d < best_d - TIE_TOL:
            best, best_d = cand, d
        elif d < best_d:
            best_d = d  # tie: keep the earlier (lex-smaller) candidate
    return SwDecodeResult(x_hat=best, all_infinite=not seen_finite)


def sw_decode_ml_typical(code: SwCode, syndromes, gamma: float,
                         constrained: bool = True,
                         cap: int = DEFAULT_CAP) -> SwDecodeResult:
    """Maximum-likelihood decoding over the coset product, optionally
    restricted to per-source typical sequences (divergence < gamma).

    Whether the typicality restriction is actually necessary is open; the
    unconstrained variant is provided for experimentation.
    """
    if code.k != 2:
        raise SwError("the ML decoder is defined for two sources")
    params = TypicalityParams(gamma)
    mu_x = code.mu.marginal((0,))
    mu_y = code.mu.marginal((1,))
    best = None
    best_mass = -1.0
    for x, y in _coset_product(code, syndromes, cap):
        if constrained and not (is_typical(x, mu_x, params) and is_typical(y, mu_y, params)):
            continue
        mass = 1.0
        for xs, ys in zip(x, y):
            mass *= code.mu[xs, ys]
        if mass > best_mass:
            best, best_mass = (x, y), mass
    if best is None:
        return SwDecodeResult(x_hat=None, failure=True)
    return SwDecodeResult(x_hat=best)


def _decoder_fn(code: SwCode, decoder: str, gamma: float, cap: int):
    if decoder == "md":
        return lambda syn: sw_decode_md(code, syn, cap=cap)
    if decoder == "ml":
        return lambda syn: sw_decode_ml_typical(code, syn, gamma, cap=cap)
    if decoder == "ml_unconstrained":
        return lambda syn: sw_decode_ml_typical(code, syn, gamma, constrained=False, cap=cap)
    raise SwError(f"unknown decoder {decoder!r}")


def sw_error_exact(code: SwCode, decoder: str = "md", gamma: float = 0.0,
                   cap: int = DEFAULT_CAP) -> float:
    """Exact decoding-error probability: total mu-mass of source tuples whose
    decode differs from the input (including decoder failures)."""
    total_seqs = 1
    for m, size in zip(code.matrices, code.mu.shape):
        total_seqs *= size ** m.cols
    if total_seqs > cap:
        raise SwError(f"{total_seqs} source tuples exceed cap {cap}")
    if decoder == "md" and code.k == 2:
        return _error_exact_fast2(code, cap)
    decode = _decoder_fn(code, decoder, gamma, cap)
    cache: dict = {}
    error = 0.0
    for x_K in itertools.product(*(
        itertools.product(range(size), repeat=code.n) for size in code.mu.shape
    )):
        mass = 1.0
        for symbols in zip(*x_K):
            mass *= code.mu[symbols]
        if mass == 0.0:
            continue
        syn = sw_encode(code, x_K)
        if syn not in cache:
            cache[syn] = decode(syn)
        res = cache[syn]
        if res.failure or res.x_hat != x_K:
            error += mass
    return min(1.0, error)


def _error_exact_fast2(code: SwCode, cap: int) -> float:
    """Vectorized two-source minimum-divergence error via a full pair table.

    Enumerates all |X|^n x |Y|^n sequence pairs once, computes every pair's
    joint-type divergence and probability mass with numpy, decodes each
    syndrome pair by an argmin over the coset-product submatrix (first
    occurrence = lexicographic tie-break), and sums the mass of mismatches.
    """
    (sx, sy) = code.mu.shape
    n = code.n
    seqs_x = np.array(list(itertools.product(range(sx), repeat=n)), dtype=np.int64)
    seqs_y = np.array(list(itertools.product(range(sy), repeat=n)), dtype=np.int64)
    ma, mb = code.matrices
    syn_x = seqs_x @ ma.to_dense().T % ma.q
    syn_y = seqs_y @ mb.to_dense().T % mb.q
    pow_a = ma.q ** np.arange(ma.rows - 1, -1, -1, dtype=np.int64)
    pow_b = mb.q ** np.arange(mb.rows - 1, -1, -1, dtype=np.int64)
    idx_a = syn_x @ pow_a
    idx_b = syn_y @ pow_b

    # occurrence counts of each (x-symbol, y-symbol) cell for every pair
    counts = np.empty((len(seqs_x), len(seqs_y), sx * sy), dtype=np.int64)
    for a in range(sx):
        xa = seqs_x == a
        for b in range(sy):
            yb = seqs_y == b
            counts[:, :, a * sy + b] = xa.astype(np.int64) @ yb.astype(np.int64).T

    mu_flat = code.mu.table.reshape(-1)
    with np.errstate(divide="ignore"):
        log_mu = np.log2(mu_flat)
    nu = counts / n
    div = np.zeros(counts.shape[:2])
    mass_log = np.zeros(counts.shape[:2])
    for cell in range(sx * sy):
        c = nu[:, :, cell]
        pos = c > 0
        if mu_flat[cell] > 0:
            term = np.zeros_like(c)
            term[pos] = c[pos] * (np.log2(c[pos]) - log_mu[cell])
            div += term
            mass_log += counts[:, :, cell] * log_mu[cell]
        else:
            div[pos] = np.inf
            mass_log[pos] = -np.inf
    mass = np.exp2(mass_log)

    coset_a: dict[int, list[int]] = {}
    coset_b: dict[int, list[int]] = {}
    for i, s in enumerate(idx_a):
        coset_a.setdefault(int(s), []).append(i)
    for j, s in enumerate(idx_b):
        coset_b.setdefault(int(s), []).append(j)

    dec_x = {}
    dec_y = {}
    for a_idx, rows in coset_a.items():
        r = np.array(rows)
        for b_idx, cols in coset_b.items():
            c = np.array(cols)
            sub = div[np.ix_(r, c)]
            # first candidate within an ulp of the minimum = lex tie-break
            flat = int(np.argmax((sub <= sub.min() + TIE_TOL).ravel()))
            dec_x[(a_idx, b_idx)] = rows[flat // len(cols)]
            dec_y[(a_idx, b_idx)] = cols[flat % len(cols)]

    error = 0.0
    for i in range(len(seqs_x)):
        for j in range(len(seqs_y)):
            key = (int(idx_a[i]), int(idx_b[j]))
            if dec_x[key] != i or dec_y[key] != j:
                error += mass[i, j]
    return min(1.0, float(error))


def sw_error_mc(code: SwCode, decoder: str = "md", trials: int = 1000,
                seed: int = 0, gamma: float = 0.0, threads: int = 1,
                cap: int = DEFAULT_CAP) -> McEstimate:
    """Monte Carlo estimate of the decoding error with a Wilson interval.

    Each trial has its own derived RNG stream, so the result is identical for
    any thread count."""
    if trials < 1:
        raise SwError("trials must be >= 1")
    decode = _decoder_fn(code, decoder, gamma, cap)
    flat = code.mu.table.reshape(-1)
    shape = code.mu.shape
    rngs = spawn_rngs(seed, trials)
    cache: dict = {}

    def one_trial(rng) -> bool:
        cells = rng.choice(flat.size, size=code.n, p=flat)
        symbols = np.unravel_index(cells, shape)
        x_K = tuple(tuple(int(s) for s in col) for col in symbols)
        syn = sw_encode(code, x_K)
        if syn not in cache:
            cache[syn] = decode(syn)
        res = cache[syn]
        return res.failure or res.x_hat != x_K

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(one_trial, rngs))
    else:
        outcomes = [one_trial(rng) for rng in rngs]
    return McEstimate.from_counts(sum(outcomes), trials)


def sw_rate_check(rates: SwRates, mu: Distribution) -> dict:
    """Strict achievability check of every conditional-entropy constraint
    sum_{j in J} R_j > H(X_J | X_{J^c})."""
    k = len(mu.shape)
    if len(rates.rates) != k:
        raise SwError("one rate per source axis is required")
    h_all = entropy(mu)
    failed = []
    checks = []
    for r in range(1, k + 1):
        for J in itertools.combinations(range(k), r):
            Jc = tuple(j for j in range(k) if j not in J)
            h_cond = h_all - (entropy(mu.marginal(Jc)) if Jc else 0.0)
            lhs = sum(rates.rates[j] for j in J)
            ok = lhs > h_cond
            checks.append({"J": J, "rate_sum": lhs, "entropy": h_cond, "holds": ok})
            if not ok:
                failed.append(J)
    return {"inside": not failed, "failed": failed, "constraints": checks}
