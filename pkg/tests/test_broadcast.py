"""Broadcast coding: joint assembly, rate feasibility, encode/decode, error,
kappa schedules, and the random code search."""

import itertools
import math

import numpy as np
import pytest

from hashprop.broadcast import (
    BcCode,
    BcError,
    BcProblem,
    RateParams,
    bc_build_joint,
    bc_check_params,
    bc_code_search,
    bc_decode,
    bc_encode,
    bc_error_exact,
    bc_error_mc,
    bc_feasible_params,
    bc_rate_region,
    kappa_schedule,
    rows_for_rate,
)
from hashprop.ensemble import Ensemble
from hashprop.gf import FieldMatrix
from hashprop.types import CondDistribution, Distribution


def split_channel() -> BcProblem:
    """Noiseless split channel: X = (U, V) in {0..3}, Y = U, Z = V."""
    table = np.zeros((2, 2, 4))
    for x in range(4):
        table[x >> 1, x & 1, x] = 1.0
    channel = CondDistribution(table, given_shape=(4,))
    mu_u = Distribution(np.full((2, 2), 0.25))
    f = np.array([[0, 1], [2, 3]], dtype=np.int64)
    return BcProblem(channel=channel, mu_u=mu_u, f=f)


def test_problem_validation():
    p = split_channel()
    assert p.deterministic and p.k == 2
    with pytest.raises(BcError):
        BcProblem(channel=p.channel, mu_u=p.mu_u, f=np.array([[0, 4], [1, 2]]))
    with pytest.raises(BcError):
        BcProblem(channel=p.channel, mu_u=p.mu_u, f=np.zeros((2, 2, 3)))
    stoch = np.zeros((2, 2, 4))
    stoch[..., 0] = 1.0
    sp = BcProblem(channel=p.channel, mu_u=p.mu_u, f=stoch)
    assert not sp.deterministic
    assert sp.x_given_u((1, 1))[0] == 1.0


def test_build_joint_mass_and_structure():
    p = split_channel()
    joint = bc_build_joint(p)
    assert joint.table.shape == (2, 2, 4, 2, 2)
    assert joint.table.sum() == pytest.approx(1.0)
    # noiseless: Y = U and Z = V hold with probability one
    for u, v in itertools.product(range(2), repeat=2):
        assert joint[u, v, 2 * u + v, u, v] == pytest.approx(0.25)


def test_rate_region_split_channel():
    p = split_channel()
    # I(U;Y) = I(V;Z) = 1 bit, independent auxiliaries: region is R1,R2 < 1
    out = bc_rate_region(p, (0.5, 0.5))
    assert out["inside"]
    sums = {c["J"]: c["bound"] for c in out["constraints"]}
    assert sums[(0,)] == pytest.approx(1.0)
    assert sums[(0, 1)] == pytest.approx(2.0)
    assert not bc_rate_region(p, (1.0, 0.5))["inside"]  # strict
    with pytest.raises(BcError):
        bc_rate_region(p, (0.5,))


def test_rate_params_validation():
    with pytest.raises(BcError):
        RateParams(pairs=((0.1, 0.5),), eps=0.0)


def test_feasible_params_split_channel():
    p = split_channel()
    params = bc_feasible_params(p, (0.5, 0.5))
    assert params is not None
    assert bc_check_params(p, params)["holds"]
    # independent auxiliaries force the relaxed lower-bound margin
    assert params.relaxed
    for (r, R), rate in zip(params.pairs, (0.5, 0.5)):
        assert R == rate and r > 0
    assert bc_feasible_params(p, (1.2, 0.5)) is None


def _split_code(n: int = 2) -> BcCode:
    a = FieldMatrix.from_dense(2, [[1, 0], [0, 1]][: n - 1])
    ap = FieldMatrix.from_dense(2, [[1, 1]])
    pair = (FieldMatrix.from_dense(2, [[1, 0]]), ap)
    return BcCode(pairs=(pair, pair), syndromes=((0,), (0,)))


def test_code_validation_and_rates():
    code = _split_code()
    assert code.k == 2 and code.n == 2
    assert code.rates() == ((0.5, 0.5), (0.5, 0.5))
    assert code.message_space(0) == [(0,), (1,)]
    with pytest.raises(BcError):
        BcCode(pairs=code.pairs, syndromes=((0, 1), (0,)))
    bad = FieldMatrix.zeros(2, 1, 2)  # zero row: image is {0}
    with pytest.raises(BcError):
        BcCode(pairs=((bad, code.pairs[0][1]),) * 2, syndromes=((1,), (0,)))


def test_encode_decode_round_trip():
    p = split_channel()
    code = _split_code()
    for m0 in code.message_space(0):
        for m1 in code.message_space(1):
            enc = bc_encode(code, p, (m0, m1))
            assert not enc.failure
            # noiseless channel: y_j is determined by x
            y0 = tuple(x >> 1 for x in enc.x)
            y1 = tuple(x & 1 for x in enc.x)
            assert bc_decode(code, p, 0, y0, variant="ml") == m0
            assert bc_decode(code, p, 1, y1, variant="ml") == m1
            assert bc_decode(code, p, 0, y0, variant="md") == m0
    with pytest.raises(BcError):
        bc_encode(code, p, ((0,),))
    with pytest.raises(BcError):
        bc_decode(code, p, 0, (0, 0), variant="nope")


def test_encode_stochastic_map_needs_rng():
    p = split_channel()
    stoch = np.zeros((2, 2, 4))
    for u, v in itertools.product(range(2), repeat=2):
        stoch[u, v, 2 * u + v] = 1.0
    sp = BcProblem(channel=p.channel, mu_u=p.mu_u, f=stoch)
    code = _split_code()
    with pytest.raises(BcError):
        bc_encode(code, sp, ((0,), (0,)))
    enc = bc_encode(code, sp, ((0,), (0,)), rng=np.random.default_rng(0))
    assert not enc.failure


def test_error_exact_zero_on_noiseless_code():
    p = split_channel()
    code = _split_code()
    assert bc_error_exact(code, p, variant="ml") == 0.0
    assert bc_error_exact(code, p, variant="md") == 0.0


def test_error_exact_oracle_small():
    """Independent direct computation of the error on a tiny instance."""
    p = split_channel()
    code = _split_code()
    spaces = [code.message_space(j) for j in range(2)]
    wrong = 0.0
    p_m = 1.0 / (len(spaces[0]) * len(spaces[1]))
    for m_K in itertools.product(*spaces):
        enc = bc_encode(code, p, m_K)
        y0 = tuple(x >> 1 for x in enc.x)
        y1 = tuple(x & 1 for x in enc.x)
        ok = (bc_decode(code, p, 0, y0) == m_K[0]
              and bc_decode(code, p, 1, y1) == m_K[1])
        if not ok:
            wrong += p_m
    assert bc_error_exact(code, p) == pytest.approx(wrong)


def test_error_mc_matches_exact():
    p = split_channel()
    code = _split_code()
    est = bc_error_mc(code, p, trials=200, seed=3)
    assert est.errors == 0 and est.ci_lo == 0.0
    with pytest.raises(BcError):
        bc_error_mc(code, p, trials=0)


def test_kappa_schedule_power_rule():
    ns = (4, 8, 16, 32)
    betas = [tuple(2.0 ** -n for n in ns)]
    sched = kappa_schedule(ns, betas, xi=0.5)
    assert sched.rule == "power"
    assert sched.kappa == tuple(float(n) ** 0.5 for n in ns)
    assert sched.checks["k2_product_vanishes"]
    assert sched.checks["k3_subexponential"]


def test_kappa_schedule_inverse_sqrt_rule():
    ns = (4, 8, 16, 32)
    betas = [(0.5, 0.5, 0.5, 0.5)]  # constant beta: n^xi rule must be refused
    sched = kappa_schedule(ns, betas, xi=0.5)
    assert sched.rule == "inverse-sqrt-beta"
    assert sched.kappa == tuple(1.0 / math.sqrt(0.5) for _ in ns)
    assert not sched.checks["k1_grows"]  # constant kappa is flagged
    with pytest.raises(BcError):
        kappa_schedule(ns, betas, xi=0.0)
    with pytest.raises(BcError):
        kappa_schedule(ns, [(0.5, 0.5)], xi=0.5)


def test_rows_for_rate_half_up():
    assert rows_for_rate(0.75, 4, 2) == 3
    assert rows_for_rate(0.75, 6, 2) == 5  # 4.5 rounds half up
    assert rows_for_rate(0.75, 8, 2) == 6
    assert rows_for_rate(1.0, 3, 4) == 2  # log2(4) = 2 bits per symbol
    assert rows_for_rate(0.0, 5, 2) == 0


def test_code_search_finds_zero_error():
    p = split_channel()
    params = bc_feasible_params(p, (0.5, 0.5))
    n = 4
    la = rows_for_rate(params.pairs[0][0], n, 2)
    lr = rows_for_rate(0.5, n, 2)
    ens = tuple(
        (Ensemble.uniform_all(2, la, n), Ensemble.uniform_all(2, lr, n))
        for _ in range(2)
    )
    out = bc_code_search(p, params, ens, tries=16, seed=0)
    assert out["error"] == 0.0
    assert out["tries"] <= 16
    assert out["requested_rates"] == params.pairs
    assert len(out["realized_rates"]) == 2
    with pytest.raises(BcError):
        bc_code_search(p, params, ens, tries=0, seed=0)
