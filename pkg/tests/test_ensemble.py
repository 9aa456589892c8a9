"""Ensembles, spectra, (alpha, beta) profiles, and bound verification."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from hashprop.ensemble import (
    Ensemble,
    EnsembleError,
    EnsembleProfile,
    TypeFilter,
    all_types,
    alpha_beta_from_spectrum,
    bound_lem_E,
    collision_prob,
    concat_ensembles,
    spectrum,
    spectrum_table,
    universal_profile,
    verify_bound,
    verify_strong_hash,
)


def test_type_filter_default():
    assert TypeFilter.default(4).w_min == 1
    assert TypeFilter.default(10).w_min == 1
    assert TypeFilter.default(11).w_min == 2
    assert TypeFilter(1).contains((1, 1))
    assert not TypeFilter(2).contains((1, 1))


def test_sparse_parameter_validation():
    with pytest.raises(EnsembleError):
        Ensemble.sparse(2, 2, 2, 3)  # odd tau
    with pytest.raises(EnsembleError):
        Ensemble.sparse(2, 2, 2, 0)
    with pytest.raises(Exception):
        Ensemble.sparse(4, 2, 2, 2)  # composite modulus


def test_support_sizes():
    assert Ensemble.uniform_all(2, 2, 3).support_size() == 2 ** 6
    assert Ensemble.sparse(3, 2, 2, 2).support_size() == (2 * 2) ** 4
    assert Ensemble.binning(2, 2, 3).support_size() == 3 ** 4
    prod = Ensemble.product(Ensemble.uniform_all(2, 1, 2), Ensemble.uniform_all(2, 1, 2))
    assert prod.support_size() == 16 and prod.image_size == 4


def test_enumerate_support_cap():
    with pytest.raises(EnsembleError):
        Ensemble.uniform_all(2, 4, 5).enumerate_support(cap=100)


def test_sparse_support_probabilities_sum_to_one():
    e = Ensemble.sparse(2, 2, 2, 2)
    support = e.enumerate_support()
    assert sum(p for _, p in support) == 1
    # duplicates are merged: distinct matrices only
    mats = [m for m, _ in support]
    assert len(mats) == len(set(mats))


def test_sparse_degenerate_single_row():
    """With q=2, l=1, even tau the two draws cancel: only the zero matrix."""
    e = Ensemble.sparse(2, 1, 1, 2)
    support = e.enumerate_support()
    assert len(support) == 1
    m, p = support[0]
    assert p == 1 and m.entries == ()


def test_uniform_collision_prob_exact():
    for l in (1, 2):
        e = Ensemble.uniform_all(2, l, 2)
        support = e.enumerate_support()
        domain = list(e.domain())
        for u, u2 in itertools.combinations(domain, 2):
            assert collision_prob(e, u, u2, support=support) == Fraction(1, 2 ** l)


def test_uniform_spectrum_matches_type_class():
    e = Ensemble.uniform_all(2, 2, 3)
    table = spectrum_table(e)
    # S(uniform, t) = |C_t| q^{-l}
    sizes = {(2, 1): 3, (1, 2): 3, (0, 3): 1}
    for t, c in sizes.items():
        assert table[t] == Fraction(c, 4)
    assert spectrum(e, (2, 1)) == Fraction(3, 4)
    with pytest.raises(EnsembleError):
        spectrum_table(Ensemble.binning(2, 2, 2))


def test_sparse_profile_exact_and_strong_hash():
    e = Ensemble.sparse(2, 2, 2, 2)
    profile = alpha_beta_from_spectrum(e, TypeFilter.default(2))
    assert profile.alpha == 2 and profile.beta == 0
    reports = verify_strong_hash(e, profile)
    assert all(r["holds"] for r in reports)


def test_universal_profile_strong_hash():
    e = Ensemble.uniform_all(2, 2, 2)
    profile = universal_profile(e)
    assert (profile.alpha, profile.beta) == (1, 0)
    assert all(r["holds"] for r in verify_strong_hash(e, profile))


def test_profile_validation():
    with pytest.raises(EnsembleError):
        EnsembleProfile(alpha=Fraction(-1), beta=Fraction(0), image_size=2)


def test_all_types_excludes_zero():
    ts = all_types(3, 2)
    assert (3, 0) not in ts
    assert len(ts) == 3
    assert all(sum(t) == 3 for t in ts)


def test_concat_ensembles_profile():
    ea = Ensemble.uniform_all(2, 1, 2)
    eb = Ensemble.uniform_all(2, 1, 2)
    prod, profile = concat_ensembles(ea, eb, universal_profile(ea), universal_profile(eb))
    assert prod.family == "product"
    assert profile.alpha == 1 and profile.beta == 0 and profile.image_size == 4


def test_bounds_hold_on_uniform():
    e = Ensemble.uniform_all(2, 1, 2)
    profile = universal_profile(e)
    support = e.enumerate_support()
    domain = list(e.domain())
    out = verify_bound("whash", e, profile, domain[:3], domain[1:], support=support)
    assert out["holds"]
    out = verify_bound("crp", e, profile, domain, domain[0], support=support)
    assert out["holds"]
    out = verify_bound("sp", e, profile, domain[:2], support=support)
    assert out["holds"]
    out = bound_lem_E(e, domain[1], support=support)
    assert out["holds"] and out["lhs"] == Fraction(1, 2)


def test_cross_and_multi_bounds_hold():
    ea = Ensemble.uniform_all(2, 1, 2)
    eb = Ensemble.sparse(2, 1, 2, 2)
    pa = universal_profile(ea)
    pb = alpha_beta_from_spectrum(eb, TypeFilter.default(2))
    da = list(ea.domain())
    pairs = [(u, v) for u in da[:2] for v in da[:2]]
    assert verify_bound("cross_crp", ea, eb, pa, pb, pairs, pairs[0])["holds"]
    assert verify_bound("cross_sp", ea, eb, pa, pb, pairs)["holds"]
    triples = [(u, u, u) for u in da]
    es = [ea, ea, ea]
    ps = [pa, pa, pa]
    assert verify_bound("multi_crp", es, ps, triples, triples[0])["holds"]
    assert verify_bound("multi_sp", es, ps, triples)["holds"]
    with pytest.raises(EnsembleError):
        verify_bound("nope")


def test_sampling_reproducible():
    e = Ensemble.sparse(2, 3, 4, 2)
    a = e.sample(np.random.default_rng(5))
    b = e.sample(np.random.default_rng(5))
    assert a == b
    with pytest.raises(EnsembleError):
        Ensemble.binning(2, 2, 2).sample(np.random.default_rng(0))


def test_sample_matches_support_distribution():
    """Empirical sparse sampling frequencies track the exact support."""
    e = Ensemble.sparse(2, 2, 1, 2)
    support = dict(e.enumerate_support())
    rng = np.random.default_rng(123)
    counts: dict = {}
    trials = 4000
    for _ in range(trials):
        m = e.sample(rng)
        counts[m] = counts.get(m, 0) + 1
    assert set(counts) <= set(support)
    for m, p in support.items():
        assert counts.get(m, 0) / trials == pytest.approx(float(p), abs=0.05)
