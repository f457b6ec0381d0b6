import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nccompare.feedback import StateFeedbackMatrix, conflict_matrix, derive_demands, generate_sfm
from nccompare.fixtures import FIVE_RECEIVER_SFM
from nccompare.idnc import (DiversityProfile, expected_delay, idnc_delay_report, idnc_expected_decoded,
                            rlnc_delay_report, v_idnc_pdf, v_n_pdf)
from nccompare.solver import Collection, EncodingSet, solve
from nccompare.sim import run_semi_online_idnc


def five_receiver():
    d = derive_demands(FIVE_RECEIVER_SFM)
    return d, solve(conflict_matrix(FIVE_RECEIVER_SFM), d).collection


def profile_of(diversities):
    """A collection whose packet k appears in diversities[k] singleton sets."""
    sets = [EncodingSet((k,)) for k, d in enumerate(diversities) for _ in range(d)]
    return DiversityProfile.of(Collection(tuple(sets), len(diversities)))


def enumerate_v_n(wants, d, pe):
    """Sum over every residual demand vector, as a direct product of per-packet terms."""
    out = np.zeros(len(wants) + 1)
    for residual in itertools.product((0, 1), repeat=len(wants)):
        p = 1.0
        for k, r in zip(wants, residual):
            miss = pe ** d[k]
            p *= miss if r else 1 - miss
        out[sum(residual)] += p
    return out


def test_profile_cumulative():
    _, col = five_receiver()
    prof = DiversityProfile.of(col)
    assert prof.n_slots == 3
    assert prof.d.tolist() == [1, 1, 2, 1, 1, 1]
    assert prof.d_at[2].tolist() == [0, 1, 1, 2]  # packet 3 appears in slots 1 and 3
    assert (np.diff(prof.d_at, axis=1) >= 0).all()


def test_v_n_examples():
    pe = 0.3
    assert v_n_pdf([0], profile_of([2]), pe).pmf == pytest.approx((1 - pe ** 2, pe ** 2))
    assert v_n_pdf([0, 1], profile_of([1, 1]), pe).prob(1) == pytest.approx(2 * pe * (1 - pe))
    assert v_n_pdf([0, 1], profile_of([1, 3]), 0.0).pmf[0] == 1.0
    with pytest.raises(ValueError):
        v_n_pdf([], profile_of([1]), pe)
    with pytest.raises(ValueError):
        v_n_pdf([1], profile_of([1, 0]), pe)


@given(st.lists(st.integers(1, 4), min_size=1, max_size=10), st.floats(0, 0.95))
def test_convolution_matches_enumeration(d, pe):
    wants = list(range(len(d)))
    got = v_n_pdf(wants, profile_of(d), pe)
    assert np.array(got.pmf) == pytest.approx(enumerate_v_n(wants, d, pe), abs=1e-12)
    assert abs(sum(got.pmf) - 1) <= 1e-9


@given(st.lists(st.integers(1, 4), min_size=1, max_size=8), st.integers(0, 7), st.floats(0.01, 0.99))
def test_more_diversity_more_likely_done(d, which, pe):
    k = which % len(d)
    bumped = list(d)
    bumped[k] += 1
    wants = list(range(len(d)))
    assert v_n_pdf(wants, profile_of(bumped), pe).prob(0) >= v_n_pdf(wants, profile_of(d), pe).prob(0) - 1e-15


def test_v_idnc_erasure_free_and_single_receiver():
    _, col = five_receiver()
    assert v_idnc_pdf(FIVE_RECEIVER_SFM, col, 0.0).prob(0) == 1.0
    a = StateFeedbackMatrix.from_rows([[1, 1, 1]])
    sol = solve(conflict_matrix(a), derive_demands(a))
    sys_pdf = v_idnc_pdf(a, sol.collection, 0.25)
    one = v_n_pdf([0, 1, 2], DiversityProfile.of(sol.collection), 0.25)
    assert sys_pdf.pmf == pytest.approx(one.pmf)
    assert not sys_pdf.exact


def test_v_idnc_zero_mass_is_product():
    _, col = five_receiver()
    d = derive_demands(FIVE_RECEIVER_SFM)
    prof = DiversityProfile.of(col)
    pe = 0.2
    prod = np.prod([v_n_pdf(w, prof, pe).prob(0) for w in d.wants])
    assert v_idnc_pdf(FIVE_RECEIVER_SFM, col, pe).prob(0) == pytest.approx(prod)


def test_v_idnc_support_within_collection_size():
    a = generate_sfm(15, 10, 0.2, np.random.default_rng(6))
    sol = solve(conflict_matrix(a), derive_demands(a))
    v = v_idnc_pdf(a, sol.collection, 0.2)
    assert v.support_min == 0 and v.support_max == sol.u_idnc
    assert sum(v.pmf) == pytest.approx(1, abs=1e-9)


def test_v_idnc_rejects_partial_cover():
    part = Collection((EncodingSet((0, 2)),), 6)
    with pytest.raises(ValueError):
        v_idnc_pdf(FIVE_RECEIVER_SFM, part, 0.2)


def test_expected_decoded_five_receiver():
    d, col = five_receiver()
    assert [idnc_expected_decoded(d, col, 0.0, u) for u in (1, 2, 3)] == [5, 5, 3]
    with pytest.raises(ValueError):
        idnc_expected_decoded(d, col, 0.0, 4)


def test_expected_decoded_single_packet():
    d = derive_demands(StateFeedbackMatrix.from_rows([[1]]))
    col = Collection((EncodingSet((0,)),), 1)
    assert idnc_expected_decoded(d, col, 0.2, 1) == pytest.approx(0.8)


def test_repeat_transmission_adds_nothing_without_erasures():
    d = derive_demands(StateFeedbackMatrix.from_rows([[1]]))
    col = Collection((EncodingSet((0,)), EncodingSet((0,))), 1)
    assert idnc_expected_decoded(d, col, 0.0, 2) == 0.0
    assert idnc_expected_decoded(d, col, 0.5, 2) == pytest.approx(0.25)


def test_delays_five_receiver():
    d, col = five_receiver()
    ri, rr = idnc_delay_report(d, col, 0.0), rlnc_delay_report(d, 0.0)
    assert Fraction(ri.expected_delay).limit_denominator(100) == Fraction(24, 13)
    assert abs(ri.expected_delay - 24 / 13) < 1e-12
    assert abs(rr.expected_delay - 35 / 13) < 1e-12
    assert ri.to_dict()["expected_decoded"] == [5, 5, 3]
    assert expected_delay([13]) == 1.0
    with pytest.raises(ValueError):
        expected_delay([0, 0])


@given(st.integers(0, 2**31 - 1), st.integers(1, 8))
def test_erasure_free_delay_matches_trace(seed, n):
    a = generate_sfm(10, n, 0.3, np.random.default_rng(seed))
    if a.is_empty:
        return
    d = derive_demands(a)
    col = solve(conflict_matrix(a), d).collection
    rep = idnc_delay_report(d, col, 0.0)
    assert sum(rep.expected_decoded) == d.t_total
    trace = run_semi_online_idnc(a, 0.0, np.random.default_rng(0))
    assert rep.expected_delay == pytest.approx(trace.average_delay(), abs=1e-12)
    assert 1 <= rep.expected_delay <= len(col)
