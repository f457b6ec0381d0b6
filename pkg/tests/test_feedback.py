import numpy as np
import pytest
from hypothesis import given, strategies as st

from nccompare.feedback import (StateFeedbackMatrix, conflict_matrix, derive_demands,
                                generate_sfm)
from nccompare.fixtures import FIVE_RECEIVER_CONFLICTS, FIVE_RECEIVER_SFM


def binary_rows(max_n=6, max_k=7):
    return st.integers(1, max_n).flatmap(
        lambda n: st.integers(1, max_k).flatmap(
            lambda k: st.lists(st.lists(st.integers(0, 1), min_size=k, max_size=k), min_size=n, max_size=n)))


def test_generate_without_erasures_is_empty():
    a = generate_sfm(15, 10, 0.0, np.random.default_rng(1))
    assert a.is_empty and a.n_packets == 0 and a.n_receivers == 10


def test_generate_rejects_bad_pe():
    rng = np.random.default_rng(0)
    for pe in (-0.1, 1.0, 1.5):
        with pytest.raises(ValueError):
            generate_sfm(5, 2, pe, rng)


def test_single_column_survival_frequency():
    rng = np.random.default_rng(3)
    hits = sum(generate_sfm(1, 1, 0.2, rng).n_packets for _ in range(100_000))
    assert abs(hits / 100_000 - 0.2) <= 0.01


def test_generate_drops_unwanted_columns_and_keeps_ids():
    rng = np.random.default_rng(5)
    a = generate_sfm(15, 3, 0.2, rng)
    assert a.entries.any(axis=0).all()
    assert list(a.packet_ids) == sorted(a.packet_ids)
    assert all(1 <= p <= 15 for p in a.packet_ids)


def test_same_seed_same_matrix():
    a = generate_sfm(15, 10, 0.2, np.random.default_rng(42))
    b = generate_sfm(15, 10, 0.2, np.random.default_rng(42))
    assert a == b and a.packet_ids == b.packet_ids


def test_five_receiver_demands():
    d = derive_demands(FIVE_RECEIVER_SFM)
    assert d.t_sizes == (4, 2, 1, 2, 1, 3)
    assert d.t_total == 13
    assert d.w_sizes == (3, 2, 3, 3, 2)
    assert d.w_max == 3 and d.w_min == 2


def test_empty_two_receiver_demands():
    a = StateFeedbackMatrix.from_rows(np.zeros((2, 0), dtype=np.uint8))
    d = derive_demands(a)
    assert d.w_max == 0 and d.t_total == 0
    assert all(not w for w in d.wants)


def test_five_receiver_conflicts_match_printed():
    assert conflict_matrix(FIVE_RECEIVER_SFM) == FIVE_RECEIVER_CONFLICTS


def test_conflict_extremes():
    one = StateFeedbackMatrix.from_rows([[1] * 5])
    assert conflict_matrix(one).m0 == 0
    ident = StateFeedbackMatrix.from_rows(np.eye(6, dtype=np.uint8))
    assert conflict_matrix(ident).m0 == 15


def test_column_without_demand_rejected():
    with pytest.raises(ValueError):
        StateFeedbackMatrix(np.array([[1, 0], [1, 0]], dtype=np.uint8))


def test_distinct_matrices_can_share_conflicts():
    a = StateFeedbackMatrix.from_rows([[1, 1, 0], [0, 0, 1]])
    b = StateFeedbackMatrix.from_rows([[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    c = StateFeedbackMatrix.from_rows([[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert a != b
    assert conflict_matrix(a) == conflict_matrix(b) == conflict_matrix(c)


def test_restrict_keeps_subgraph():
    c = FIVE_RECEIVER_CONFLICTS.restrict([0, 2, 4])
    assert c.n_packets == 3
    assert c.conflict(0, 1) == FIVE_RECEIVER_CONFLICTS.conflict(0, 2)
    assert c.conflict(1, 2) == FIVE_RECEIVER_CONFLICTS.conflict(2, 4)


@given(binary_rows())
def test_duality_and_m0_count(rows):
    a = StateFeedbackMatrix.from_rows(rows)
    d = derive_demands(a)
    for n, w in enumerate(d.wants):
        for k in range(a.n_packets):
            assert (k in w) == (n in d.targets[k])
    c = conflict_matrix(a)
    k = a.n_packets
    ones = int(np.triu(c.conflicts, 1).sum())
    assert c.m0 + ones == k * (k - 1) // 2
    for i in range(k):
        for j in range(i + 1, k):
            assert c.conflict(i, j) == bool((a.entries[:, i] & a.entries[:, j]).any())


@given(binary_rows())
def test_same_support_pattern_same_conflicts(rows):
    a = StateFeedbackMatrix.from_rows(rows)
    # duplicating receivers adds no new joint wants
    b = StateFeedbackMatrix.from_rows(np.vstack([a.entries, a.entries]), a.packet_ids) if a.n_packets else a
    assert conflict_matrix(a) == conflict_matrix(b)


def _mean_m0(rng, n, k, pe, samples=1000):
    m = []
    while len(m) < samples:
        rows = (rng.random((n, k)) < pe).astype(np.uint8)
        if rows.any(axis=0).all():
            m.append(conflict_matrix(StateFeedbackMatrix.from_rows(rows)).m0)
    return float(np.mean(m))


def test_m0_decreases_with_receivers():
    rng = np.random.default_rng(11)
    means = [_mean_m0(rng, n, 8, 0.3) for n in (4, 8, 16, 32)]
    assert all(x > y for x, y in zip(means, means[1:]))


def test_compatible_pair_fraction_decays_with_receivers():
    # a pair stays compatible unless some receiver lost both packets: (1 - pe^2)^N
    rng = np.random.default_rng(12)
    kt, pe = 8, 0.3
    for n in (1, 2, 4, 8, 16):
        frac = []
        for _ in range(1000):
            a = generate_sfm(kt, n, pe, rng)
            joint = np.zeros((kt, kt), dtype=bool)
            cols = [p - 1 for p in a.packet_ids]
            if cols:
                sub = conflict_matrix(a).conflicts.astype(bool)
                joint[np.ix_(cols, cols)] = sub
            frac.append(1 - joint[np.triu_indices(kt, 1)].mean())
        assert abs(np.mean(frac) - (1 - pe ** 2) ** n) < 0.01
