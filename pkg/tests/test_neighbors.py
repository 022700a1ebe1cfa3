import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from krerank.distance import pairwise_distance
from krerank.errors import KTooLarge
from krerank.neighbors import (
    NeighborTable,
    all_expanded,
    all_reciprocal,
    expand_reciprocal,
    half_size,
    k_nearest,
    k_reciprocal,
)
from conftest import line


def table_of(*xs):
    d = pairwise_distance(line(*xs)).values
    return NeighborTable.from_distances(d), d


@pytest.mark.parametrize("k1, h", [(1, 1), (2, 1), (7, 4), (20, 10), (21, 11)])
def test_half_size_rounds_half_up(k1, h):
    assert half_size(k1) == h == oracles.half(k1)


class TestKNearest:
    def test_hand_case(self):
        t, _ = table_of(0, 1, 5)
        assert k_nearest(t, 0, 2).tolist() == [0, 1]

    def test_k1_is_self(self):
        t, _ = table_of(0, 1, 5, 2)
        for i in range(4):
            assert k_nearest(t, i, 1).tolist() == [i]

    def test_duplicate_points_keep_self_first(self):
        # Self is pinned to rank 0 even when another item sits at distance 0.
        t, _ = table_of(3, 3, 8)
        assert k_nearest(t, 1, 1).tolist() == [1]
        assert k_nearest(t, 1, 2).tolist() == [1, 0]
        assert k_nearest(t, 0, 2).tolist() == [0, 1]

    def test_ties_by_index(self):
        t, _ = table_of(0, -1, 1, 5)
        assert k_nearest(t, 0, 3).tolist() == [0, 1, 2]

    def test_k_too_large(self):
        t, _ = table_of(0, 1, 2)
        with pytest.raises(KTooLarge):
            k_nearest(t, 0, 3)

    def test_rows_are_permutations(self, rng):
        d = pairwise_distance(line(*rng.integers(0, 5, size=20))).values
        t = NeighborTable.from_distances(d)
        for i, row in enumerate(t.order):
            assert sorted(row.tolist()) == list(range(20))
            assert row[0] == i


class TestKReciprocal:
    def test_hand_case(self):
        t, _ = table_of(0, 1, 2, 10)
        assert k_reciprocal(t, 0, 2).as_set() == {0, 1}

    def test_outlier_only_self(self):
        t, _ = table_of(0, 1, 2, 100)
        assert k_reciprocal(t, 3, 2).as_set() == {3}

    def test_saturation(self):
        # With self counted, k = n - 1 drops exactly the farthest item of
        # each list, so only pairs where neither is the other's farthest remain.
        t, _ = table_of(0, 4, 1, 9, 7)
        farthest = t.order[:, -1]
        for i in range(5):
            expected = {j for j in range(5) if farthest[i] != j and farthest[j] != i}
            assert k_reciprocal(t, i, 4).as_set() == expected
        assert k_reciprocal(t, 2, 4).as_set() == {0, 1, 2, 4}
        assert k_reciprocal(t, 3, 4).as_set() == {3, 4}

    def test_owner_always_member(self, rng):
        d = pairwise_distance(line(*rng.normal(size=25))).values
        t = NeighborTable.from_distances(d)
        for k in (1, 3, 8):
            for i in range(25):
                assert i in k_reciprocal(t, i, k)


class TestExpansion:
    def test_collinear_matches_oracle(self):
        t, d = table_of(0, 1, 2, 3, 50, 51)
        got = expand_reciprocal(t, 0, 4).as_set()
        assert got == oracles.expanded(d, 0, 4) == {0, 1, 2, 3}

    def test_hard_positive_recovered(self):
        # A member C of R(Q, 5) whose R(C, 3) contains G, which R(Q, 5) misses.
        t, d = table_of(6, 27, 29, 1, 4, 18, 15, 35, 20)
        q, g = 1, 6
        base = k_reciprocal(t, q, 5).as_set()
        assert base == {1, 2, 5, 7, 8}
        assert g not in base
        bridges = [c for c in base if g in k_reciprocal(t, c, 3)]
        assert bridges
        assert expand_reciprocal(t, q, 5).as_set() == {1, 2, 5, 6, 7, 8}

    def test_nothing_to_add(self):
        t, _ = table_of(0, 1, 2, 100, 101, 102)
        for i in range(6):
            assert expand_reciprocal(t, i, 2).as_set() == k_reciprocal(t, i, 2).as_set()


@settings(max_examples=60, deadline=None)
@given(
    pts=st.lists(st.integers(0, 30), min_size=3, max_size=25),
    data=st.data(),
)
def test_engine_equals_oracle(pts, data):
    d = pairwise_distance(line(*pts)).values
    n = len(pts)
    k = data.draw(st.integers(1, n - 1))
    t = NeighborTable.from_distances(d)
    recip = all_reciprocal(t, k)
    grown = all_expanded(t, k)
    for i in range(n):
        assert k_nearest(t, i, k).tolist() == oracles.knn(d, i, k)
        assert set(recip[i].tolist()) == oracles.reciprocal(d, i, k)
        assert set(grown[i].tolist()) == oracles.expanded(d, i, k)
        assert set(recip[i].tolist()) <= set(grown[i].tolist())


@settings(max_examples=40, deadline=None)
@given(pts=st.lists(st.floats(-10, 10), min_size=4, max_size=30), k=st.integers(1, 3))
def test_set_properties(pts, k):
    d = pairwise_distance(line(*pts)).values
    t = NeighborTable.from_distances(d)
    n = len(pts)
    for i in range(n):
        r = k_reciprocal(t, i, k).as_set()
        assert r <= set(k_nearest(t, i, k).tolist())
        if k + 1 < n:
            assert set(k_nearest(t, i, k).tolist()) <= set(k_nearest(t, i, k + 1).tolist())
        for j in r:
            assert i in k_reciprocal(t, j, k)
