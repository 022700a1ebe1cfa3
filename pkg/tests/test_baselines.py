import numpy as np
import pytest

from krerank.aggregate import original_ranking
from krerank.baselines import average_query_expansion
from krerank.core import EmbeddingSet
from krerank.errors import KTooLarge


def test_k_zero_is_original(rng):
    items = EmbeddingSet(rng.normal(size=(30, 5)))
    aqe = average_query_expansion(items, 6, k=0)
    base = original_ranking(items, 6, normalize=False)
    for a, b in zip(aqe, base):
        assert a.order.tolist() == b.order.tolist()
        assert a.distances.tobytes() == b.distances.tobytes()


def test_duplicates_leave_ranking_unchanged():
    items = EmbeddingSet([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [3.0, 1.0], [1.0, 2.0]])
    res = average_query_expansion(items, 1, k=2)
    base = original_ranking(items, 1, normalize=False)
    assert res[0].order.tolist() == base[0].order.tolist() == [0, 1, 3, 2]


def test_symmetric_neighbours_cancel():
    items = EmbeddingSet([[0, 0], [1, 0], [-1, 0], [0, 3], [0, -3.5]])
    res = average_query_expansion(items, 1, k=2)
    assert res[0].order.tolist() == [0, 1, 2, 3]
    assert res[0].distances.tolist() == [1.0, 1.0, 9.0, 12.25]


def test_hand_expansion():
    items = EmbeddingSet([[0.0], [1.0], [4.0], [-3.0]])
    res = average_query_expansion(items, 1, k=1)
    # new query = mean(0, 1) = 0.5; gallery 1 and 2 tie at 3.5 ** 2
    assert res[0].order.tolist() == [0, 1, 2]
    assert res[0].distances.tolist() == [0.25, 12.25, 12.25]


def test_k_too_large():
    items = EmbeddingSet(np.eye(4))
    with pytest.raises(KTooLarge):
        average_query_expansion(items, 1, k=3)
