import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveharm.indexing import (
    AngularIndex,
    MultiIndex,
    count_upto,
    enumerate_multi_indices,
    index_arrays,
    multinomial,
    rank,
    stars_and_bars,
    unrank,
)

ORDER = [(0, 0), (1, 0), (1, -1), (1, 1), (2, 0), (2, -1), (2, 1), (2, -2), (2, 2), (3, 0)]


def test_enumeration_order():
    assert [tuple(unrank(n)) for n in range(len(ORDER))] == ORDER
    assert sorted(AngularIndex(*x) for x in reversed(ORDER)) == [AngularIndex(*x) for x in ORDER]


@pytest.mark.parametrize("idx,expected", [((0, 0), 0), ((2, -2), 7), ((3, 0), 9)])
def test_rank_examples(idx, expected):
    assert rank(*idx) == expected


@given(st.integers(min_value=0, max_value=10_000))
def test_rank_unrank_roundtrip(n):
    idx = unrank(n)
    assert abs(idx.m) <= idx.l
    assert idx.rank == n


@given(st.integers(0, 60).flatmap(lambda l: st.tuples(st.just(l), st.integers(-l, l))))
def test_unrank_rank_roundtrip(lm):
    assert tuple(unrank(rank(*lm))) == lm


def test_invalid_index_rejected():
    with pytest.raises(ValueError):
        AngularIndex(1, 2)
    with pytest.raises(ValueError):
        rank(-1, 0)


def test_conjugate():
    assert AngularIndex(2, 1).conjugate() == AngularIndex(2, -1)
    assert AngularIndex(3, 0).conjugate() == AngularIndex(3, 0)
    assert AngularIndex(5, -4).conjugate().conjugate() == AngularIndex(5, -4)


def test_steps_and_counts():
    assert AngularIndex(1, 1) + 1 == AngularIndex(2, 0)
    assert AngularIndex(2, 0) - 1 == AngularIndex(1, 1)
    assert count_upto((2, 2)) == 9
    assert count_upto((2, -2)) == 8
    ls, ms = index_arrays(10)
    assert list(zip(ls.tolist(), ms.tolist())) == ORDER


def test_multinomial_examples():
    assert multinomial(MultiIndex({(0, 0): 2})) == 1
    assert multinomial(MultiIndex({(0, 0): 1, (1, 0): 1})) == 2
    assert multinomial(MultiIndex({(0, 0): 1, (1, 0): 1, (1, 1): 1})) == 6


def test_multiindex_structure():
    d = MultiIndex({(1, 0): 2, (0, 0): 1, (2, 1): 0})
    assert d.capacity == 3
    assert d.support == AngularIndex(1, 0)
    assert d[(1, 0)] == 2 and d[(2, 1)] == 0
    assert d + MultiIndex.unit((0, 0)) == MultiIndex({(0, 0): 2, (1, 0): 2})
    assert hash(d) == hash(MultiIndex({(0, 0): 1, (1, 0): 2}))
    assert MultiIndex().support is None
    assert d.degree() == 2
    with pytest.raises(ValueError):
        MultiIndex({(0, 0): -1})


def test_enumeration_counts():
    assert list(enumerate_multi_indices(1, (0, 0))) == [MultiIndex({(0, 0): 1})]
    two = list(enumerate_multi_indices(2, (1, 1)))
    assert len(two) == 10 == stars_and_bars(2, 4)
    assert len(set(two)) == 10
    three = list(enumerate_multi_indices(3, (1, 0)))
    assert len(three) == 4
    assert all(d.capacity == 3 and d.support <= AngularIndex(1, 0) for d in three)


@given(st.integers(1, 5), st.integers(0, 8))
def test_enumeration_matches_stars_and_bars(cap, top):
    items = list(enumerate_multi_indices(cap, unrank(top)))
    assert len(items) == math.comb(cap + top, top)
    assert all(d.capacity == cap for d in items)


def test_enumeration_slot_restriction():
    items = list(enumerate_multi_indices(2, (2, 2), slots=[0, 6]))
    assert len(items) == 3
    with pytest.raises(ValueError):
        list(enumerate_multi_indices(2, (1, 1), slots=[5]))
    with pytest.raises(ValueError):
        list(enumerate_multi_indices(0, (1, 1)))
