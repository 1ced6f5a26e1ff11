"""Ordered angular indices ``(l, m)`` and finitely supported multi-indices.

Indices are ordered by degree, then by ``|m|``, with ``-|m|`` before
``+|m|``::

    (0,0) < (1,0) < (1,-1) < (1,1) < (2,0) < (2,-1) < (2,1) < (2,-2) < ...

Ranks are 0-based positions in that order, so an index set truncated at
``L`` is the rank range ``0 .. rank(L)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from math import isqrt
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "AngularIndex",
    "MultiIndex",
    "count_upto",
    "enumerate_multi_indices",
    "index_arrays",
    "multinomial",
    "rank",
    "stars_and_bars",
    "unrank",
]


def _check(l: int, m: int) -> None:
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid angular index (l={l}, m={m}): need |m| <= l")


def rank(l: int, m: int) -> int:
    """0-based position of ``(l, m)`` in the index order."""
    _check(l, m)
    if m == 0:
        return l * l
    return l * l + 2 * abs(m) - (1 if m < 0 else 0)


def unrank(n: int) -> "AngularIndex":
    if n < 0:
        raise ValueError(f"rank must be non-negative, got {n}")
    l = isqrt(n)
    r = n - l * l
    if r == 0:
        return AngularIndex(l, 0)
    a = (r + 1) // 2
    return AngularIndex(l, -a if r % 2 else a)


@total_ordering
@dataclass(frozen=True)
class AngularIndex:
    """Degree/order pair with ``|m| <= l``."""

    l: int
    m: int

    def __post_init__(self) -> None:
        _check(self.l, self.m)

    @property
    def rank(self) -> int:
        return rank(self.l, self.m)

    @classmethod
    def from_rank(cls, n: int) -> "AngularIndex":
        return unrank(n)

    def conjugate(self) -> "AngularIndex":
        return AngularIndex(self.l, -self.m)

    def __lt__(self, other: "AngularIndex") -> bool:
        if not isinstance(other, AngularIndex):
            return NotImplemented
        return self.rank < other.rank

    def __add__(self, step: int) -> "AngularIndex":
        return unrank(self.rank + step)

    def __sub__(self, step: int) -> "AngularIndex":
        return unrank(self.rank - step)

    def __iter__(self):
        yield self.l
        yield self.m


def count_upto(bound: AngularIndex | tuple[int, int]) -> int:
    """Number of indices ``<= bound``."""
    l, m = bound
    return rank(l, m) + 1


def index_arrays(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Degrees and orders of the first ``count`` ranks as integer arrays."""
    n = np.arange(count)
    ls = np.array([isqrt(i) for i in range(count)], dtype=int)
    r = n - ls * ls
    a = (r + 1) // 2
    ms = np.where(r == 0, 0, np.where(r % 2 == 1, -a, a))
    return ls, ms


class MultiIndex:
    """Finitely supported map from angular indices to positive multiplicities.

    Stored as a sorted tuple of ``(rank, multiplicity)`` pairs; instances are
    hashable and compare by content.
    """

    __slots__ = ("_items",)

    def __init__(self, entries: Mapping[AngularIndex | tuple[int, int] | int, int] | None = None):
        acc: dict[int, int] = {}
        for key, mult in (entries or {}).items():
            r = key if isinstance(key, int) else rank(*key)
            if r < 0:
                raise ValueError(f"invalid rank {r}")
            if mult < 0:
                raise ValueError(f"multiplicity must be non-negative, got {mult} for {key}")
            if mult:
                acc[r] = acc.get(r, 0) + int(mult)
        self._items = tuple(sorted(acc.items()))

    @classmethod
    def _from_items(cls, items) -> "MultiIndex":
        obj = cls.__new__(cls)
        obj._items = tuple(items)
        return obj

    @classmethod
    def unit(cls, idx: AngularIndex | tuple[int, int], mult: int = 1) -> "MultiIndex":
        """``mult * e_idx``."""
        return cls({tuple(idx): mult})

    @property
    def items(self) -> tuple[tuple[int, int], ...]:
        return self._items

    @property
    def capacity(self) -> int:
        return sum(v for _, v in self._items)

    @property
    def support(self) -> AngularIndex | None:
        """Largest index with non-zero multiplicity (``None`` when empty)."""
        return unrank(self._items[-1][0]) if self._items else None

    def degree(self) -> int:
        """Total harmonic degree ``sum_l l * d(l)``."""
        return sum(unrank(r).l * v for r, v in self._items)

    def frequency_bound(self) -> int:
        """``sum_l |m| * d(l)``, a bound on the net azimuthal frequency."""
        return sum(abs(unrank(r).m) * v for r, v in self._items)

    def __getitem__(self, idx) -> int:
        r = idx if isinstance(idx, int) else rank(*idx)
        for key, v in self._items:
            if key == r:
                return v
        return 0

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        acc = dict(self._items)
        for r, v in other._items:
            acc[r] = acc.get(r, 0) + v
        return MultiIndex._from_items(sorted(acc.items()))

    def __eq__(self, other) -> bool:
        return isinstance(other, MultiIndex) and self._items == other._items

    def __hash__(self) -> int:
        return hash(self._items)

    def __repr__(self) -> str:
        body = " + ".join(
            f"{v}*e{tuple(unrank(r))}" if v > 1 else f"e{tuple(unrank(r))}" for r, v in self._items
        )
        return f"MultiIndex({body or '0'})"


def multinomial(d: MultiIndex) -> int:
    """Exact ``|d|! / prod d(l)!`` as a Python integer."""
    out = math.factorial(d.capacity)
    for _, v in d.items:
        out //= math.factorial(v)
    return out


def stars_and_bars(capacity: int, slots: int) -> int:
    return math.comb(capacity + slots - 1, slots - 1)


def _compositions(capacity: int, slots: int) -> Iterator[tuple[int, ...]]:
    # lexicographic in (d_0, d_1, ...) with multiplicities as digits
    if slots == 1:
        yield (capacity,)
        return
    for first in range(capacity + 1):
        for rest in _compositions(capacity - first, slots - 1):
            yield (first,) + rest


def enumerate_multi_indices(
    capacity: int,
    support_bound: AngularIndex | tuple[int, int],
    slots: list[int] | None = None,
) -> Iterator[MultiIndex]:
    """All ``d`` with ``|d| = capacity`` and ``supp d <= support_bound``.

    ``slots`` optionally restricts the admissible ranks to a subset (used to
    skip indices whose coefficient is zero); it must lie within the bound.
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    top = rank(*support_bound)
    ranks = list(range(top + 1)) if slots is None else sorted(set(slots))
    if ranks and (ranks[0] < 0 or ranks[-1] > top):
        raise ValueError("slots must lie within the support bound")
    if not ranks:
        return
    for digits in _compositions(capacity, len(ranks)):
        yield MultiIndex._from_items((r, v) for r, v in zip(ranks, digits) if v)
