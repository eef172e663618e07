"""Finite unions of closed real intervals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

Interval = Tuple[float, float]


@dataclass(frozen=True)
class IntervalUnion:
    """
    Sorted disjoint closed intervals [a_i, b_i] with a_i <= b_i < a_{i+1}.

    Build instances through ``from_intervals`` so the normalization invariant holds.
    The empty union is a valid value.
    """

    intervals: Tuple[Interval, ...] = ()

    @classmethod
    def from_intervals(cls, intervals: Iterable[Sequence[float]], merge_tol: float = 0.0) -> "IntervalUnion":
        """
        Normalize arbitrary intervals: sort and merge overlaps.

        Args:
            intervals: (a, b) pairs, a <= b
            merge_tol: intervals separated by at most this distance are merged

        Returns:
            Normalized union
        """
        items = sorted((float(a), float(b)) for a, b in intervals)
        for a, b in items:
            if a > b:
                raise ValueError(f"Interval [{a}, {b}] has a > b")

        merged: List[List[float]] = []
        for a, b in items:
            if merged and a - merged[-1][1] <= merge_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return cls(tuple((a, b) for a, b in merged))

    @classmethod
    def point(cls, x: float) -> "IntervalUnion":
        return cls(((float(x), float(x)),))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def lower(self) -> float:
        return self.intervals[0][0]

    @property
    def upper(self) -> float:
        return self.intervals[-1][1]

    def union(self, *others: "IntervalUnion", merge_tol: float = 0.0) -> "IntervalUnion":
        parts = list(self.intervals)
        for other in others:
            parts.extend(other.intervals)
        return IntervalUnion.from_intervals(parts, merge_tol)

    def minkowski_sum(self, other: "IntervalUnion") -> "IntervalUnion":
        """{e + f : e in self, f in other}; empty if either operand is empty."""
        if self.is_empty or other.is_empty:
            return IntervalUnion.empty()
        return IntervalUnion.from_intervals((a + c, b + d) for a, b in self.intervals for c, d in other.intervals)

    def __add__(self, other: "IntervalUnion") -> "IntervalUnion":
        return self.minkowski_sum(other)

    def inflated(self, tol: float) -> "IntervalUnion":
        """self ⊕ [-tol, tol]."""
        return IntervalUnion.from_intervals((a - tol, b + tol) for a, b in self.intervals)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return any(a - slack <= x <= b + slack for a, b in self.intervals)

    def contains_union(self, other: "IntervalUnion", slack: float = 0.0) -> bool:
        """True when every interval of ``other`` lies inside one interval of self (up to slack)."""
        return all(
            any(a - slack <= c and d <= b + slack for a, b in self.intervals) for c, d in other.intervals
        )

    def gaps(self, lo: float, hi: float) -> List[Interval]:
        """
        Bounded gaps between consecutive intervals, clipped to [lo, hi].

        The unbounded components below the first and above the last interval
        are never reported.
        """
        if lo > hi:
            raise ValueError(f"Window [{lo}, {hi}] is empty")
        result: List[Interval] = []
        for (_, b), (c, _) in zip(self.intervals, self.intervals[1:]):
            start, stop = max(b, lo), min(c, hi)
            if start < stop:
                result.append((start, stop))
        return result
