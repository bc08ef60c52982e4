"""Cycle types of permutations of {1..n} and the families used by the p_n sums.

A cycle type is written ``[1^a1, 2^a2, ...]``; only lengths with a nonzero
multiplicity are stored.  Cycle types of size n are in bijection with the
integer partitions of n.

>>> [str(a) for a in enumerate_partitions(4)]
['4^1', '1^1,3^1', '2^2', '1^2,2^1', '1^4']
>>> count_permutations(CycleType.parse("2^2"))
3
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

__all__ = [
    "CycleType",
    "CycleFamily",
    "enumerate_partitions",
    "partition_number",
    "family_members",
    "family_size_predicted",
    "count_permutations",
    "even_cycle_sign_exponent",
    "factor_count",
    "canonical_cycles",
]

_TOKEN = re.compile(r"^(\d+)\^(\d+)$")


@dataclass(frozen=True, order=False)
class CycleType:
    """Multiset of cycle lengths, stored as sorted ``(length, multiplicity)`` pairs."""

    parts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for k, m in self.parts:
            if k < 1 or m < 1:
                raise ValueError(f"cycle length and multiplicity must be positive, got {k}^{m}")
            if k in seen:
                raise ValueError(f"cycle length {k} listed twice")
            seen.add(k)
        if list(self.parts) != sorted(self.parts):
            object.__setattr__(self, "parts", tuple(sorted(self.parts)))

    @classmethod
    def from_lengths(cls, lengths) -> "CycleType":
        """Build from a flat list of cycle lengths, e.g. ``[3, 1, 2, 2]``."""
        counts: dict[int, int] = {}
        for k in lengths:
            counts[k] = counts.get(k, 0) + 1
        return cls(tuple(sorted(counts.items())))

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "CycleType":
        return cls(tuple(sorted((k, m) for k, m in counts.items() if m)))

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "CycleType":
        """Parse the canonical grammar ``k^m,k^m,...`` (whitespace ignored).

        If ``n`` is given the parsed type must have that size.
        """
        body = re.sub(r"\s+", "", text)
        if body.startswith("[") and body.endswith("]"):
            body = body[1:-1]
        if not body:
            raise ValueError("empty cycle type")
        counts: dict[int, int] = {}
        for tok in body.split(","):
            m = _TOKEN.match(tok)
            if m is None:
                raise ValueError(f"bad cycle-type token {tok!r} (expected k^m)")
            k, mult = int(m.group(1)), int(m.group(2))
            if k < 1:
                raise ValueError(f"cycle length must be positive in {tok!r}")
            if mult < 1:
                raise ValueError(f"multiplicity must be positive in {tok!r}")
            if k in counts:
                raise ValueError(f"cycle length {k} listed twice")
            counts[k] = mult
        a = cls.from_counts(counts)
        if n is not None and a.n != n:
            raise ValueError(f"cycle type {a} has size {a.n}, expected {n}")
        return a

    @property
    def n(self) -> int:
        return sum(k * m for k, m in self.parts)

    def __getitem__(self, k: int) -> int:
        """Multiplicity a_k (0 if absent)."""
        for length, m in self.parts:
            if length == k:
                return m
        return 0

    def lengths(self) -> list[int]:
        """Cycle lengths in ascending order, with repetition."""
        return [k for k, m in self.parts for _ in range(m)]

    def __str__(self) -> str:
        return ",".join(f"{k}^{m}" for k, m in self.parts)

    def __repr__(self) -> str:
        return f"CycleType({str(self)!r})"

    def filename_stem(self) -> str:
        return str(self).replace("^", "p").replace(",", "_")


class CycleFamily(enum.Enum):
    EVEN = "even"  # E_n: even cycles only (n even)
    ODD = "odd"  # O_n: at most one fixed point, some odd cycle (n even)
    ONE_FIXED_EVEN = "one-fixed-even"  # E^1_n: one fixed point, rest even (n odd)
    ODD_CYCLE = "odd-cycle"  # O^3_n: some odd cycle of length >= 3 (n odd)

    @property
    def needs_even_n(self) -> bool:
        return self in (CycleFamily.EVEN, CycleFamily.ODD)

    def contains(self, a: CycleType) -> bool:
        odd = [k for k in a.lengths() if k % 2]
        if self is CycleFamily.EVEN:
            return not odd
        if self is CycleFamily.ODD:
            return a[1] <= 1 and bool(odd)
        if self is CycleFamily.ONE_FIXED_EVEN:
            return a[1] == 1 and all(k == 1 for k in odd)
        return any(k >= 3 for k in odd)


def _partitions(n: int, largest: int) -> Iterator[list[int]]:
    if n == 0:
        yield []
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield [first] + rest


def enumerate_partitions(n: int) -> list[CycleType]:
    """All cycle types of size n, in reverse-lexicographic order of the
    descending part lists (``[4], [3,1], [2,2], [2,1,1], [1,1,1,1]``)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return []
    return [CycleType.from_lengths(p) for p in _partitions(n, n)]


@lru_cache(maxsize=None)
def _count_bounded(n: int, largest: int) -> int:
    # partitions of n into parts <= largest
    if n == 0:
        return 1
    if largest == 0:
        return 0
    total = _count_bounded(n, largest - 1)
    if largest <= n:
        total += _count_bounded(n - largest, largest)
    return total


def partition_number(n: int) -> int:
    """p(n); p(0) = 1 and p(n) = 0 for negative n."""
    if n < 0:
        return 0
    return _count_bounded(n, n)


def _check_parity(n: int, family: CycleFamily) -> None:
    if n < 1:
        raise ValueError("n must be positive")
    if family.needs_even_n and n % 2:
        raise ValueError(f"family {family.value} requires even n, got {n}")
    if not family.needs_even_n and n % 2 == 0:
        raise ValueError(f"family {family.value} requires odd n, got {n}")


def family_members(n: int, family: CycleFamily) -> list[CycleType]:
    _check_parity(n, family)
    return [a for a in enumerate_partitions(n) if family.contains(a)]


def family_size_predicted(n: int, family: CycleFamily) -> int:
    """Cardinality of a family from partition numbers alone.

    |E_n| = p(n/2) and |O_n| = p(n) - p(n-2) - p(n/2) for even n;
    |E^1_n| = p((n-1)/2) and |O^3_n| = p(n) - sum_{a_1 odd} p((n-a_1)/2) for odd n.
    """
    _check_parity(n, family)
    if family is CycleFamily.EVEN:
        return partition_number(n // 2)
    if family is CycleFamily.ODD:
        return partition_number(n) - partition_number(n - 2) - partition_number(n // 2)
    if family is CycleFamily.ONE_FIXED_EVEN:
        return partition_number((n - 1) // 2)
    # types whose odd parts are all 1s: a_1 odd, remainder split into even parts
    only_ones = sum(partition_number((n - a1) // 2) for a1 in range(1, n + 1, 2))
    return partition_number(n) - only_ones


def count_permutations(a: CycleType) -> int:
    """c(a) = n! / prod_k (a_k! k^a_k)."""
    denom = 1
    for k, m in a.parts:
        denom *= math.factorial(m) * k**m
    return math.factorial(a.n) // denom


def even_cycle_sign_exponent(a: CycleType) -> int:
    """e(a): number of even cycles of length >= 4."""
    return sum(m for k, m in a.parts if k >= 4 and k % 2 == 0)


def factor_count(a: CycleType) -> int:
    """f(a) = n(n-3)/2 + a_1 + a_2, the number of (1 - x_i x_j) factors."""
    n = a.n
    return n * (n - 3) // 2 + a[1] + a[2]


def canonical_cycles(a: CycleType) -> list[tuple[int, ...]]:
    """Cycles of the canonical realization of ``a`` on 1..n.

    2-cycles come first on consecutive pairs, then longer cycles by ascending
    length, fixed points last.  Each cycle maps every element to its successor.
    """
    cycles: list[tuple[int, ...]] = []
    nxt = 1
    order = [(2, a[2])] + [(k, m) for k, m in a.parts if k >= 3] + [(1, a[1])]
    for k, m in order:
        for _ in range(m):
            cycles.append(tuple(range(nxt, nxt + k)))
            nxt += k
    return cycles
