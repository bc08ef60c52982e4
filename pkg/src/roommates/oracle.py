"""Brute-force ground truth for the exact engine.

Everything here works on explicit preference tables: direct stability checks,
exhaustive enumeration over all tables for tiny n, and Monte Carlo estimates
of p_n over uniformly random tables.  Agents are numbered 1..n in the public
API; each agent implicitly ranks itself last (rank n).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .cycletype import CycleType

__all__ = [
    "PreferenceTable",
    "Permutation",
    "is_stable_matching",
    "is_stable_permutation",
    "is_solvable",
    "exhaustive_p",
    "random_table",
    "random_rank_arrays",
    "solvable_batch",
    "mc_count",
    "mc_estimate",
    "MCEstimate",
    "stable_permutations",
    "stable_permutation_sets",
    "stable_permutations_bruteforce",
    "check_tan_fact2",
    "odd_cycles",
    "load_example",
    "DEFAULT_SOLVABLE_MAX_N",
    "MC_CHUNK",
]

DEFAULT_SOLVABLE_MAX_N = 12
MC_CHUNK = 1 << 15


@dataclass(frozen=True)
class PreferenceTable:
    """``prefs[i-1]`` is agent i's ranking of the other agents, best first."""

    prefs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(j) for j in row) for row in self.prefs)
        n = len(rows)
        for i, row in enumerate(rows, start=1):
            if sorted(row) != [j for j in range(1, n + 1) if j != i]:
                raise ValueError(f"row {i} is not a ranking of the other {n - 1} agents: {row}")
        object.__setattr__(self, "prefs", rows)

    @property
    def n(self) -> int:
        return len(self.prefs)

    def rank(self, i: int, j: int) -> int:
        """Position of j in i's list (1 = favourite); rank(i, i) = n."""
        return self._ranks[i - 1][j - 1]

    @property
    def _ranks(self) -> tuple[tuple[int, ...], ...]:
        cached = self.__dict__.get("_rank_cache")
        if cached is None:
            n = self.n
            table = []
            for i, row in enumerate(self.prefs, start=1):
                r = [0] * n
                for pos, j in enumerate(row, start=1):
                    r[j - 1] = pos
                r[i - 1] = n
                table.append(tuple(r))
            cached = tuple(table)
            object.__setattr__(self, "_rank_cache", cached)
        return cached

    def rank_array(self) -> np.ndarray:
        """0-based ranks, ``a[i, j]`` for 0-based agents; diagonal is n-1."""
        return np.array(self._ranks, dtype=np.int16) - 1

    def prefers(self, i: int, j: int, k: int) -> bool:
        """True if agent i strictly prefers j to k."""
        return self.rank(i, j) < self.rank(i, k)

    @classmethod
    def parse(cls, text: str) -> "PreferenceTable":
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                rows.append(tuple(int(tok) for tok in line.split()))
        return cls(tuple(rows))

    def dumps(self) -> str:
        return "".join(" ".join(map(str, row)) + "\n" for row in self.prefs)

    @classmethod
    def from_rank_array(cls, ranks: np.ndarray) -> "PreferenceTable":
        n = ranks.shape[0]
        rows = []
        for i in range(n):
            order = sorted((j for j in range(n) if j != i), key=lambda j: ranks[i, j])
            rows.append(tuple(j + 1 for j in order))
        return cls(tuple(rows))


def load_example(name: str) -> PreferenceTable:
    """Bundled 4-agent tables: ``"A"`` (solvable) and ``"B"`` (unsolvable)."""
    path = resources.files("roommates") / "data" / f"example_{name.lower()}.txt"
    return PreferenceTable.parse(path.read_text())


@dataclass(frozen=True)
class Permutation:
    """Bijection on 1..n; ``images[i-1] = pi(i)``."""

    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        if sorted(imgs) != list(range(1, len(imgs) + 1)):
            raise ValueError(f"not a permutation of 1..{len(imgs)}: {imgs}")
        object.__setattr__(self, "images", imgs)

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence[int]], n: int | None = None) -> "Permutation":
        if n is None:
            n = sum(len(c) for c in cycles)
        images = list(range(1, n + 1))
        for cyc in cycles:
            for pos, v in enumerate(cyc):
                images[v - 1] = cyc[(pos + 1) % len(cyc)]
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def inverse(self, i: int) -> int:
        return self._inverse[i - 1]

    @property
    def _inverse(self) -> tuple[int, ...]:
        inv = self.__dict__.get("_inv")
        if inv is None:
            out = [0] * self.n
            for i, j in enumerate(self.images, start=1):
                out[j - 1] = i
            inv = tuple(out)
            object.__setattr__(self, "_inv", inv)
        return inv

    def cycles(self) -> list[tuple[int, ...]]:
        """Disjoint cycles, each rotated to start at its smallest element."""
        seen = set()
        out = []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> CycleType:
        return CycleType.from_lengths(len(c) for c in self.cycles())

    def fixed_points(self) -> set[int]:
        return {i for i in range(1, self.n + 1) if self(i) == i}

    def two_cycle_elements(self) -> set[int]:
        return {i for i in range(1, self.n + 1) if self(i) != i and self(self(i)) == i}

    def is_perfect_matching(self) -> bool:
        return len(self.two_cycle_elements()) == self.n

    def __str__(self) -> str:
        return "".join("(" + ",".join(map(str, c)) + ")" for c in self.cycles())


def is_stable_matching(t: PreferenceTable, m: Permutation) -> bool:
    """No pair of agents, not matched together, prefer each other to their partners."""
    if m.n != t.n or not m.is_perfect_matching():
        raise ValueError(f"{m} is not a perfect matching on {t.n} agents")
    n = t.n
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if m(i) != j and t.prefers(i, j, m(i)) and t.prefers(j, i, m(j)):
                return False
    return True


def is_stable_permutation(t: PreferenceTable, p: Permutation) -> bool:
    """Check both stability conditions for an arbitrary permutation.

    (a) nobody prefers their successor p(i) to their predecessor p^-1(i);
    (b) if i prefers j to p(i) then j prefers p(j) to i, for j not a cyclic
        neighbour of i.
    """
    if p.n != t.n:
        raise ValueError("size mismatch between table and permutation")
    n = t.n
    for i in range(1, n + 1):
        if t.prefers(i, p(i), p.inverse(i)):
            return False
    for i in range(1, n + 1):
        succ, pred = p(i), p.inverse(i)
        for j in range(1, n + 1):
            if j == i or j == succ or j == pred:
                continue
            if t.prefers(i, j, succ) and t.prefers(j, i, p(j)):
                return False
    return True


def _matchings(agents: tuple[int, ...]) -> Iterator[list[tuple[int, int]]]:
    if not agents:
        yield []
        return
    first, rest = agents[0], agents[1:]
    for k, partner in enumerate(rest):
        for tail in _matchings(rest[:k] + rest[k + 1:]):
            yield [(first, partner)] + tail


def _solution_candidates(n: int) -> Iterator[Permutation]:
    """Perfect matchings for even n; one fixed point plus a matching for odd n."""
    agents = tuple(range(1, n + 1))
    if n % 2 == 0:
        for m in _matchings(agents):
            yield Permutation.from_cycles(m, n)
        return
    for f in agents:
        rest = tuple(a for a in agents if a != f)
        for m in _matchings(rest):
            yield Permutation.from_cycles(m, n)


def is_solvable(t: PreferenceTable, max_n: int = DEFAULT_SOLVABLE_MAX_N) -> bool:
    """Stable matching exists (even n), or a stable matching of all but one
    agent whom everybody prefers less than their partner (odd n)."""
    if t.n > max_n:
        raise ValueError(f"n={t.n} exceeds enumeration budget {max_n}")
    if t.n < 2:
        raise ValueError("need at least two agents")
    if t.n % 2 == 0:
        return any(is_stable_matching(t, m) for m in _solution_candidates(t.n))
    return any(is_stable_permutation(t, p) for p in _solution_candidates(t.n))


def all_tables(n: int) -> Iterator[PreferenceTable]:
    rows = [list(itertools.permutations([j for j in range(1, n + 1) if j != i])) for i in range(1, n + 1)]
    for choice in itertools.product(*rows):
        yield PreferenceTable(choice)


def exhaustive_p(n: int) -> Fraction:
    """Exact fraction of the ((n-1)!)^n tables of size n that are solvable."""
    if n not in (2, 3, 4):
        raise ValueError("exhaustive enumeration is limited to n in {2, 3, 4}")
    total = solvable = 0
    for t in all_tables(n):
        total += 1
        solvable += is_solvable(t)
    assert total == math.factorial(n - 1) ** n
    return Fraction(solvable, total)


# -- random instances -----------------------------------------------------


def random_rank_arrays(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniform tables as 0-based rank arrays (count, n, n).

    Each row is an independent Fisher-Yates shuffle of the other agents; the
    diagonal holds n-1 (self ranked last).
    """
    if n < 2:
        raise ValueError("need at least two agents")
    others = np.array([[j for j in range(n) if j != i] for i in range(n)], dtype=np.int16)
    prefs = rng.permuted(np.broadcast_to(others, (count, n, n - 1)), axis=-1)
    ranks = np.full((count, n, n), n - 1, dtype=np.int16)
    positions = np.broadcast_to(np.arange(n - 1, dtype=np.int16), prefs.shape)
    np.put_along_axis(ranks, prefs.astype(np.intp), positions, axis=-1)
    return ranks


def random_table(n: int, seed: int) -> PreferenceTable:
    rng = np.random.default_rng(seed)
    return PreferenceTable.from_rank_array(random_rank_arrays(n, 1, rng)[0])


@lru_cache(maxsize=None)
def _candidate_arrays(n: int) -> np.ndarray:
    """Solution candidates as 0-based image arrays, shape (K, n)."""
    return np.array([[x - 1 for x in p.images] for p in _solution_candidates(n)], dtype=np.intp)


def solvable_batch(ranks: np.ndarray) -> np.ndarray:
    """Vectorized :func:`is_solvable` over a stack of 0-based rank arrays."""
    count, n, _ = ranks.shape
    solved = np.zeros(count, dtype=bool)
    live = np.arange(count)
    sub = ranks
    rows = np.arange(n)
    for k, images in enumerate(_candidate_arrays(n)):
        if k and k % 8 == 0:
            live = np.flatnonzero(~solved)
            if live.size == 0:
                break
            sub = ranks[live]
        thr = sub[:, rows, images]
        better = sub < thr[:, :, None]
        blocked = (better & better.transpose(0, 2, 1)).any(axis=(1, 2))
        solved[live[~blocked]] = True
    return solved


def mc_count(n: int, samples: int, seed: int, threads: int = 1) -> int:
    """Number of solvable tables among ``samples`` random ones.

    Samples are split into fixed chunks of :data:`MC_CHUNK`; chunk k draws from
    a generator seeded with ``(seed, k)``, so the count does not depend on the
    number of threads.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if n > DEFAULT_SOLVABLE_MAX_N:
        raise ValueError(f"n={n} exceeds enumeration budget {DEFAULT_SOLVABLE_MAX_N}")
    chunks = [(k, min(MC_CHUNK, samples - k * MC_CHUNK)) for k in range(math.ceil(samples / MC_CHUNK))]

    def run(chunk):
        k, size = chunk
        rng = np.random.default_rng([seed, k])
        return int(solvable_batch(random_rank_arrays(n, size, rng)).sum())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(run, chunks))
    return sum(map(run, chunks))


class MCEstimate(NamedTuple):
    estimate: float
    stderr: float


def mc_estimate(n: int, samples: int, seed: int, threads: int = 1) -> MCEstimate:
    hits = mc_count(n, samples, seed, threads)
    p = hits / samples
    return MCEstimate(p, math.sqrt(p * (1 - p) / samples))


# -- stable permutations and their structural facts ---------------------


@lru_cache(maxsize=None)
def _all_permutations(n: int) -> tuple[np.ndarray, np.ndarray]:
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    return perms, np.argsort(perms, axis=1)


def stable_permutations_bruteforce(t: PreferenceTable, max_n: int = 8) -> list[Permutation]:
    """Every stable permutation of ``t`` by checking all n! permutations."""
    n = t.n
    if n > max_n:
        raise ValueError(f"n={n} exceeds enumeration budget {max_n}")
    ranks = t.rank_array()
    perms, inv = _all_permutations(n)
    rows = np.arange(n)
    succ = ranks[rows, perms]
    pred = ranks[rows, inv]
    ok = ((perms == rows).sum(axis=1) <= 1) & (succ >= pred).all(axis=1)
    perms, inv, succ = perms[ok], inv[ok], succ[ok]
    better = ranks[None, :, :] < succ[:, :, None]
    better[np.arange(len(perms))[:, None], rows, inv] = False  # predecessor is a cyclic neighbour
    blocked = (better & better.transpose(0, 2, 1)).any(axis=(1, 2))
    return [Permutation(tuple(int(x) + 1 for x in p)) for p in perms[~blocked]]


def stable_permutation_sets(ranks: np.ndarray) -> list[list[Permutation]]:
    """Stable permutations of each table in a stack of 0-based rank arrays.

    Successors are assigned agent by agent; a partial assignment is dropped
    as soon as two assigned agents form a blocking pair or an agent with
    known predecessor and successor prefers the successor.
    """
    count, n, _ = ranks.shape
    ranks = ranks.astype(np.int64)
    tid = np.arange(count)
    succ = np.zeros((count, 0), dtype=np.int64)
    used = np.zeros(count, dtype=np.int64)
    has_fixed = np.zeros(count, dtype=bool)
    targets = np.arange(n)
    for k in range(n):
        width = len(tid)
        tid = np.repeat(tid, n)
        succ = np.repeat(succ, n, axis=0)
        used = np.repeat(used, n)
        has_fixed = np.repeat(has_fixed, n)
        s = np.tile(targets, width)
        keep = ((used >> s) & 1) == 0
        keep &= ~((s == k) & has_fixed)
        tid, succ, used, has_fixed, s = tid[keep], succ[keep], used[keep], has_fixed[keep], s[keep]
        r_ks = ranks[tid, k, s]
        keep = np.ones(len(tid), dtype=bool)
        if k:
            j = np.arange(k)
            t2 = tid[:, None]
            k_wants_j = ranks[t2, k, j] < r_ks[:, None]
            j_wants_k = ranks[t2, j, k] < ranks[t2, j, succ]
            apart = (s[:, None] != j) & (succ != k)
            keep &= ~(k_wants_j & j_wants_k & apart).any(axis=1)
            # s already placed: its predecessor is now k
            earlier = s < k
            s_succ = succ[np.arange(len(tid)), np.minimum(s, k - 1)]
            keep &= ~earlier | (ranks[tid, s, s_succ] >= ranks[tid, s, k])
            # k's predecessor already placed
            is_pred = succ == k
            pred = is_pred.argmax(axis=1)
            keep &= ~is_pred.any(axis=1) | (r_ks >= ranks[tid, k, pred])
        succ = np.concatenate([succ, s[:, None]], axis=1)[keep]
        used = (used | (1 << s))[keep]
        has_fixed = (has_fixed | (s == k))[keep]
        tid = tid[keep]
    out: list[list[Permutation]] = [[] for _ in range(count)]
    for t_index, images in zip(tid.tolist(), succ.tolist()):
        out[t_index].append(Permutation(tuple(x + 1 for x in images)))
    return out


def stable_permutations(t: PreferenceTable) -> list[Permutation]:
    """Every stable permutation of ``t``."""
    return stable_permutation_sets(t.rank_array()[None])[0]


def odd_cycles(p: Permutation) -> set[tuple[int, ...]]:
    return {c for c in p.cycles() if len(c) % 2}


def _split_even_cycle(p: Permutation, cycle: tuple[int, ...]) -> tuple[Permutation, Permutation]:
    other = [c for c in p.cycles() if set(c) != set(cycle)]
    # keep the cycle's direction: v1 -> v2 -> ... -> v2m
    first = [(cycle[k], cycle[k + 1]) for k in range(0, len(cycle), 2)]
    second = [(cycle[k], cycle[(k + 1) % len(cycle)]) for k in range(1, len(cycle), 2)]
    return Permutation.from_cycles(other + first, p.n), Permutation.from_cycles(other + second, p.n)


def check_tan_fact2(t: PreferenceTable, p: Permutation, cycle: Sequence[int] | None = None) -> bool:
    """Splitting an even cycle (length >= 4) of a stable permutation into
    alternate 2-cycles gives two stable permutations.

    Checks ``cycle`` if given, otherwise every even cycle of length >= 4.
    """
    if not is_stable_permutation(t, p):
        raise ValueError(f"{p} is not stable for this table")
    evens = [c for c in p.cycles() if len(c) % 2 == 0 and len(c) >= 4]
    if cycle is not None:
        target = set(cycle)
        evens = [c for c in evens if set(c) == target]
    if not evens:
        raise ValueError(f"{p} has no even cycle of length >= 4 to split")
    for c in evens:
        a, b = _split_even_cycle(p, c)
        if not (is_stable_permutation(t, a) and is_stable_permutation(t, b)):
            return False
    return True
