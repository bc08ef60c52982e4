import math

import pytest
from hypothesis import given, strategies as st

from roommates.cycletype import (
    CycleFamily,
    CycleType,
    canonical_cycles,
    count_permutations,
    enumerate_partitions,
    even_cycle_sign_exponent,
    factor_count,
    family_members,
    family_size_predicted,
    partition_number,
)
from roommates.stability import build_integrand

# OEIS A000041, p(0)..p(20)
A000041 = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77, 101, 135, 176, 231, 297, 385, 490, 627]

# cardinalities |E_n| and |O_n| for n = 4, 6, ..., 18
E_SIZES = [2, 3, 5, 7, 11, 15, 22, 30]
O_SIZES = [1, 3, 6, 13, 24, 43, 74, 124]


def partitions_from_compositions(n):
    """Independent oracle: sort every composition of n and deduplicate."""
    out = set()
    for mask in range(1 << (n - 1)):
        parts, run = [], 1
        for bit in range(n - 1):
            if mask >> bit & 1:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        out.add(tuple(sorted(parts)))
    return out


def T(s):
    return CycleType.parse(s)


class TestEnumeration:
    def test_small_cases(self):
        assert len(enumerate_partitions(4)) == 5
        assert [str(a) for a in enumerate_partitions(1)] == ["1^1"]
        assert enumerate_partitions(0) == []

    def test_n12_against_composition_oracle(self):
        got = enumerate_partitions(12)
        assert len(got) == 77
        assert {tuple(a.lengths()) for a in got} == partitions_from_compositions(12)

    @pytest.mark.parametrize("n", range(1, 21))
    def test_counts_match_a000041(self, n):
        assert len(enumerate_partitions(n)) == A000041[n]
        assert partition_number(n) == A000041[n]

    def test_reverse_lexicographic(self):
        lists = [sorted(a.lengths(), reverse=True) for a in enumerate_partitions(9)]
        assert lists == sorted(lists, reverse=True)
        assert len(set(map(tuple, lists))) == len(lists)

    def test_deterministic(self):
        assert enumerate_partitions(10) == enumerate_partitions(10)


class TestFamilies:
    def test_examples(self):
        assert len(family_members(8, CycleFamily.EVEN)) == 5
        assert len(family_members(10, CycleFamily.ODD)) == 13
        assert family_members(4, CycleFamily.EVEN) == [T("4^1"), T("2^2")]

    @pytest.mark.parametrize("n, e, o", list(zip(range(4, 19, 2), E_SIZES, O_SIZES)))
    def test_cardinality_table(self, n, e, o):
        assert len(family_members(n, CycleFamily.EVEN)) == e == partition_number(n // 2)
        odd = family_members(n, CycleFamily.ODD)
        assert len(odd) == o == partition_number(n) - partition_number(n - 2) - partition_number(n // 2)

    @pytest.mark.parametrize("n", range(2, 17))
    def test_families_split_all_admissible_types(self, n):
        direct, comp = (
            (CycleFamily.EVEN, CycleFamily.ODD) if n % 2 == 0
            else (CycleFamily.ONE_FIXED_EVEN, CycleFamily.ODD_CYCLE)
        )
        d, c = set(family_members(n, direct)), set(family_members(n, comp))
        assert not d & c
        for fam in (direct, comp):
            assert len(family_members(n, fam)) == family_size_predicted(n, fam)
        # every type with at most one fixed point lands in exactly one of the two
        for a in enumerate_partitions(n):
            if a[1] <= 1:
                assert (a in d) != (a in c), a

    def test_membership_predicates(self):
        assert CycleFamily.ODD.contains(T("1^1,3^1"))
        assert not CycleFamily.ODD.contains(T("1^2,2^1"))
        assert CycleFamily.ONE_FIXED_EVEN.contains(T("1^1,2^1,4^1"))
        assert CycleFamily.ODD_CYCLE.contains(T("1^2,3^1"))  # several fixed points allowed; P = 0
        assert not CycleFamily.ODD_CYCLE.contains(T("1^3,2^1"))

    @pytest.mark.parametrize("n, fam", [(5, CycleFamily.EVEN), (4, CycleFamily.ODD_CYCLE),
                                        (6, CycleFamily.ONE_FIXED_EVEN), (7, CycleFamily.ODD)])
    def test_parity_mismatch_rejected(self, n, fam):
        with pytest.raises(ValueError):
            family_members(n, fam)


class TestCoefficients:
    def test_examples(self):
        assert count_permutations(T("2^2")) == 3
        assert count_permutations(T("4^1")) == 6
        assert count_permutations(T("1^1,3^1")) == 8
        assert even_cycle_sign_exponent(T("2^6")) == 0
        assert even_cycle_sign_exponent(T("2^1,4^1,6^1")) == 2
        assert even_cycle_sign_exponent(T("4^3")) == 3
        assert factor_count(T("2^2")) == 4
        assert factor_count(T("2^6")) == 60
        assert factor_count(T("1^1,3^1")) == 3

    @pytest.mark.parametrize("n", range(1, 13))
    def test_class_sizes_sum_to_factorial(self, n):
        assert sum(count_permutations(a) for a in enumerate_partitions(n)) == math.factorial(n)

    @pytest.mark.parametrize("n", range(2, 13))
    def test_factor_count_is_nonadjacent_pairs(self, n):
        for a in enumerate_partitions(n):
            if a[1] >= 2:
                continue
            cycles = canonical_cycles(a)
            adjacent = set()
            for c in cycles:
                for i, v in enumerate(c):
                    w = c[(i + 1) % len(c)]
                    if v != w:
                        adjacent.add(frozenset((v, w)))
            nonadjacent = n * (n - 1) // 2 - len(adjacent)
            assert factor_count(a) == nonadjacent
            assert len(build_integrand(a).factor_list.factors()) == factor_count(a)


class TestLayout:
    def test_canonical_layout(self):
        assert canonical_cycles(T("1^1,2^1,3^1")) == [(1, 2), (3, 4, 5), (6,)]
        assert canonical_cycles(T("2^2")) == [(1, 2), (3, 4)]

    @pytest.mark.parametrize("n", range(1, 10))
    def test_layout_covers_1_to_n(self, n):
        for a in enumerate_partitions(n):
            cycles = canonical_cycles(a)
            assert sorted(v for c in cycles for v in c) == list(range(1, n + 1))
            assert CycleType.from_lengths(len(c) for c in cycles) == a


class TestGrammar:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_roundtrip_enumerated(self, n):
        for a in enumerate_partitions(n):
            assert CycleType.parse(str(a)) == a

    @given(st.lists(st.integers(1, 9), min_size=1, max_size=12))
    def test_roundtrip_random(self, lengths):
        a = CycleType.from_lengths(lengths)
        assert CycleType.parse(str(a)) == a
        assert a.n == sum(lengths)
        assert sorted(lengths) == a.lengths()

    def test_whitespace_and_brackets(self):
        assert T(" [ 4^1 , 2^1 ] ") == T("2^1,4^1")
        assert str(T("4^1,2^1")) == "2^1,4^1"
        assert T("2^1,4^1").filename_stem() == "2p1_4p1"

    @pytest.mark.parametrize("bad", ["", "2^0", "2", "2^1,2^1", "0^2", "a^1", "2^1;3^1", "2^-1"])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            CycleType.parse(bad)

    def test_size_check(self):
        assert T("2^2").n == 4
        CycleType.parse("2^1,4^1", n=6)
        with pytest.raises(ValueError):
            CycleType.parse("2^1,4^1", n=8)
