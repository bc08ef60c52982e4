import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from roommates.cycletype import CycleType, enumerate_partitions, factor_count
from roommates.polyint import (
    FactorList,
    ResourceLimitExceeded,
    SparsePoly,
    Strategy,
    _eliminate,
    elimination_order,
    evaluate_integral,
    integrate_factors,
    integrate_variable,
)
from roommates.stability import build_integrand


def factors_of(s):
    return build_integrand(CycleType.parse(s)).factor_list


def integrate_all(p, order):
    for v in order:
        p = p.integrate(v) if v in p.variables else p
    return p.constant_value()


def nonzero_types(lo, hi):
    return [a for n in range(lo, hi + 1) for a in enumerate_partitions(n) if a[1] <= 1 and n >= 2]


@st.composite
def polys(draw, max_vars=4, max_exp=4):
    k = draw(st.integers(1, max_vars))
    exps = st.tuples(*[st.integers(0, max_exp)] * k)
    coeffs = draw(st.dictionaries(exps, st.integers(-20, 20).filter(bool), min_size=1, max_size=8))
    return SparsePoly(tuple(range(1, k + 1)), {e: Fraction(c) for e, c in coeffs.items()})


@st.composite
def factor_lists(draw, max_vars=6):
    n = draw(st.integers(2, max_vars))
    all_pairs = list(itertools.combinations(range(1, n + 1), 2))
    units = draw(st.sets(st.integers(1, n), max_size=1))
    candidates = [p for p in all_pairs if not (set(p) <= units)]
    pairs = draw(st.lists(st.sampled_from(candidates), unique=True, max_size=8))
    linear = draw(st.sets(st.integers(1, n).filter(lambda v: v not in units), max_size=n))
    return FactorList(n, tuple(pairs), frozenset(linear), frozenset(units))


class TestIntegrateVariable:
    def test_examples(self):
        assert integrate_variable(SparsePoly.variable(1), 1).constant_value() == Fraction(1, 2)
        p = SparsePoly.constant(1) - SparsePoly.variable(1) * SparsePoly.variable(2)
        assert integrate_all(p, [1, 2]) == Fraction(3, 4)
        assert integrate_all(factors_of("2^2").to_sparse(), [1, 2, 3, 4]) == Fraction(233, 648)

    @pytest.mark.parametrize("b", range(0, 14))
    def test_monomial_rule(self, b):
        p = integrate_variable(SparsePoly.variable(3, b), 3)
        assert p.constant_value() == Fraction(1, b + 1)
        assert p.variables == () or 3 not in p.variables

    def test_dead_variable_rejected(self):
        with pytest.raises(ValueError):
            integrate_variable(SparsePoly.variable(1), 2)

    def test_partial_integration_keeps_other_variables(self):
        p = SparsePoly.from_dict({((1, 2), (2, 1)): 3, ((2, 3),): 1})
        q = integrate_variable(p, 1)
        assert q == SparsePoly.from_dict({((2, 1),): 1, ((2, 3),): 1})

    @given(polys(), st.integers(-7, 7))
    def test_linearity(self, p, m):
        order = list(p.variables)
        assert integrate_all(p.scale(m), order) == m * integrate_all(p, order)

    @given(polys(), polys())
    def test_additivity(self, p, q):
        order = sorted(set(p.variables) | set(q.variables))
        assert integrate_all(p + q, order) == integrate_all(p, order) + integrate_all(q, order)

    @given(polys(max_vars=4))
    def test_fubini_all_orders(self, p):
        values = {integrate_all(p, order) for order in itertools.permutations(p.variables)}
        assert len(values) == 1


class TestSparsePoly:
    def test_no_zero_coefficients(self):
        x = SparsePoly.variable(1)
        assert len(x - x) == 0
        assert (x - x).constant_value() == 0

    def test_term_count_bound(self):
        p = factors_of("2^3").to_sparse()
        for v in p.variables:
            assert p.degree_in(v) <= 6 + 1
        bound = 1
        for v in p.variables:
            bound *= p.degree_in(v) + 1
        assert len(p) <= bound

    def test_product_matches_factor_multiplication(self):
        x1, x2 = SparsePoly.variable(1), SparsePoly.variable(2)
        one = SparsePoly.constant(1)
        assert one.mul_factor((1, 2)) == one - x1 * x2
        assert x1.mul_factor((2,)) == x1 - x1 * x2


class TestFactorList:
    @pytest.mark.parametrize("kwargs", [
        dict(nvars=3, bilinear_pairs=((1, 1),)),
        dict(nvars=3, bilinear_pairs=((1, 2), (2, 1))),
        dict(nvars=3, bilinear_pairs=((1, 4),)),
        dict(nvars=3, bilinear_pairs=((1, 2),), unit_substitutions={1, 2}),
        dict(nvars=3, bilinear_pairs=(), linear_vars={3}, unit_substitutions={3}),
    ])
    def test_rejects_inconsistent(self, kwargs):
        with pytest.raises(ValueError):
            FactorList(**kwargs)

    def test_unit_normalization(self):
        fl = factors_of("1^1,3^1")
        assert fl.unit_substitutions == {4}
        assert sorted(fl.factors()) == [(1,), (2,), (3,)]
        assert fl.live_vars() == [1, 2, 3]


class TestEvaluate:
    @pytest.mark.parametrize("s, expected", [
        ("2^2", Fraction(233, 648)),
        ("4^1", Fraction(25, 1296)),
        ("1^1,3^1", Fraction(1, 216)),
        ("2^3", Fraction(448035973, 5832000000)),
    ])
    @pytest.mark.parametrize("strategy", list(Strategy))
    @pytest.mark.parametrize("backend", ["rational", "modular"])
    def test_examples(self, s, expected, strategy, backend):
        assert evaluate_integral(factors_of(s), strategy, backend=backend) == expected

    def test_empty_factor_list(self):
        assert evaluate_integral(FactorList(2, ())) == 1
        assert evaluate_integral(FactorList(2, (), linear_vars={1, 2})) == Fraction(1, 4)

    @settings(max_examples=60, deadline=None)
    @given(factor_lists())
    def test_backends_and_expansion_agree(self, fl):
        expanded = integrate_all(fl.to_sparse(), fl.live_vars())
        for strategy in Strategy:
            for backend in ("rational", "modular"):
                assert evaluate_integral(fl, strategy, backend=backend) == expanded

    @pytest.mark.parametrize("a", nonzero_types(2, 8), ids=str)
    def test_strategies_orders_and_backends_agree(self, a):
        fl = build_integrand(a).factor_list
        ref = evaluate_integral(fl, Strategy.EARLY, backend="modular")
        assert evaluate_integral(fl, Strategy.COEFFWISE) == ref
        assert evaluate_integral(fl, Strategy.EARLY, baseline_order=True) == ref
        if a.n <= 6:
            assert evaluate_integral(fl, Strategy.EARLY, backend="rational") == ref

    @pytest.mark.parametrize("s", ["2^2", "1^1,3^1", "2^1,3^1", "5^1"])
    def test_fubini_exhaustive_small(self, s):
        fl = factors_of(s)
        values = {
            _eliminate(SparsePoly.constant(1), fl.factors(), fl.linear_vars, order, "rational", 10**9, s, "early")[0]
            for order in itertools.permutations(fl.live_vars())
        }
        assert len(values) == 1

    @pytest.mark.parametrize("s", ["2^3", "3^2", "1^1,2^1,4^1", "2^1,6^1"])
    def test_fubini_sampled(self, s):
        fl = factors_of(s)
        rng = random.Random(s)
        ref = evaluate_integral(fl)
        for _ in range(12):
            order = fl.live_vars()
            rng.shuffle(order)
            got, _ = _eliminate(SparsePoly.constant(1), fl.factors(), fl.linear_vars, order, "modular", 10**9, s, "early")
            assert got == ref


class TestOrder:
    def test_single_pair_tie_break(self):
        assert elimination_order(FactorList(2, ((1, 2),)))[0] == 1

    def test_greedy_is_deterministic(self):
        for s in ("2^2", "2^3", "2^4", "2^5", "2^6"):
            fl = factors_of(s)
            assert elimination_order(fl) == elimination_order(factors_of(s))
            assert sorted(elimination_order(fl)) == fl.live_vars()

    def test_baseline_is_descending(self):
        assert elimination_order(factors_of("1^1,2^1,4^1"), baseline=True) == [6, 5, 4, 3, 2, 1]  # x_7 is the fixed point


class TestLimits:
    def test_peak_below_full_expansion(self):
        for a in nonzero_types(6, 9):
            out = integrate_factors(build_integrand(a).factor_list)
            assert out.peak_terms < 2 ** factor_count(a), a

    @pytest.mark.parametrize("backend", ["rational", "modular"])
    def test_ceiling_names_type_and_strategy(self, backend):
        with pytest.raises(ResourceLimitExceeded) as info:
            integrate_factors(factors_of("2^3"), Strategy.EARLY, backend=backend, term_limit=4)
        assert info.value.label == "2^3"
        assert "2^3" in str(info.value) and "early" in str(info.value)

    def test_peak_is_reported(self):
        out = integrate_factors(factors_of("2^4"), backend="rational")
        assert out.peak_terms > 1 and out.strategy == "early" and out.backend == "rational"
