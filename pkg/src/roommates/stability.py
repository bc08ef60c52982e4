"""Stability integrands per cycle type and the signed sums that give p_n.

For a permutation pi with fixed points F and 2-cycle elements M, the
probability that pi is stable for a uniformly random instance is the integral
over the unit cube of

    prod_{i<j, {i,j} not cyclic neighbours} (1 - x_i x_j) * prod_{i not in M u F} x_i

with x_f = 1 for a fixed point f.  It depends on pi only through its cycle type.
p_n is then an inclusion-exclusion sum of these integrals over a family of
cycle types, which can be evaluated directly or through its complement.
"""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .cache import IntegralCache
from .cycletype import (
    CycleFamily,
    CycleType,
    canonical_cycles,
    count_permutations,
    even_cycle_sign_exponent,
    factor_count,
    family_members,
)
from .polyint import (
    DEFAULT_TERM_LIMIT,
    FactorList,
    ResourceLimitExceeded,
    Strategy,
    integrate_factors,
)

log = logging.getLogger(__name__)

__all__ = [
    "Route",
    "IntegrandSpec",
    "TypeTerm",
    "ProbabilityResult",
    "ProbabilityError",
    "RouteMismatch",
    "build_integrand",
    "compute_integral",
    "integral_P",
    "p_even",
    "p_odd",
    "p_n",
]


class Route(enum.Enum):
    DIRECT = "direct"
    COMPLEMENT = "complement"
    BOTH = "both"


@dataclass(frozen=True)
class IntegrandSpec:
    n: int
    cycle_type: CycleType
    layout: tuple[tuple[int, ...], ...]
    factor_list: FactorList | None  # None when the integrand vanishes identically

    @property
    def is_zero(self) -> bool:
        return self.factor_list is None

    def permutation(self) -> tuple[int, ...]:
        """One-line images pi(1..n) of the canonical realization."""
        images = [0] * self.n
        for cyc in self.layout:
            for pos, v in enumerate(cyc):
                images[v - 1] = cyc[(pos + 1) % len(cyc)]
        return tuple(images)


def build_integrand(a: CycleType) -> IntegrandSpec:
    n = a.n
    layout = tuple(canonical_cycles(a))
    if a[1] >= 2:
        return IntegrandSpec(n, a, layout, None)
    neighbours = set()
    linear = set()
    unit = set()
    for cyc in layout:
        k = len(cyc)
        if k == 1:
            unit.add(cyc[0])
            continue
        for pos, v in enumerate(cyc):
            w = cyc[(pos + 1) % k]
            neighbours.add((min(v, w), max(v, w)))
            if k >= 3:
                linear.add(v)
    pairs = tuple(
        (i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1) if (i, j) not in neighbours
    )
    fl = FactorList(n, pairs, frozenset(linear), frozenset(unit), label=str(a))
    return IntegrandSpec(n, a, layout, fl)


@dataclass
class TypeTerm:
    """One cycle type's contribution to a signed sum."""

    cycle_type: CycleType
    P: Fraction
    c: int
    sign: int
    f: int
    elapsed_s: float = 0.0
    strategy: str = ""
    cached: bool = False
    peak_terms: int = 0
    family: str = ""

    @property
    def contribution(self) -> Fraction:
        return self.sign * self.c * self.P


def _evaluate(
    a: CycleType, strategy: str, term_limit: int, backend: str
) -> tuple[Fraction, str, float, int]:
    """Worker body: (value, strategy used, elapsed seconds, peak terms)."""
    t0 = time.perf_counter()
    spec = build_integrand(a)
    if spec.is_zero:
        return Fraction(0), "zero", time.perf_counter() - t0, 0
    if strategy == "auto":
        try:
            out = integrate_factors(spec.factor_list, Strategy.EARLY, backend=backend, term_limit=term_limit)
        except ResourceLimitExceeded as exc:
            log.info("%s; retrying coefficient-wise", exc)
            out = integrate_factors(spec.factor_list, Strategy.COEFFWISE, backend=backend, term_limit=term_limit)
    else:
        out = integrate_factors(spec.factor_list, strategy, backend=backend, term_limit=term_limit)
    return out.value, out.strategy, time.perf_counter() - t0, out.peak_terms


def compute_integral(
    a: CycleType,
    *,
    cache: IntegralCache | None = None,
    strategy: str = "auto",
    term_limit: int = DEFAULT_TERM_LIMIT,
    backend: str = "modular",
) -> TypeTerm:
    """P(a) with its bookkeeping, consulting and updating ``cache``."""
    term = TypeTerm(a, Fraction(0), count_permutations(a), (-1) ** even_cycle_sign_exponent(a), factor_count(a))
    if a[1] >= 2:
        term.strategy = "zero"
        return term
    if cache is not None:
        hit = cache.get(a)
        if hit is not None:
            term.P, term.strategy, term.cached = hit["value"], hit.get("strategy", ""), True
            return term
    term.P, term.strategy, term.elapsed_s, term.peak_terms = _evaluate(a, strategy, term_limit, backend)
    if cache is not None:
        cache.put(a, term.P, term.strategy, term.elapsed_s)
    return term


def integral_P(a: CycleType, **kwargs) -> Fraction:
    """Exact probability that a fixed permutation of cycle type ``a`` is stable."""
    return compute_integral(a, **kwargs).P


@dataclass
class ProbabilityResult:
    n: int
    value: Fraction
    complement: Fraction
    route: str
    per_type: dict[CycleType, TypeTerm] = field(default_factory=dict)
    elapsed_s: float = 0.0

    def terms(self, family: CycleFamily) -> list[TypeTerm]:
        return [t for t in self.per_type.values() if t.family == family.value]


class ProbabilityError(RuntimeError):
    """An integral failed; ``partial`` holds the terms computed so far."""

    def __init__(self, message: str, partial: ProbabilityResult, cause: Exception | None = None):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


class RouteMismatch(ProbabilityError):
    """Direct and complement sums disagree."""


def _families(n: int) -> tuple[CycleFamily, CycleFamily]:
    if n % 2 == 0:
        return CycleFamily.EVEN, CycleFamily.ODD
    return CycleFamily.ONE_FIXED_EVEN, CycleFamily.ODD_CYCLE


def _compute_terms(
    types: list[CycleType],
    family: CycleFamily,
    partial: ProbabilityResult,
    cache: IntegralCache | None,
    strategy: str,
    term_limit: int,
    backend: str,
    executor: Executor | None,
) -> list[TypeTerm]:
    terms: dict[CycleType, TypeTerm] = {}
    todo = []
    for a in types:
        if a in partial.per_type:
            terms[a] = partial.per_type[a]
        elif a[1] >= 2:
            terms[a] = compute_integral(a)
        elif cache is not None and (hit := cache.get(a)) is not None:
            terms[a] = TypeTerm(
                a, hit["value"], count_permutations(a), (-1) ** even_cycle_sign_exponent(a),
                factor_count(a), strategy=hit.get("strategy", ""), cached=True,
            )
        else:
            todo.append(a)
    if executor is not None and len(todo) > 1:
        futures = {a: executor.submit(_evaluate, a, strategy, term_limit, backend) for a in todo}
        results = {}
        errors = []
        for a, fut in futures.items():
            try:
                results[a] = fut.result()
            except ResourceLimitExceeded as exc:
                errors.append(exc)
        for a in todo:
            if a in results:
                terms[a] = _finish(a, results[a], cache)
        if errors:
            _record(terms, types, family, partial)
            raise ProbabilityError(str(errors[0]), partial, errors[0])
    else:
        for a in todo:
            try:
                terms[a] = _finish(a, _evaluate(a, strategy, term_limit, backend), cache)
            except ResourceLimitExceeded as exc:
                _record(terms, types, family, partial)
                raise ProbabilityError(str(exc), partial, exc) from exc
    return _record(terms, types, family, partial)


def _finish(a: CycleType, result, cache: IntegralCache | None) -> TypeTerm:
    value, used, elapsed, peak = result
    if cache is not None:
        cache.put(a, value, used, elapsed)
    return TypeTerm(
        a, value, count_permutations(a), (-1) ** even_cycle_sign_exponent(a), factor_count(a),
        elapsed_s=elapsed, strategy=used, peak_terms=peak,
    )


def _record(terms, types, family, partial) -> list[TypeTerm]:
    out = []
    for a in types:  # canonical (enumeration) order
        if a in terms:
            terms[a].family = family.value
            partial.per_type[a] = terms[a]
            out.append(terms[a])
    return out


def p_n(
    n: int,
    route: Route | str = Route.DIRECT,
    *,
    cache: IntegralCache | None = None,
    strategy: str = "auto",
    term_limit: int = DEFAULT_TERM_LIMIT,
    backend: str = "modular",
    threads: int = 1,
) -> ProbabilityResult:
    """Probability that a random instance of size ``n`` is solvable.

    Even n sums over cycle types with even cycles only (or 1 minus the sum over
    types with an odd cycle and at most one fixed point).  Odd n sums over one
    fixed point plus even cycles (or 1 minus the sum over types with an odd
    cycle of length >= 3).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    route = Route(route)
    direct_family, complement_family = _families(n)
    result = ProbabilityResult(n, Fraction(0), Fraction(0), route.value)
    t0 = time.perf_counter()
    executor = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        direct = complement = None
        if route in (Route.DIRECT, Route.BOTH):
            members = family_members(n, direct_family)
            terms = _compute_terms(members, direct_family, result, cache, strategy, term_limit, backend, executor)
            direct = sum((t.contribution for t in terms), Fraction(0))
        if route in (Route.COMPLEMENT, Route.BOTH):
            members = family_members(n, complement_family)
            terms = _compute_terms(members, complement_family, result, cache, strategy, term_limit, backend, executor)
            complement = sum((t.contribution for t in terms), Fraction(0))
    finally:
        if executor is not None:
            executor.shutdown()
    result.elapsed_s = time.perf_counter() - t0
    if direct is not None:
        result.value, result.complement = direct, 1 - direct
    else:
        result.value, result.complement = 1 - complement, complement
    if direct is not None and complement is not None and direct + complement != 1:
        raise RouteMismatch(
            f"p_{n}: direct sum {direct} and complement sum {complement} do not add to 1", result
        )
    return result


def p_even(n: int, route: Route | str = Route.DIRECT, **kwargs) -> ProbabilityResult:
    if n % 2:
        raise ValueError(f"p_even needs even n, got {n}")
    return p_n(n, route, **kwargs)


def p_odd(n: int, route: Route | str = Route.DIRECT, **kwargs) -> ProbabilityResult:
    if n % 2 == 0:
        raise ValueError(f"p_odd needs odd n, got {n}")
    return p_n(n, route, **kwargs)
