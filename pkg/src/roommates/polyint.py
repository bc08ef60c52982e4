"""Exact integration of products of ``(1 - x_i x_j)`` factors over the unit cube.

The integrand of a stability probability is

    prod_{pairs} (1 - x_i x_j) * prod_{linear} x_i

with some variables fixed to 1.  Fully expanding it is hopeless beyond tiny
sizes, so the engine interleaves multiplication and integration: a variable is
integrated out as soon as every factor that mentions it has been multiplied in.

Two coefficient backends share the same driver:

``rational``
    :class:`SparsePoly`, a dict from exponent tuples to :class:`fractions.Fraction`.
    Slow but obviously correct; used as the oracle.
``modular``
    dense ``int64`` arrays holding integer-scaled coefficients modulo several
    31-bit primes, recombined by CRT.  Integrating ``x^b`` multiplies by
    ``L / (b+1)`` with ``L = lcm(1..deg+1)``, so every coefficient stays an
    integer and the final constant is ``value * prod(L)``.  Because the value
    is bounded by the l1 norm of the starting polynomial (all factors lie in
    [0, 1] on the cube), enough primes make the reconstruction exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Factor",
    "FactorList",
    "SparsePoly",
    "Strategy",
    "ResourceLimitExceeded",
    "IntegralOutcome",
    "DEFAULT_TERM_LIMIT",
    "integrate_variable",
    "elimination_order",
    "evaluate_integral",
    "integrate_factors",
]

DEFAULT_TERM_LIMIT = 2**28

# (i, j) encodes 1 - x_i x_j; (i,) encodes 1 - x_i
Factor = tuple


class Strategy(enum.Enum):
    EARLY = "early"
    COEFFWISE = "coeffwise"


class ResourceLimitExceeded(RuntimeError):
    """Live polynomial grew past the configured term ceiling."""

    def __init__(self, label: str, strategy: str, terms: int, limit: int):
        self.label = label
        self.strategy = strategy
        self.terms = terms
        self.limit = limit
        super().__init__(
            f"integral {label or '<unnamed>'}: {terms} live terms exceed limit {limit} "
            f"with strategy {strategy}"
        )


@dataclass(frozen=True)
class FactorList:
    """Factor description of an integrand over variables ``1..nvars``.

    ``bilinear_pairs`` may mention a unit-substituted variable; :meth:`factors`
    normalizes such a pair ``{i, u}`` into the unary factor ``1 - x_i``.
    """

    nvars: int
    bilinear_pairs: tuple[tuple[int, int], ...]
    linear_vars: frozenset = frozenset()
    unit_substitutions: frozenset = frozenset()
    label: str = ""

    def __post_init__(self):
        pairs = []
        for pair in self.bilinear_pairs:
            i, j = sorted(pair)
            if i == j:
                raise ValueError(f"degenerate pair {pair}")
            if i < 1 or j > self.nvars:
                raise ValueError(f"pair {pair} outside variables 1..{self.nvars}")
            if i in self.unit_substitutions and j in self.unit_substitutions:
                raise ValueError(f"pair {pair} joins two unit variables; integrand is zero")
            pairs.append((i, j))
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate bilinear pair")
        object.__setattr__(self, "bilinear_pairs", tuple(pairs))
        object.__setattr__(self, "linear_vars", frozenset(self.linear_vars))
        object.__setattr__(self, "unit_substitutions", frozenset(self.unit_substitutions))
        for v in self.linear_vars | self.unit_substitutions:
            if not 1 <= v <= self.nvars:
                raise ValueError(f"variable {v} outside 1..{self.nvars}")
        if self.linear_vars & self.unit_substitutions:
            raise ValueError("a unit-substituted variable cannot carry a linear prefactor")

    def live_vars(self) -> list[int]:
        return [v for v in range(1, self.nvars + 1) if v not in self.unit_substitutions]

    def factors(self) -> list[Factor]:
        out = []
        for i, j in self.bilinear_pairs:
            if j in self.unit_substitutions:
                out.append((i,))
            elif i in self.unit_substitutions:
                out.append((j,))
            else:
                out.append((i, j))
        return out

    def to_sparse(self) -> "SparsePoly":
        """Fully expanded integrand; exponential in the number of factors."""
        p = SparsePoly.constant(1)
        for fac in self.factors():
            p = p.mul_factor(fac)
        for v in sorted(self.linear_vars):
            p = p * SparsePoly.variable(v)
        return p


class SparsePoly:
    """Multivariate polynomial with exact rational coefficients.

    ``variables`` names the live slots; ``terms`` maps exponent tuples aligned
    with those slots to nonzero Fractions.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, variables: Sequence[int] = (), terms: dict | None = None):
        self.variables = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("repeated variable")
        self.terms: dict[tuple[int, ...], Fraction] = {}
        width = len(self.variables)
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != width or any(b < 0 for b in e):
                raise ValueError(f"bad exponent vector {e}")
            if c:
                self.terms[e] = Fraction(c)

    @classmethod
    def constant(cls, c) -> "SparsePoly":
        return cls((), {(): c})

    @classmethod
    def variable(cls, v: int, power: int = 1) -> "SparsePoly":
        return cls((v,), {(power,): 1})

    @classmethod
    def from_dict(cls, terms: dict[tuple[tuple[int, int], ...], object]) -> "SparsePoly":
        """Build from ``{((var, exp), ...): coeff}``."""
        vs = sorted({v for mono in terms for v, _ in mono})
        pos = {v: k for k, v in enumerate(vs)}
        out: dict[tuple[int, ...], Fraction] = {}
        for mono, c in terms.items():
            e = [0] * len(vs)
            for v, b in mono:
                e[pos[v]] += b
            key = tuple(e)
            out[key] = out.get(key, 0) + Fraction(c)
        return cls(vs, out)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"SparsePoly({self.variables}, {len(self.terms)} terms)"

    def as_dict(self) -> dict[tuple[tuple[int, int], ...], Fraction]:
        """Variable-labelled view with zero exponents dropped."""
        out = {}
        for e, c in self.terms.items():
            mono = tuple((v, b) for v, b in zip(self.variables, e) if b)
            out[tuple(sorted(mono))] = c
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePoly):
            if isinstance(other, (int, Fraction)):
                other = SparsePoly.constant(other)
            else:
                return NotImplemented
        return self.as_dict() == other.as_dict()

    __hash__ = None

    def _extended(self, vs: Iterable[int]) -> "SparsePoly":
        new = [v for v in vs if v not in self.variables]
        if not new:
            return self
        pad = (0,) * len(new)
        p = SparsePoly.__new__(SparsePoly)
        p.variables = self.variables + tuple(new)
        p.terms = {e + pad: c for e, c in self.terms.items()}
        return p

    def _aligned(self, other: "SparsePoly") -> tuple["SparsePoly", "SparsePoly"]:
        a = self._extended(other.variables)
        b = other._extended(a.variables)
        if b.variables != a.variables:
            perm = [b.variables.index(v) for v in a.variables]
            b = SparsePoly(a.variables, {tuple(e[k] for k in perm): c for e, c in b.terms.items()})
        return a, b

    def __add__(self, other) -> "SparsePoly":
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(other)
        a, b = self._aligned(other)
        out = dict(a.terms)
        for e, c in b.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return SparsePoly(a.variables, out)

    __radd__ = __add__

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.variables, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "SparsePoly":
        return self + (-other if isinstance(other, SparsePoly) else -Fraction(other))

    def scale(self, c) -> "SparsePoly":
        c = Fraction(c)
        return SparsePoly(self.variables, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other) -> "SparsePoly":
        if not isinstance(other, SparsePoly):
            return self.scale(other)
        a, b = self._aligned(other)
        out: dict[tuple[int, ...], Fraction] = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return SparsePoly(a.variables, out)

    __rmul__ = __mul__

    def mul_factor(self, factor: Factor) -> "SparsePoly":
        """Multiply by ``1 - x_i x_j`` (pair) or ``1 - x_i`` (singleton)."""
        p = self._extended(factor)
        slots = [p.variables.index(v) for v in factor]
        out = dict(p.terms)
        for e, c in p.terms.items():
            bumped = list(e)
            for s in slots:
                bumped[s] += 1
            key = tuple(bumped)
            s = out.get(key, 0) - c
            if s:
                out[key] = s
            else:
                del out[key]
        q = SparsePoly.__new__(SparsePoly)
        q.variables = p.variables
        q.terms = out
        return q

    def integrate(self, v: int, extra_degree: int = 0) -> "SparsePoly":
        """Integral over x_v in [0, 1] of ``x_v**extra_degree * self``."""
        if v not in self.variables:
            raise ValueError(f"variable {v} is not live in {self.variables}")
        k = self.variables.index(v)
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self.terms.items():
            key = e[:k] + e[k + 1:]
            out[key] = out.get(key, 0) + c / (e[k] + extra_degree + 1)
        q = SparsePoly.__new__(SparsePoly)
        q.variables = self.variables[:k] + self.variables[k + 1:]
        q.terms = {e: c for e, c in out.items() if c}
        return q

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return sum(self.terms.values(), Fraction(0))

    def degree_in(self, v: int) -> int:
        if v not in self.variables:
            return 0
        k = self.variables.index(v)
        return max((e[k] for e in self.terms), default=0)

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self.terms.values()), Fraction(0))


def integrate_variable(p: SparsePoly, v: int) -> SparsePoly:
    """Integrate ``p`` over ``x_v`` on [0, 1] and drop the variable."""
    return p.integrate(v)


# -- elimination ordering -------------------------------------------------


def _greedy_order(live: Sequence[int], factors: Sequence[Factor]) -> list[int]:
    pending = [set(f) for f in factors]
    remaining = set(live)
    order = []
    while remaining:
        counts = {v: 0 for v in remaining}
        for f in pending:
            for v in f:
                if v in counts:
                    counts[v] += 1
        v = min(remaining, key=lambda u: (counts[u], u))
        order.append(v)
        remaining.discard(v)
        pending = [f for f in pending if v not in f]
    return order


def elimination_order(f: FactorList, baseline: bool = False) -> list[int]:
    """Order in which live variables are integrated out.

    Greedy: repeatedly take the variable mentioned by the fewest
    not-yet-multiplied factors (lowest index on ties).  ``baseline=True`` gives
    plain descending index order.
    """
    live = f.live_vars()
    if baseline:
        return sorted(live, reverse=True)
    return _greedy_order(live, f.factors())


# -- dense modular backend ------------------------------------------------


@lru_cache(maxsize=None)
def _primes(count: int) -> tuple[int, ...]:
    """The ``count`` largest primes below 2**31."""
    limit = math.isqrt(2**31) + 1
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    small = [i for i in range(limit + 1) if sieve[i]]
    out = []
    cand = 2**31 - 1
    while len(out) < count:
        if all(cand % q for q in small if q * q <= cand):
            out.append(cand)
        cand -= 2
    return tuple(out)


def _crt_symmetric(residues: Sequence[int], moduli: Sequence[int]) -> int:
    x, m = 0, 1
    for r, p in zip(residues, moduli):
        t = ((r - x) * pow(m, -1, p)) % p
        x += m * t
        m *= p
    return x - m if x > m // 2 else x


class _DenseModPoly:
    """Dense coefficient box, one slab per prime, integer-scaled coefficients."""

    def __init__(self, primes: Sequence[int], start: SparsePoly):
        self.p = np.array(primes, dtype=np.int64)
        self.axes: list[int] = list(start.variables)
        dims = [start.degree_in(v) + 1 for v in self.axes]
        self.a = np.zeros((len(primes), *dims), dtype=np.int64)
        pcol = self.p.reshape(-1, *([1] * len(dims)))
        for e, c in start.terms.items():
            if c.denominator != 1:
                raise ValueError("modular backend needs integer starting coefficients")
            self.a[(slice(None), *e)] = [int(c.numerator) % int(q) for q in primes]
        self.a %= pcol

    def box(self, extra: dict[int, int] | None = None) -> int:
        size = 1
        for k, v in enumerate(self.axes):
            size *= self.a.shape[k + 1] + (extra or {}).get(v, 0)
        for v, d in (extra or {}).items():
            if v not in self.axes:
                size *= 1 + d
        return size

    def _pcol(self) -> np.ndarray:
        return self.p.reshape(-1, *([1] * (self.a.ndim - 1)))

    def mul_factor(self, factor: Factor) -> None:
        for v in factor:
            if v not in self.axes:
                self.axes.append(v)
                self.a = self.a[..., np.newaxis]
        ks = [self.axes.index(v) + 1 for v in factor]
        shape = list(self.a.shape)
        for k in ks:
            shape[k] += 1
        grown = np.zeros(shape, dtype=np.int64)
        low = [slice(None)] * self.a.ndim
        high = [slice(None)] * self.a.ndim
        for k in ks:
            low[k] = slice(0, -1)
            high[k] = slice(1, None)
        grown[tuple(low)] = self.a
        target = grown[tuple(high)]
        target -= self.a
        np.remainder(target, self._pcol(), out=target)
        self.a = grown

    def integrate(self, v: int, extra_degree: int) -> int:
        """Integrate x_v out; returns the scale factor applied (the lcm)."""
        if v not in self.axes:
            return self._scale_constant(extra_degree)
        k = self.axes.index(v) + 1
        deg = self.a.shape[k] - 1
        lcm = math.lcm(*range(1, deg + extra_degree + 2))
        weights = np.array(
            [[(lcm // (b + extra_degree + 1)) % int(q) for b in range(deg + 1)] for q in self.p],
            dtype=np.int64,
        )
        moved = np.moveaxis(self.a, k, -1)
        wshape = [len(self.p)] + [1] * (moved.ndim - 2) + [deg + 1]
        prod = moved * weights.reshape(wshape)
        pcol = self.p.reshape(-1, *([1] * (moved.ndim - 1)))
        np.remainder(prod, pcol, out=prod)
        summed = prod.sum(axis=-1)
        np.remainder(summed, pcol[..., 0], out=summed)
        self.a = summed
        del self.axes[k - 1]
        return lcm

    def _scale_constant(self, extra_degree: int) -> int:
        # x_v absent: integral of x_v**extra_degree is 1/(extra_degree+1)
        lcm = math.lcm(*range(1, extra_degree + 2))
        factor = lcm // (extra_degree + 1)
        if factor != 1:
            self.a = (self.a * factor) % self._pcol()
        return lcm

    def residues(self) -> list[int]:
        if self.axes:
            raise ValueError("variables remain live")
        return [int(r) for r in self.a.reshape(len(self.p))]


# -- driver ---------------------------------------------------------------


@dataclass
class IntegralOutcome:
    value: Fraction
    peak_terms: int
    strategy: str
    backend: str
    order: list[int] = field(default_factory=list)


def _scale_bound(start: SparsePoly, factors: Sequence[Factor], linear, order) -> int:
    """Product of the lcm scale factors the modular backend will apply."""
    touches: dict[int, int] = {}
    for f in factors:
        for v in f:
            touches[v] = touches.get(v, 0) + 1
    total = 1
    for v in order:
        deg = start.degree_in(v) + touches.get(v, 0)
        total *= math.lcm(*range(1, deg + (1 if v in linear else 0) + 2))
    return total


def _eliminate(
    start: SparsePoly,
    factors: Sequence[Factor],
    linear: frozenset,
    order: Sequence[int],
    backend: str,
    limit: int,
    label: str,
    strategy: str,
) -> tuple[Fraction, int]:
    """Run early elimination from ``start``; returns (value, peak live terms)."""
    if set(start.variables) - set(order):
        raise ValueError("starting polynomial mentions variables outside the order")
    by_var: dict[int, list[int]] = {}
    for idx, f in enumerate(factors):
        for v in f:
            by_var.setdefault(v, []).append(idx)
    done = [False] * len(factors)

    if backend == "rational":
        poly = start
        peak = len(poly)
        for v in order:
            for idx in by_var.get(v, ()):
                if not done[idx]:
                    done[idx] = True
                    poly = poly.mul_factor(factors[idx])
                    peak = max(peak, len(poly))
                    if len(poly) > limit:
                        raise ResourceLimitExceeded(label, strategy, len(poly), limit)
            if v in poly.variables:
                poly = poly.integrate(v, 1 if v in linear else 0)
            else:
                poly = poly.scale(Fraction(1, 2 if v in linear else 1))
        return poly.constant_value(), peak

    if backend != "modular":
        raise ValueError(f"unknown backend {backend!r}")
    scale = _scale_bound(start, factors, linear, order)
    bound = 2 * int(math.ceil(start.l1_norm())) * scale + 1
    nprimes = 1
    while math.prod(_primes(nprimes)) <= bound:
        nprimes += 1
    primes = _primes(nprimes)
    poly = _DenseModPoly(primes, start)
    peak = poly.box()
    applied = 1
    for v in order:
        for idx in by_var.get(v, ()):
            if not done[idx]:
                done[idx] = True
                grow = {u: 1 for u in factors[idx]}
                size = poly.box(grow)
                if size > limit:
                    raise ResourceLimitExceeded(label, strategy, size, limit)
                poly.mul_factor(factors[idx])
                peak = max(peak, size)
        applied *= poly.integrate(v, 1 if v in linear else 0)
    assert applied == scale
    numer = _crt_symmetric(poly.residues(), primes)
    return Fraction(numer, scale), peak


def integrate_factors(
    f: FactorList,
    strategy: Strategy | str = Strategy.EARLY,
    *,
    baseline_order: bool = False,
    backend: str = "modular",
    term_limit: int = DEFAULT_TERM_LIMIT,
) -> IntegralOutcome:
    """Exact integral of ``f`` over the unit cube, with bookkeeping."""
    strategy = Strategy(strategy)
    factors = f.factors()
    linear = f.linear_vars
    if strategy is Strategy.EARLY:
        order = elimination_order(f, baseline=baseline_order)
        value, peak = _eliminate(
            SparsePoly.constant(1), factors, linear, order, backend, term_limit, f.label, strategy.value
        )
        return IntegralOutcome(value, peak, strategy.value, backend, order)

    # expand in the highest live variable and integrate each coefficient separately
    live = f.live_vars()
    if not live:
        return IntegralOutcome(Fraction(1), 1, strategy.value, backend, [])
    pivot = max(live)
    touching = [fac for fac in factors if pivot in fac]
    rest = [fac for fac in factors if pivot not in fac]
    expanded = SparsePoly.constant(1)
    for fac in touching:
        expanded = expanded.mul_factor(fac)
    others = [v for v in live if v != pivot]
    order = sorted(others, reverse=True) if baseline_order else _greedy_order(others, rest)
    coeffs: dict[int, dict[tuple, Fraction]] = {}
    if pivot in expanded.variables:
        k = expanded.variables.index(pivot)
        vars_wo = expanded.variables[:k] + expanded.variables[k + 1:]
        for e, c in expanded.terms.items():
            coeffs.setdefault(e[k], {})[e[:k] + e[k + 1:]] = c
    else:
        vars_wo = expanded.variables
        coeffs[0] = dict(expanded.terms)
    shift = 1 if pivot in linear else 0
    total = Fraction(0)
    peak = 0
    for power in sorted(coeffs):
        start = SparsePoly(vars_wo, coeffs[power])
        part, part_peak = _eliminate(
            start, rest, linear - {pivot}, order, backend, term_limit, f.label, strategy.value
        )
        peak = max(peak, part_peak)
        total += part / (power + shift + 1)
    return IntegralOutcome(total, peak, strategy.value, backend, order + [pivot])


def evaluate_integral(
    f: FactorList,
    strategy: Strategy | str = Strategy.EARLY,
    *,
    baseline_order: bool = False,
    backend: str = "modular",
    term_limit: int = DEFAULT_TERM_LIMIT,
) -> Fraction:
    """Exact value of the integral of ``f`` over [0, 1]^live."""
    return integrate_factors(
        f, strategy, baseline_order=baseline_order, backend=backend, term_limit=term_limit
    ).value
