"""Expectations of products of normalized i.i.d. sums.

The sums are ``xi_j = -n**-0.5 * sum_i w_j(X_i)`` with centred summands
``w_j = l^(j) + a_j`` (``l = log f``).  Three layers:

* ``psi``-moments ``E[prod psi_i(X)]`` are reduced to the basis
  ``{1, eta2..eta6}`` (plus auxiliary ``mu(...)`` symbols at weight >= 6)
  by solving the integration-by-parts relations ``E[(g f)'/f] = 0``.
* ``w``-moments expand the ``w_j`` in ``psi``'s and reduce.
* ``xi``-moments sum over set partitions of the factors into blocks of size
  >= 2, counted per block profile, with the falling factorial ``(n)_b``
  expanded in ``1/n``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping

from .symbolic import (
    DEFAULT_CAP,
    GradedSeries,
    Symbol,
    SymPoly,
    ew_symbol,
    mu_symbol,
    psi_symbol,
)

__all__ = [
    "XiMonomial",
    "MAX_XI_DEGREE",
    "ETA_BASIS",
    "derive_psi",
    "log_derivative",
    "w_expand",
    "a_values",
    "ibp_reduce",
    "psi_expectation",
    "expect_psi_poly",
    "w_moment",
    "block_profiles",
    "xi_expectation_raw",
    "xi_expectation",
    "reduce_raw",
    "expect_xi_series",
    "GENERAL_FORMULAS",
    "general_formula",
    "verify_general_formulas",
]

MAX_XI_DEGREE = 20

ETA = {j: Symbol(f"eta{j}") for j in range(2, 7)}

# psi-monomials kept as basis elements; psi1^2 is a2 = 1
ETA_BASIS: dict[tuple, SymPoly] = {
    (): SymPoly.const(1),
    (1, 1): SymPoly.const(1),
    (1, 1, 1): SymPoly.symbol(ETA[3]),
    (2, 2): SymPoly.symbol(ETA[2]),
    (1, 1, 1, 1): SymPoly.symbol(ETA[4]),
    (1, 1, 1, 1, 1): SymPoly.symbol(ETA[5]),
    (3, 2): SymPoly.symbol(ETA[6]),
}


# ---------------------------------------------------------------------------
# psi calculus


def _psi_part(mono: tuple) -> tuple[tuple, tuple]:
    """Split a monomial into a psi-partition and the remaining factors."""
    parts = []
    rest = []
    for s, e in mono:
        if s.family == "psi":
            parts += [int(s.name[3:])] * e
        else:
            rest.append((s, e))
    return tuple(sorted(parts, reverse=True)), tuple(rest)


def _partition_poly(parts: Iterable[int]) -> SymPoly:
    p = SymPoly.const(1)
    for i in parts:
        p = p * SymPoly.symbol(psi_symbol(i))
    return p


def derive_psi(p: SymPoly) -> SymPoly:
    """d/dx of a polynomial in psi's, using psi_k' = psi_{k+1} - psi_1 psi_k.

    Non-psi symbols are treated as constants.
    """
    out = SymPoly()
    psi1 = SymPoly.symbol(psi_symbol(1))
    for mono, c in p.terms.items():
        for idx, (s, e) in enumerate(mono):
            if s.family != "psi":
                continue
            k = int(s.name[3:])
            rest = dict(mono)
            rest[s] = e - 1
            if not rest[s]:
                del rest[s]
            d = SymPoly.symbol(psi_symbol(k + 1)) - psi1 * SymPoly.symbol(s)
            out = out + SymPoly.from_monomial(rest, c * e) * d
    return out


@lru_cache(maxsize=None)
def log_derivative(j: int) -> SymPoly:
    """``(log f)^(j)`` as a polynomial in psi_1..psi_j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    if j == 1:
        return SymPoly.symbol(psi_symbol(1))
    return derive_psi(log_derivative(j - 1))


@lru_cache(maxsize=None)
def w_expand(j: int) -> SymPoly:
    """Centred summand ``w_j = -(rho^(j) - a_j)`` in psi's.

    ``a_1 = 0`` and ``a_2 = 1`` are folded in; ``a_3..a_5`` stay symbolic.
    """
    if not 1 <= j <= 5:
        raise ValueError("w_j is defined for j = 1..5")
    p = log_derivative(j)
    if j == 2:
        return p + 1
    if j > 2:
        return p + SymPoly.symbol(f"a{j}")
    return p


def _partitions(total: int, largest: int | None = None):
    if largest is None:
        largest = total
    if total == 0:
        yield ()
        return
    for first in range(min(total, largest), 0, -1):
        for rest in _partitions(total - first, first):
            yield (first,) + rest


def _column_order(weight: int) -> list[tuple]:
    cols = list(_partitions(weight))
    # columns late in the order are kept as free (basis) variables
    def key(part):
        return (part in ETA_BASIS, part.count(1), tuple(-p for p in part))
    return sorted(cols, key=key)


@lru_cache(maxsize=None)
def _reduction_table(weight: int) -> dict[tuple, SymPoly]:
    """Every psi-monomial of the given weight expressed in the basis."""
    cols = _column_order(weight)
    index = {c: i for i, c in enumerate(cols)}
    rows = []
    psi1 = SymPoly.symbol(psi_symbol(1))
    for g in _partitions(weight - 1) if weight else ():
        gp = _partition_poly(g)
        rel = derive_psi(gp) + psi1 * gp
        row = {}
        for mono, c in rel.terms.items():
            part, rest = _psi_part(mono)
            assert not rest
            row[index[part]] = row.get(index[part], 0) + c
        row = {i: c for i, c in row.items() if c}
        if row:
            rows.append(row)

    # reduced row echelon form over the rationals, pivots left to right
    pivots: dict[int, dict] = {}
    for row in rows:
        row = dict(row)
        for pc, prow in pivots.items():
            if pc in row:
                f = row[pc]
                for i, v in prow.items():
                    nv = row.get(i, 0) - f * v
                    if nv:
                        row[i] = nv
                    else:
                        row.pop(i, None)
        if not row:
            continue
        pc = min(row)
        inv = 1 / row[pc]
        row = {i: v * inv for i, v in row.items()}
        for other in pivots.values():
            if pc in other:
                f = other[pc]
                for i, v in row.items():
                    nv = other.get(i, 0) - f * v
                    if nv:
                        other[i] = nv
                    else:
                        other.pop(i, None)
        pivots[pc] = row

    free = [c for i, c in enumerate(cols) if i not in pivots]
    basis = {}
    for part in free:
        if part in ETA_BASIS:
            basis[part] = ETA_BASIS[part]
        elif weight <= 5:
            raise RuntimeError(f"unexpected free psi-moment {part} at weight {weight}")
        else:
            basis[part] = SymPoly.symbol(mu_symbol(part))
    table = dict(basis)
    for pc, row in pivots.items():
        val = SymPoly()
        for i, v in row.items():
            if i != pc:
                val = val - basis[cols[i]] * v
        table[cols[pc]] = val
    return table


def ibp_reduce(m: Iterable[int] | SymPoly) -> SymPoly:
    """``E[prod psi_i]`` for a monomial given as indices (e.g. ``(1, 1, 2)``)
    or as a single-term ``SymPoly`` in psi symbols."""
    if isinstance(m, SymPoly):
        mono = m.single_monomial()
        part, rest = _psi_part(mono)
        if rest:
            raise ValueError("ibp_reduce takes a pure psi monomial")
        return ibp_reduce(part) * m.coeff(mono)
    part = tuple(sorted(m, reverse=True))
    if any(i < 1 for i in part):
        raise ValueError("psi indices start at 1")
    return _reduction_table(sum(part))[part]


psi_expectation = ibp_reduce


@lru_cache(maxsize=None)
def a_values() -> dict[Symbol, SymPoly]:
    """``a_j = E rho^(j)(X) = -E (log f)^(j)`` in the eta basis (``a2 = 1``)."""
    return {
        Symbol(f"a{j}"): -expect_psi_poly(log_derivative(j), substitute_a=False)
        for j in range(2, 6)
    }


def expect_psi_poly(p: SymPoly, substitute_a: bool = True) -> SymPoly:
    """Expectation of a polynomial in psi's; other symbols are constants."""
    out = SymPoly()
    for mono, c in p.terms.items():
        part, rest = _psi_part(mono)
        out = out + ibp_reduce(part) * SymPoly._raw({rest: c})
    if substitute_a:
        table = {s: v for s, v in a_values().items() if s.name != "a2"}
        table[Symbol("a2")] = SymPoly.const(1)
        table[Symbol("a2inv")] = SymPoly.const(1)
        out = out.subs(table)
    return out


@lru_cache(maxsize=None)
def _w_moment(labels: tuple[int, ...]) -> SymPoly:
    p = SymPoly.const(1)
    for j in labels:
        p = p * w_expand(j)
    return expect_psi_poly(p)


def w_moment(ws: Iterable[int]) -> SymPoly:
    """``E[prod_j w_j]`` for a multiset of w-indices, in the eta basis."""
    labels = tuple(sorted(ws))
    if any(not 1 <= j <= 5 for j in labels):
        raise ValueError("w-indices must lie in 1..5")
    return _w_moment(labels)


# ---------------------------------------------------------------------------
# xi expectations


@dataclass(frozen=True)
class XiMonomial:
    """Exponents ``(m1, ..., m5)`` of ``xi1..xi5``."""

    exponents: tuple[int, int, int, int, int]

    def __post_init__(self):
        if len(self.exponents) != 5 or any(e < 0 for e in self.exponents):
            raise ValueError("need five non-negative exponents")

    @classmethod
    def of(cls, m) -> "XiMonomial":
        if isinstance(m, XiMonomial):
            return m
        if isinstance(m, str):
            m = SymPoly.parse(m)
        if isinstance(m, SymPoly):
            mono = m.single_monomial()
            exps = [0] * 5
            for s, e in mono:
                if s.family != "xi":
                    raise ValueError(f"{s.name} is not a xi symbol")
                exps[int(s.name[2:]) - 1] = e
            return cls(tuple(exps))
        if isinstance(m, Mapping):
            exps = [0] * 5
            for j, e in m.items():
                exps[int(j) - 1] = e
            return cls(tuple(exps))
        exps = tuple(m) + (0,) * (5 - len(tuple(m)))
        return cls(exps)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def labels(self) -> tuple[int, ...]:
        return tuple(j + 1 for j, e in enumerate(self.exponents) for _ in range(e))

    def __str__(self) -> str:
        parts = [
            f"xi{j + 1}" + (f"^{e}" if e > 1 else "")
            for j, e in enumerate(self.exponents)
            if e
        ]
        return "*".join(parts) or "1"


@lru_cache(maxsize=None)
def block_profiles(counts: tuple[int, ...], budget: int) -> tuple:
    """Set partitions of a labelled multiset into blocks of size >= 2.

    ``counts[i]`` is the multiplicity of label ``i + 1``.  Only partitions
    with excess ``sum(|B| - 2) <= budget`` are kept.  Returns pairs
    ``(blocks, count)`` where ``blocks`` is a sorted tuple of label tuples
    and ``count`` is the number of set partitions with that block content.
    """
    if not any(counts):
        return (((), 1),)
    first = next(i for i, c in enumerate(counts) if c)
    rem = list(counts)
    rem[first] -= 1
    out: dict[tuple, int] = defaultdict(int)

    def choices(i, size_left):
        if i == len(rem):
            yield ()
            return
        for r in range(min(rem[i], size_left) + 1):
            for tail in choices(i + 1, size_left - r):
                yield (r,) + tail

    for r in choices(0, budget + 1):
        size = sum(r)
        if size == 0:
            continue
        mult = 1
        for have, take in zip(rem, r):
            mult *= comb(have, take)
        block = (first + 1,) + tuple(
            i + 1 for i, take in enumerate(r) for _ in range(take)
        )
        block = tuple(sorted(block))
        left = tuple(h - t for h, t in zip(rem, r))
        for sub, c in block_profiles(left, budget - (size - 1)):
            out[tuple(sorted(sub + (block,)))] += mult * c
    return tuple(out.items())


@lru_cache(maxsize=None)
def _falling_coeffs(b: int) -> tuple[int, ...]:
    """Coefficients c_j with ``n**-b * (n)_b = sum_j c_j n**-j``."""
    poly = [1]  # ascending powers of n
    for i in range(b):
        new = [0] * (len(poly) + 1)
        for k, c in enumerate(poly):
            new[k + 1] += c
            new[k] -= i * c
        poly = new
    return tuple(poly[b - j] for j in range(b + 1))


@lru_cache(maxsize=None)
def _xi_raw(exponents: tuple, cap: int) -> GradedSeries:
    d = sum(exponents)
    if d > MAX_XI_DEGREE:
        raise OverflowError(f"xi degree {d} exceeds supported bound {MAX_XI_DEGREE}")
    slots = [SymPoly() for _ in range(cap + 1)]
    sign = -1 if d % 2 else 1
    for blocks, count in block_profiles(tuple(exponents), cap):
        b = len(blocks)
        e = d - 2 * b
        prod = SymPoly.const(sign * count)
        for blk in blocks:
            prod = prod * SymPoly.symbol(ew_symbol(blk))
        for j, c in enumerate(_falling_coeffs(b)):
            if e + 2 * j > cap:
                break
            if c:
                slots[e + 2 * j] = slots[e + 2 * j] + prod * c
    return GradedSeries(slots, cap)


def xi_expectation_raw(m, cap: int = DEFAULT_CAP) -> GradedSeries:
    """``E[prod xi_j^{m_j}]`` over raw block moments ``Ew(...)``."""
    return _xi_raw(XiMonomial.of(m).exponents, cap)


def reduce_raw(p: SymPoly) -> SymPoly:
    """Replace every ``Ew(...)`` symbol by its eta-basis value."""
    table = {}
    for s in p.symbols():
        if s.family == "Ew":
            labels = tuple(int(c) for c in s.name[3:-1].split(","))
            table[s] = w_moment(labels)
    return p.subs(table) if table else p


@lru_cache(maxsize=None)
def _xi_reduced(exponents: tuple, cap: int) -> GradedSeries:
    return _xi_raw(exponents, cap).map(reduce_raw)


def xi_expectation(m, cap: int = DEFAULT_CAP) -> GradedSeries:
    """``E[prod xi_j^{m_j}]`` as a graded series over the eta basis."""
    return _xi_reduced(XiMonomial.of(m).exponents, cap)


def expect_xi_series(s: GradedSeries, raw: bool = False) -> GradedSeries:
    """Apply E to a series whose coefficients are polynomials in xi's.

    Non-xi symbols (eta's, a's) are treated as constants.
    """
    cap = s.order_cap
    fn = xi_expectation_raw if raw else xi_expectation
    out = GradedSeries.zero(cap)
    for k, coeff in enumerate(s.coeffs):
        if not coeff:
            continue
        for mono, c in coeff.terms.items():
            exps = [0] * 5
            rest = []
            for sym, e in mono:
                if sym.family == "xi":
                    exps[int(sym.name[2:]) - 1] = e
                else:
                    rest.append((sym, e))
            ex = fn(tuple(exps), cap - k)
            out = out + ex.extend(cap).shift(k) * SymPoly._raw({tuple(rest): c})
    return out


# ---------------------------------------------------------------------------
# closed-form general formulas, checked against the partition engine


def _invf(m: int) -> Fraction:
    return Fraction(1, factorial(m)) if m >= 0 else Fraction(0)


def _multi(total: int, fixed: Iterable[int] = ()) -> int:
    """Multinomial ``total! / (prod fixed! * 2!^r)`` with the rest in 2's."""
    fixed = list(fixed)
    left = total - sum(fixed)
    if left < 0 or left % 2:
        return 0
    out = factorial(total) // (2 ** (left // 2))
    for f in fixed:
        out //= factorial(f)
    return out


def _E(*labels: int) -> SymPoly:
    return SymPoly.symbol(ew_symbol(labels))


def _pow(p: SymPoly, k: int) -> SymPoly:
    return p**k if k >= 0 else SymPoly()


def _f_xi1_even(k, j=None):
    E2, E3, E4 = _E(1, 1), _E(1, 1, 1), _E(1, 1, 1, 1)
    lead = _multi(2 * k) * _invf(k) * _pow(E2, k)
    second = (
        -_multi(2 * k) * comb(k, 2) * _invf(k) * _pow(E2, k)
        + _multi(2 * k, [4]) * _invf(k - 2) * E4 * _pow(E2, k - 2)
        + _multi(2 * k, [3, 3]) * Fraction(1, 2) * _invf(k - 3) * E3**2 * _pow(E2, k - 3)
    )
    return (2 * k,), {0: lead, 2: second}


def _f_xi1_odd(k, j=None):
    E2, E3, E4, E5 = _E(1, 1), _E(1, 1, 1), _E(1, 1, 1, 1), _E(1, 1, 1, 1, 1)
    t1 = _multi(2 * k + 1, [3]) * _invf(k - 1) * _pow(E2, k - 1) * E3
    t3 = (
        -comb(k, 2) * t1
        + _multi(2 * k + 1, [5]) * _invf(k - 2) * _pow(E2, k - 2) * E5
        + _multi(2 * k + 1, [4, 3]) * _invf(k - 3) * _pow(E2, k - 3) * E4 * E3
    )
    return (2 * k + 1,), {1: -t1, 3: -t3}


def _f_xi1_even_xij(k, j=2):
    E2, E3, E5 = _E(1, 1), _E(1, 1, 1), _E(1, 1, 1, 1, 1)
    E4 = _E(1, 1, 1, 1)
    E1j, E11j, E111j, E1111j = _E(1, j), _E(1, 1, j), _E(1, 1, 1, j), _E(1, 1, 1, 1, j)
    a = _multi(2 * k) * _invf(k - 1) * E11j * _pow(E2, k - 1)
    b = _multi(2 * k, [1, 3]) * _invf(k - 2) * E3 * E1j * _pow(E2, k - 2)
    t1 = a + b
    t3 = (
        -comb(k, 2) * _invf(k - 1) * _multi(2 * k) * E11j * _pow(E2, k - 1)
        - comb(k, 2) * _invf(k - 2) * _multi(2 * k, [1, 3]) * E3 * E1j * _pow(E2, k - 2)
        + _multi(2 * k, [5, 1]) * _invf(k - 3) * E5 * E1j * _pow(E2, k - 3)
        + _multi(2 * k, [4]) * _invf(k - 3) * E4 * E11j * _pow(E2, k - 3)
        + _multi(2 * k, [3, 3]) * _invf(k - 3) * E3 * E111j * _pow(E2, k - 3)
        + _multi(2 * k, [4]) * _invf(k - 2) * E1111j * _pow(E2, k - 2)
    )
    exps = [2 * k, 0, 0, 0]
    exps[j - 1] += 1
    return tuple(exps), {1: -t1, 3: -t3}


def _f_xi1_odd_xi2(k, j=None):
    E2, E3, E4 = _E(1, 1), _E(1, 1, 1), _E(1, 1, 1, 1)
    E12, E112, E1112 = _E(1, 2), _E(1, 1, 2), _E(1, 1, 1, 2)
    dfact = 1
    for i in range(1, 2 * k + 2, 2):
        dfact *= i
    lead = dfact * _pow(E2, k) * E12
    second = (
        -comb(k + 1, 2) * _invf(k) * _multi(2 * k + 1, [1]) * E12 * _pow(E2, k)
        + _invf(k - 2) * _multi(2 * k + 1, [4, 1]) * E4 * E12 * _pow(E2, k - 2)
        + Fraction(1, 2) * _invf(k - 3) * _multi(2 * k + 1, [3, 3, 1]) * E3**2 * E12 * _pow(E2, k - 3)
        + _invf(k - 1) * _multi(2 * k + 1, [3]) * E1112 * _pow(E2, k - 1)
        + _invf(k - 2) * _multi(2 * k + 1, [3]) * E3 * E112 * _pow(E2, k - 2)
    )
    return (2 * k + 1, 1), {0: lead, 2: second}


def _f_xi1_even_xi2sq(k, j=None):
    E2, E3, E4 = _E(1, 1), _E(1, 1, 1), _E(1, 1, 1, 1)
    E12, E22, E112, E122 = _E(1, 2), _E(2, 2), _E(1, 1, 2), _E(1, 2, 2)
    E1112, E1122 = _E(1, 1, 1, 2), _E(1, 1, 2, 2)
    M = _multi(2 * k)
    lead = M * _invf(k) * _pow(E2, k) * E22 + _multi(2 * k, [1, 1]) * _invf(k - 1) * _pow(E2, k - 1) * E12**2
    second = (
        _multi(2 * k, [4]) * _invf(k - 2) * E4 * _pow(E2, k - 2) * E22
        + _multi(2 * k, [3, 3]) * Fraction(1, 2) * _invf(k - 3) * E3**2 * _pow(E2, k - 3) * E22
        + _multi(2 * k, [4, 1, 1]) * _invf(k - 3) * E4 * E12**2 * _pow(E2, k - 3)
        + _multi(2 * k, [1, 3]) * _invf(k - 2) * E3 * E122 * _pow(E2, k - 2)
        + _multi(2 * k, [1, 3]) * 2 * _invf(k - 2) * E3 * E112 * E12 * _pow(E2, k - 2)
        + _multi(2 * k, [1, 3]) * 2 * _invf(k - 2) * E1112 * E12 * _pow(E2, k - 2)
        - M * comb(k + 1, 2) * _invf(k) * _pow(E2, k) * E22
        + M * Fraction(2, 2) * _invf(k - 2) * E112**2 * _pow(E2, k - 2)
        - _multi(2 * k, [1, 1]) * comb(k + 1, 2) * _invf(k - 1) * _pow(E2, k - 1) * E12**2
        + M * _invf(k - 1) * E1122 * _pow(E2, k - 1)
    )
    return (2 * k, 2), {0: lead, 2: second}


def _f_xi1_even_xi2_xi3(k, j=None):
    E2, E12, E13, E23 = _E(1, 1), _E(1, 2), _E(1, 3), _E(2, 3)
    # the second printed term carries no (Ew1^2)^(k-1) factor
    lead = _multi(2 * k) * _invf(k) * _pow(E2, k) * E23 + _invf(k - 1) * _multi(2 * k, [1, 1]) * E12 * E13
    return (2 * k, 1, 1), {0: lead}


def _f_xi1_odd_xi2_xi3(k, j=None):
    E2, E3 = _E(1, 1), _E(1, 1, 1)
    E12, E13, E23, E112, E113, E123 = _E(1, 2), _E(1, 3), _E(2, 3), _E(1, 1, 2), _E(1, 1, 3), _E(1, 2, 3)
    t = (
        _multi(2 * k + 1, [3]) * _invf(k - 1) * E3 * E23 * _pow(E2, k - 1)
        + _multi(2 * k + 1, [1, 1, 3]) * _invf(k - 2) * E3 * E12 * E13 * _pow(E2, k - 2)
        + _multi(2 * k + 1, [1]) * _invf(k - 1) * E112 * E13 * _pow(E2, k - 1)
        + _multi(2 * k + 1, [1]) * _invf(k - 1) * E12 * E113 * _pow(E2, k - 1)
        + _multi(2 * k + 1, [1]) * _invf(k) * E123 * _pow(E2, k)
    )
    return (2 * k + 1, 1, 1), {1: -t}


def _f_xi1_odd_xi2sq(k, j=None):
    E2, E3, E12, E22, E112, E122 = _E(1, 1), _E(1, 1, 1), _E(1, 2), _E(2, 2), _E(1, 1, 2), _E(1, 2, 2)
    t = (
        _multi(2 * k + 1, [3]) * _invf(k - 1) * E3 * E22 * _pow(E2, k - 1)
        + _multi(2 * k + 1, [1, 1, 3]) * _invf(k - 2) * E3 * E12**2 * _pow(E2, k - 2)
        + _multi(2 * k + 1, [1]) * _invf(k) * E122 * _pow(E2, k)
        + _multi(2 * k + 1, [1]) * 2 * _invf(k - 1) * E112 * E12 * _pow(E2, k - 1)
    )
    return (2 * k + 1, 2), {1: -t}


def _f_xi1_odd_xi2cube(k, j=None):
    E2, E12, E22 = _E(1, 1), _E(1, 2), _E(2, 2)
    lead = (
        _multi(2 * k + 1, [1]) * 3 * _invf(k) * E12 * E22 * _pow(E2, k)
        + _multi(2 * k + 1, [1, 1, 1]) * 6 * Fraction(1, 6) * _invf(k - 1) * E12**3 * _pow(E2, k - 1)
    )
    return (2 * k + 1, 3), {0: lead}


def _f_xi1_even_xi2cube(k, j=None):
    E2, E3 = _E(1, 1), _E(1, 1, 1)
    E12, E22, E112, E122, E222 = _E(1, 2), _E(2, 2), _E(1, 1, 2), _E(1, 2, 2), _E(2, 2, 2)
    t = (
        _multi(2 * k, [1, 3]) * 3 * _invf(k - 2) * E3 * E22 * E12 * _pow(E2, k - 2)
        + _invf(k) * _multi(2 * k) * E222 * _pow(E2, k)
        + _multi(2 * k) * 3 * _invf(k - 1) * E112 * E22 * _pow(E2, k - 1)
        + _invf(k - 3) * _multi(2 * k, [1, 1, 1, 3]) * E3 * E12**3 * _pow(E2, k - 3)
        + _multi(2 * k, [1, 1]) * 3 * _invf(k - 1) * _pow(E2, k - 1) * E122 * E12
        + _multi(2 * k, [1, 1]) * 3 * _invf(k - 2) * _pow(E2, k - 2) * E112 * E12**2
    )
    return (2 * k, 3), {1: -t}


def _f_xi1_even_xi2quart(k, j=None):
    E2, E12, E22 = _E(1, 1), _E(1, 2), _E(2, 2)
    lead = (
        _multi(2 * k) * 3 * _invf(k) * E22**2 * _pow(E2, k)
        + _multi(2 * k, [1, 1]) * 6 * _invf(k - 1) * _pow(E2, k - 1) * E22 * E12**2
        + _multi(2 * k, [1, 1, 1, 1]) * _invf(k - 2) * _pow(E2, k - 2) * E12**4
    )
    return (2 * k, 4), {0: lead}


GENERAL_FORMULAS = {
    "xi1^2k": _f_xi1_even,
    "xi1^(2k+1)": _f_xi1_odd,
    "xi1^2k*xij": _f_xi1_even_xij,
    "xi1^(2k+1)*xi2": _f_xi1_odd_xi2,
    "xi1^2k*xi2^2": _f_xi1_even_xi2sq,
    "xi1^2k*xi2*xi3": _f_xi1_even_xi2_xi3,
    "xi1^(2k+1)*xi2*xi3": _f_xi1_odd_xi2_xi3,
    "xi1^(2k+1)*xi2^2": _f_xi1_odd_xi2sq,
    "xi1^(2k+1)*xi2^3": _f_xi1_odd_xi2cube,
    "xi1^2k*xi2^3": _f_xi1_even_xi2cube,
    "xi1^2k*xi2^4": _f_xi1_even_xi2quart,
}


def general_formula(formula_id: str, k: int, j: int = 2) -> tuple[XiMonomial, dict[int, SymPoly]]:
    """Instantiate a closed-form moment formula at ``k`` (and ``j`` where used).

    Returns the monomial and ``{eps_power: coefficient}`` over ``Ew`` symbols
    for the orders the closed form states.
    """
    try:
        fn = GENERAL_FORMULAS[formula_id]
    except KeyError:
        raise KeyError(f"unknown formula id {formula_id!r}") from None
    exps, orders = fn(k, j)
    return XiMonomial.of(exps), orders


@dataclass
class FormulaCheck:
    formula_id: str
    k: int
    monomial: str
    order: int
    closed_form: SymPoly
    engine: SymPoly

    @property
    def diff(self) -> SymPoly:
        return self.engine - self.closed_form

    @property
    def match(self) -> bool:
        return self.diff.is_zero()


def verify_general_formulas(k: int, formula_id: str | None = None, j: int = 2) -> list[FormulaCheck]:
    """Compare closed forms with the partition engine, with ``Ew(1,1) = 1``.

    Diffs are returned as data; nothing is raised on mismatch.
    """
    if not 0 <= k <= 4:
        raise ValueError("k must lie in 0..4")
    ids = [formula_id] if formula_id else list(GENERAL_FORMULAS)
    unit = {ew_symbol((1, 1)): SymPoly.const(1)}
    out = []
    for fid in ids:
        mono, orders = general_formula(fid, k, j)
        engine = xi_expectation_raw(mono, max(orders))
        for order, closed in orders.items():
            out.append(
                FormulaCheck(
                    fid, k, str(mono), order, closed.subs(unit), engine[order].subs(unit)
                )
            )
    return out
