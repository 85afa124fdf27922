"""Exact-rational sparse polynomials and truncated series in eps = n**(-1/2).

Everything symbolic in the package is built from two value types:

``SymPoly``
    a sparse multivariate polynomial with :class:`fractions.Fraction`
    coefficients over a closed alphabet of :class:`Symbol` objects.
``GradedSeries``
    a polynomial in ``eps`` whose coefficients are ``SymPoly`` values,
    truncated at a fixed ``order_cap``.

Both are immutable.  The text form produced by ``str`` is canonical and is
accepted back by ``SymPoly.parse`` / ``GradedSeries.parse``.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Callable, Iterable, Iterator, Mapping

__all__ = [
    "Symbol",
    "SymPoly",
    "GradedSeries",
    "substitute",
    "mu_symbol",
    "ew_symbol",
    "psi_symbol",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 3

# family name -> rank in the canonical symbol order
_FAMILY_RANK = {
    "xi": 0, "a": 1, "eta": 2, "psi": 3, "mu": 4, "Ew": 5,
    "k": 6, "B": 7, "cf": 8, "x": 9, "z": 10, "it": 11,
}

_PATTERNS = [
    (re.compile(r"xi([1-5])$"), "xi"),
    (re.compile(r"a([2-5])$"), "a"),
    (re.compile(r"a2inv$"), "a"),
    (re.compile(r"eta([2-6])$"), "eta"),
    (re.compile(r"psi([1-9][0-9]*)$"), "psi"),
    (re.compile(r"mu\(([1-9][0-9]*(\^[1-9][0-9]*)?(,[1-9][0-9]*(\^[1-9][0-9]*)?)*)\)$"), "mu"),
    (re.compile(r"Ew\(([1-5](,[1-5])*)\)$"), "Ew"),
    (re.compile(r"k(12|13|21|22|31|32|41|51)$"), "k"),
    (re.compile(r"B([1-4])$"), "B"),
    (re.compile(r"[ABC]$"), "cf"),
    (re.compile(r"x$"), "x"),
    (re.compile(r"z$"), "z"),
    (re.compile(r"it$"), "it"),
]


def _param_key(family: str, name: str) -> tuple:
    if family == "a":
        # a2, a2inv, a3, a4, a5
        return (2, 1) if name == "a2inv" else (int(name[1]), 0)
    if family in ("xi", "eta", "psi", "B"):
        return (int(re.sub(r"\D", "", name)),)
    if family == "mu":
        parts = []
        for chunk in name[3:-1].split(","):
            base, _, exp = chunk.partition("^")
            parts += [int(base)] * int(exp or 1)
        # higher total weight later, then by descending parts
        return (sum(parts), tuple(-p for p in parts))
    if family == "Ew":
        labels = tuple(int(c) for c in name[3:-1].split(","))
        return (len(labels), labels)
    if family == "k":
        return (int(name[1:]),)
    if family == "cf":
        return ("ABC".index(name),)
    return ()


class Symbol:
    """A member of the fixed symbol alphabet.

    Symbols are interned: ``Symbol("xi1") is Symbol("xi1")``.  Names that do
    not belong to the alphabet raise ``ValueError``.
    """

    __slots__ = ("name", "family", "key")
    _interned: dict[str, "Symbol"] = {}

    def __new__(cls, name: str) -> "Symbol":
        sym = cls._interned.get(name)
        if sym is not None:
            return sym
        for pattern, family in _PATTERNS:
            if pattern.match(name):
                break
        else:
            raise ValueError(f"{name!r} is not in the symbol alphabet")
        sym = object.__new__(cls)
        sym.name = name
        sym.family = family
        sym.key = (_FAMILY_RANK[family], _param_key(family, name))
        cls._interned[name] = sym
        return sym

    def __reduce__(self):
        return (Symbol, (self.name,))

    def __lt__(self, other: "Symbol") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return self.name

    __str__ = __repr__


def psi_symbol(i: int) -> Symbol:
    return Symbol(f"psi{i}")


def mu_symbol(partition: Iterable[int]) -> Symbol:
    """Auxiliary moment symbol standing for ``E[prod psi_i]``."""
    parts = sorted(partition, reverse=True)
    chunks = []
    for p in sorted(set(parts), reverse=True):
        m = parts.count(p)
        chunks.append(f"{p}^{m}" if m > 1 else f"{p}")
    return Symbol("mu(" + ",".join(chunks) + ")")


def ew_symbol(labels: Iterable[int]) -> Symbol:
    """Raw block-moment symbol standing for ``E[prod w_j]``."""
    return Symbol("Ew(" + ",".join(str(j) for j in sorted(labels)) + ")")


# ---------------------------------------------------------------------------
# monomials: tuples of (Symbol, exponent) sorted by Symbol.key

_A2 = Symbol("a2")
_A2INV = Symbol("a2inv")


@lru_cache(maxsize=1 << 18)
def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = dict(m1)
    for s, e in m2:
        acc[s] = acc.get(s, 0) + e
    if _A2 in acc and _A2INV in acc:
        c = min(acc[_A2], acc[_A2INV])
        acc[_A2] -= c
        acc[_A2INV] -= c
    return tuple(sorted(((s, e) for s, e in acc.items() if e), key=lambda t: t[0].key))


def _mono_key(mono: tuple) -> tuple:
    return tuple((s.key, e) for s, e in mono)


def _mono_str(mono: tuple) -> str:
    return "*".join(s.name if e == 1 else f"{s.name}^{e}" for s, e in mono)


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class SymPoly:
    """Sparse polynomial with exact rational coefficients.

    ``terms`` maps a monomial (a sorted tuple of ``(Symbol, exponent)``
    pairs) to a nonzero ``Fraction``.  The relation ``a2 * a2inv == 1`` is
    applied whenever monomials are multiplied.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[tuple, Fraction] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = _as_fraction(c)
                if c:
                    clean[mono] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "SymPoly":
        p = object.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    # constructors ---------------------------------------------------------
    @classmethod
    def const(cls, c) -> "SymPoly":
        c = _as_fraction(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def symbol(cls, sym: Symbol | str, power: int = 1) -> "SymPoly":
        if isinstance(sym, str):
            sym = Symbol(sym)
        if power < 0:
            raise ValueError("negative powers are not polynomial")
        if power == 0:
            return cls.const(1)
        return cls._raw({((sym, power),): Fraction(1)})

    @classmethod
    def from_monomial(cls, mono: Mapping[Symbol | str, int], coeff=1) -> "SymPoly":
        p = cls.const(coeff)
        for s, e in mono.items():
            p = p * cls.symbol(s, e)
        return p

    @classmethod
    def parse(cls, text: str) -> "SymPoly":
        return _Parser(text).parse()

    # access ---------------------------------------------------------------
    @property
    def terms(self) -> Mapping[tuple, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple, Fraction]]:
        for mono in sorted(self._terms, key=_mono_key):
            yield mono, self._terms[mono]

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def constant(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def symbols(self) -> set[Symbol]:
        return {s for m in self._terms for s, _ in m}

    def degree(self, syms: Iterable[Symbol | str] | None = None) -> int:
        """Total degree, optionally counting only the given symbols."""
        if syms is None:
            wanted = None
        else:
            wanted = {Symbol(s) if isinstance(s, str) else s for s in syms}
        best = -1
        for m in self._terms:
            d = sum(e for s, e in m if wanted is None or s in wanted)
            best = max(best, d)
        return best

    def coeff(self, mono: Mapping[Symbol | str, int] | tuple = ()) -> Fraction:
        if not isinstance(mono, tuple):
            mono = SymPoly.from_monomial(mono).single_monomial()
        return self._terms.get(mono, Fraction(0))

    def single_monomial(self) -> tuple:
        if len(self._terms) != 1:
            raise ValueError("not a single monomial")
        return next(iter(self._terms))

    def collect(self, sym: Symbol | str) -> dict[int, "SymPoly"]:
        """Split into ``{power: coefficient}`` with respect to ``sym``."""
        if isinstance(sym, str):
            sym = Symbol(sym)
        out: dict[int, dict] = {}
        for m, c in self._terms.items():
            e = 0
            rest = []
            for s, k in m:
                if s is sym:
                    e = k
                else:
                    rest.append((s, k))
            bucket = out.setdefault(e, {})
            rest = tuple(rest)
            bucket[rest] = bucket.get(rest, 0) + c
        return {e: SymPoly(t) for e, t in out.items()}

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "SymPoly":
        if isinstance(other, SymPoly):
            return other
        return SymPoly.const(other)

    def __add__(self, other) -> "SymPoly":
        if isinstance(other, GradedSeries):
            return NotImplemented
        other = self._coerce(other)
        if not other._terms:
            return self
        acc = dict(self._terms)
        for m, c in other._terms.items():
            v = acc.get(m, 0) + c
            if v:
                acc[m] = v
            else:
                acc.pop(m, None)
        return SymPoly._raw(acc)

    __radd__ = __add__

    def __neg__(self) -> "SymPoly":
        return SymPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "SymPoly":
        if isinstance(other, GradedSeries):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "SymPoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "SymPoly":
        if isinstance(other, GradedSeries):
            return NotImplemented
        if not isinstance(other, SymPoly):
            c = _as_fraction(other)
            if not c:
                return SymPoly._raw({})
            return SymPoly._raw({m: v * c for m, v in self._terms.items()})
        acc: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                acc[m] = acc.get(m, 0) + c1 * c2
        return SymPoly._raw({m: c for m, c in acc.items() if c})

    __rmul__ = __mul__

    def __truediv__(self, other) -> "SymPoly":
        c = _as_fraction(other)
        return self * (1 / c)

    def __pow__(self, k: int) -> "SymPoly":
        if k < 0:
            raise ValueError("negative powers are not polynomial")
        out = SymPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, SymPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == SymPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def diff(self, sym: Symbol | str) -> "SymPoly":
        """Partial derivative with respect to ``sym``."""
        if isinstance(sym, str):
            sym = Symbol(sym)
        acc = {}
        for m, c in self._terms.items():
            for i, (s, e) in enumerate(m):
                if s is sym:
                    new = m[:i] + (((s, e - 1),) if e > 1 else ()) + m[i + 1:]
                    acc[new] = acc.get(new, 0) + c * e
        return SymPoly(acc)

    # substitution and evaluation ------------------------------------------
    def subs(self, mapping: Mapping[Symbol | str, "SymPoly | int | Fraction"]) -> "SymPoly":
        """Replace symbols by polynomials (symbols not mapped are kept)."""
        table = {
            (Symbol(k) if isinstance(k, str) else k): SymPoly._coerce(v)
            for k, v in mapping.items()
        }
        powers: dict = {}

        def power(s, e):
            key = (s, e)
            if key not in powers:
                powers[key] = table[s] ** e
            return powers[key]

        out = SymPoly._raw({})
        for m, c in self._terms.items():
            term = SymPoly.const(c)
            kept = []
            for s, e in m:
                if s in table:
                    term = term * power(s, e)
                else:
                    kept.append((s, e))
            if kept:
                term = term * SymPoly._raw({tuple(kept): Fraction(1)})
            out = out + term
        return out

    def evaluate(self, values: Mapping[Symbol | str, object]):
        """Evaluate with every symbol bound.  Fractions stay exact."""
        vals = {(Symbol(k) if isinstance(k, str) else k): v for k, v in values.items()}
        total = 0
        for m, c in self._terms.items():
            t = c
            for s, e in m:
                try:
                    t = t * vals[s] ** e
                except KeyError:
                    raise KeyError(f"no value bound for symbol {s.name}") from None
            total = total + t
        return total

    # printing ---------------------------------------------------------------
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for i, (m, c) in enumerate(self.items()):
            sign = "-" if c < 0 else "+"
            a = abs(c)
            body = _mono_str(m)
            if not body:
                text = str(a)
            elif a == 1:
                text = body
            else:
                text = f"{a}*{body}"
            if i == 0:
                pieces.append(("-" if sign == "-" else "") + text)
            else:
                pieces.append(f" {sign} {text}")
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"SymPoly({str(self)!r})"

    def to_terms(self) -> list[dict]:
        """Machine-readable term list (used for JSON output)."""
        return [
            {"coeff": str(c), "monomial": {s.name: e for s, e in m}}
            for m, c in self.items()
        ]


def poly_add(p: SymPoly, q: SymPoly) -> SymPoly:
    return p + q


def poly_mul(p: SymPoly, q: SymPoly) -> SymPoly:
    return p * q


# ---------------------------------------------------------------------------
# parser


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<name>mu\([^)]*\)|Ew\([^)]*\)|[A-Za-z][A-Za-z0-9]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        text = text.strip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse {text[pos:]!r}")
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind)))
            pos = m.end()
            while pos < len(text) and text[pos].isspace():
                pos += 1
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def parse(self) -> SymPoly:
        if not self.tokens:
            raise ValueError("empty polynomial text")
        p = self.expr()
        if self.i != len(self.tokens):
            raise ValueError(f"trailing input in {self.text!r}")
        return p

    def expr(self) -> SymPoly:
        kind, val = self.peek()
        sign = 1
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        p = self.term() * sign
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                p = p + t if val == "+" else p - t
            else:
                return p

    def term(self) -> SymPoly:
        p = self.factor()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.factor()
            elif kind == "op" and val == "/":
                self.take()
                d = self.factor()
                if not d.is_constant() or d.is_zero():
                    raise ValueError("division only by nonzero numbers")
                p = p / d.constant()
            else:
                return p

    def factor(self) -> SymPoly:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ValueError("exponent must be a non-negative integer")
            return base ** int(val)
        return base

    def atom(self) -> SymPoly:
        kind, val = self.take()
        if kind == "num":
            return SymPoly.const(int(val))
        if kind == "name":
            return SymPoly.symbol(val)
        if kind == "op" and val == "(":
            p = self.expr()
            kind, val = self.take()
            if val != ")":
                raise ValueError("unbalanced parentheses")
            return p
        if kind == "op" and val == "-":
            return -self.atom()
        raise ValueError(f"unexpected token {val!r} in {self.text!r}")


# ---------------------------------------------------------------------------
# graded series


class GradedSeries:
    """Truncated power series ``sum_k coeffs[k] * eps**k`` for ``k <= order_cap``."""

    __slots__ = ("coeffs", "order_cap")

    def __init__(self, coeffs: Iterable = (), order_cap: int = DEFAULT_CAP):
        if order_cap < 0:
            raise ValueError("order_cap must be non-negative")
        cs = [SymPoly._coerce(c) for c in coeffs][: order_cap + 1]
        cs += [SymPoly._raw({})] * (order_cap + 1 - len(cs))
        self.coeffs = tuple(cs)
        self.order_cap = order_cap

    @classmethod
    def constant(cls, p, order_cap: int = DEFAULT_CAP) -> "GradedSeries":
        return cls([p], order_cap)

    @classmethod
    def monomial(cls, p, power: int, order_cap: int = DEFAULT_CAP) -> "GradedSeries":
        """``p * eps**power`` (zero if ``power`` exceeds the cap)."""
        cs = [0] * (order_cap + 1)
        if power <= order_cap:
            cs[power] = p
        return cls(cs, order_cap)

    @classmethod
    def zero(cls, order_cap: int = DEFAULT_CAP) -> "GradedSeries":
        return cls((), order_cap)

    def __getitem__(self, k: int) -> SymPoly:
        if 0 <= k <= self.order_cap:
            return self.coeffs[k]
        return SymPoly._raw({})

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def valuation(self) -> int | None:
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def _coerce(self, other) -> "GradedSeries":
        if isinstance(other, GradedSeries):
            if other.order_cap != self.order_cap:
                raise ValueError(
                    f"order_cap mismatch: {self.order_cap} vs {other.order_cap}"
                )
            return other
        return GradedSeries.constant(other, self.order_cap)

    def __add__(self, other) -> "GradedSeries":
        other = self._coerce(other)
        return GradedSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.order_cap)

    __radd__ = __add__

    def __neg__(self) -> "GradedSeries":
        return GradedSeries([-c for c in self.coeffs], self.order_cap)

    def __sub__(self, other) -> "GradedSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "GradedSeries":
        return self._coerce(other) - self

    def __mul__(self, other) -> "GradedSeries":
        if not isinstance(other, GradedSeries):
            other_p = SymPoly._coerce(other)
            return GradedSeries([c * other_p for c in self.coeffs], self.order_cap)
        other = self._coerce(other)
        cap = self.order_cap
        out = [SymPoly._raw({}) for _ in range(cap + 1)]
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j in range(cap + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = out[i + j] + a * b
        return GradedSeries(out, cap)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "GradedSeries":
        if k < 0:
            raise ValueError("negative powers are not supported")
        out = GradedSeries.constant(1, self.order_cap)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedSeries):
            return NotImplemented
        return self.order_cap == other.order_cap and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.order_cap, self.coeffs))

    def shift(self, k: int) -> "GradedSeries":
        """Multiply by ``eps**k``."""
        return GradedSeries([SymPoly._raw({})] * k + list(self.coeffs), self.order_cap)

    def truncate(self, cap: int) -> "GradedSeries":
        return GradedSeries(self.coeffs[: cap + 1], cap)

    def extend(self, cap: int) -> "GradedSeries":
        """Same coefficients carried under a larger cap (higher slots zero)."""
        if cap < self.order_cap:
            raise ValueError("use truncate() to lower the cap")
        return GradedSeries(self.coeffs, cap)

    def map(self, fn: Callable[[SymPoly], SymPoly]) -> "GradedSeries":
        return GradedSeries([fn(c) for c in self.coeffs], self.order_cap)

    def subs(self, mapping) -> "GradedSeries":
        return self.map(lambda c: c.subs(mapping))

    def exp(self) -> "GradedSeries":
        """``exp`` of a series with zero constant term."""
        if self.coeffs[0]:
            raise ValueError("exp() needs a zero constant term")
        out = GradedSeries.constant(1, self.order_cap)
        term = GradedSeries.constant(1, self.order_cap)
        for m in range(1, self.order_cap + 1):
            term = term * self * Fraction(1, m)
            out = out + term
        return out

    def evaluate(self, n, values: Mapping | None = None) -> float:
        """Numeric value at sample size ``n`` (``eps = n**-0.5``)."""
        eps = float(n) ** -0.5
        total = 0.0
        for k, c in enumerate(self.coeffs):
            if c:
                total += float(c.evaluate(values or {})) * eps**k
        return total

    def __str__(self) -> str:
        lines = [f"eps^{k}: {c}" for k, c in enumerate(self.coeffs) if c]
        header = f"cap={self.order_cap}"
        return "\n".join([header] + lines)

    def __repr__(self) -> str:
        return f"GradedSeries({str(self)!r})"

    @classmethod
    def parse(cls, text: str, order_cap: int | None = None) -> "GradedSeries":
        """Parse ``"cap=K"`` plus ``"eps^k: poly"`` lines (``;`` also separates).

        A line starting with ``+`` or ``-`` continues the previous slot.
        """
        cap = order_cap
        slots: dict[int, SymPoly] = {}
        k = None
        for raw in re.split(r"[\n;]", text):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("cap="):
                cap = int(line[4:]) if order_cap is None else order_cap
                continue
            m = re.match(r"eps\^(\d+)\s*:\s*(.*)$", line)
            if m:
                k = int(m.group(1))
                body = m.group(2)
            elif k is not None and line[0] in "+-":
                body = line  # continuation of the previous slot
            else:
                raise ValueError(f"bad series line {line!r}")
            slots[k] = slots.get(k, SymPoly()) + SymPoly.parse(body)
        if cap is None:
            cap = max(slots, default=0)
        return cls([slots.get(k, 0) for k in range(cap + 1)], cap)

    def to_terms(self) -> list[dict]:
        return [
            {"eps_power": k, "terms": c.to_terms()}
            for k, c in enumerate(self.coeffs)
            if c
        ]


def substitute(
    p: SymPoly, sigma: Mapping[Symbol | str, GradedSeries], order_cap: int = DEFAULT_CAP
) -> GradedSeries:
    """Ring homomorphism from ``SymPoly`` into ``GradedSeries``.

    Symbols in ``sigma`` are replaced by their series; other symbols are kept
    as constants.  Powers of each replacement are cached.
    """
    table = {(Symbol(k) if isinstance(k, str) else k): v for k, v in sigma.items()}
    for s, v in table.items():
        if v.order_cap != order_cap:
            raise ValueError(f"series for {s.name} has cap {v.order_cap}, expected {order_cap}")
    powers: dict = {}

    def power(s, e):
        if (s, e) not in powers:
            powers[(s, e)] = table[s] ** e
        return powers[(s, e)]

    out = [SymPoly._raw({}) for _ in range(order_cap + 1)]
    result = GradedSeries(out, order_cap)
    for m, c in p._terms.items():
        kept = tuple((s, e) for s, e in m if s not in table)
        term = GradedSeries.constant(SymPoly._raw({kept: c}), order_cap)
        for s, e in m:
            if s in table:
                term = term * power(s, e)
        result = result + term
    return result
