"""Cumulants, Edgeworth polynomials and Cornish-Fisher coefficients of
``S_n = sqrt(n) * theta_hat``, symbolic over the eta basis and numeric for a
given eta vector."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Mapping, NamedTuple

import numpy as np
from scipy import special

from .mle_expansion import derive_Sn
from .moments import a_values, expect_xi_series
from .symbolic import DEFAULT_CAP, GradedSeries, Symbol, SymPoly

__all__ = [
    "CumulantStructureError",
    "CumulantSet",
    "EdgeworthPolynomials",
    "CornishFisherCoefficients",
    "SymbolicExpansion",
    "ExpansionModel",
    "CdfValue",
    "sn_series",
    "sn_moments",
    "cumulants",
    "generic_cumulants",
    "r_polynomials",
    "hermite_e",
    "hermite_transform",
    "edgeworth_polynomials",
    "cornish_fisher",
    "symbolic_expansion",
    "cdf_eval",
    "quantile_eval",
    "normal_cdf",
    "normal_pdf",
    "normal_quantile",
    "ETA_NAMES",
]

ETA_NAMES = ("eta2", "eta3", "eta4", "eta5", "eta6")
IT = Symbol("it")
X = Symbol("x")
Z = Symbol("z")
K_NAMES = ("k12", "k13", "k21", "k22", "k31", "k32", "k41", "k51")


class CumulantStructureError(RuntimeError):
    """The cumulant series do not have the expected eps-structure."""


def sn_series(order_cap: int = DEFAULT_CAP) -> GradedSeries:
    """``S_n`` with ``a2 = 1`` and ``a3..a5`` replaced by their eta forms."""
    table = dict(a_values())
    table[Symbol("a2inv")] = SymPoly.const(1)
    return derive_Sn(order_cap).subs(table)


@lru_cache(maxsize=None)
def sn_moments(k: int, order_cap: int = DEFAULT_CAP) -> GradedSeries:
    """``E[S_n^k]`` as a graded series over the eta basis."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return expect_xi_series(sn_series(order_cap) ** k)


# (kappa index, eps power) of each named coefficient
_K_SLOTS = {
    "k12": (1, 1), "k13": (1, 3), "k21": (2, 0), "k22": (2, 2),
    "k31": (3, 1), "k32": (3, 3), "k41": (4, 2), "k51": (5, 3),
}


@dataclass(frozen=True)
class CumulantSet:
    """``kappa_1..kappa_5`` of ``S_n`` as graded series."""

    kappas: tuple[GradedSeries, ...]

    def kappa(self, m: int) -> GradedSeries:
        return self.kappas[m - 1]

    def coefficient(self, name: str) -> SymPoly:
        m, p = _K_SLOTS[name]
        return self.kappa(m)[p]

    def as_symbol_map(self) -> dict[Symbol, SymPoly]:
        return {Symbol(n): self.coefficient(n) for n in K_NAMES}

    def check_structure(self) -> None:
        """Raise unless the kappas have exactly the expected eps slots."""
        allowed = {m: set() for m in range(1, 6)}
        for m, p in _K_SLOTS.values():
            allowed[m].add(p)
        for m in range(1, 6):
            for p, c in enumerate(self.kappa(m).coeffs):
                if c and p not in allowed[m]:
                    raise CumulantStructureError(f"kappa{m} has a nonzero eps^{p} term: {c}")
        if self.coefficient("k21") != 1:
            raise CumulantStructureError("leading variance is not 1")
        for kap in self.kappas:
            for c in kap.coeffs:
                leftover = [s.name for s in c.symbols() if s.family != "eta" and s.family != "k"]
                if leftover:
                    raise CumulantStructureError(f"auxiliary symbols survive: {sorted(leftover)}")


def cumulants(moments: Mapping[int, GradedSeries] | None = None, check: bool = True) -> CumulantSet:
    """Cumulants from raw moments ``{1: E S, ..., 5: E S^5}``."""
    if moments is None:
        moments = {k: sn_moments(k) for k in range(1, 6)}
    m1, m2, m3, m4, m5 = (moments[k] for k in range(1, 6))
    k1 = m1
    k2 = m2 - m1 * m1
    k3 = m3 - 3 * m2 * m1 + 2 * m1**3
    # central moments
    c4 = m4 - 4 * m3 * m1 + 6 * m2 * m1**2 - 3 * m1**4
    c5 = m5 - 5 * m4 * m1 + 10 * m3 * m1**2 - 10 * m2 * m1**3 + 4 * m1**5
    k4 = c4 - 3 * k2 * k2
    k5 = c5 - 10 * k2 * k3
    cs = CumulantSet((k1, k2, k3, k4, k5))
    if check:
        cs.check_structure()
    return cs


def generic_cumulants(order_cap: int = DEFAULT_CAP) -> CumulantSet:
    """Cumulants written with the symbolic coefficients ``k12 .. k51``."""
    slots = [[SymPoly() for _ in range(order_cap + 1)] for _ in range(5)]
    for name, (m, p) in _K_SLOTS.items():
        if p <= order_cap:
            slots[m - 1][p] = SymPoly.const(1) if name == "k21" else SymPoly.symbol(name)
    return CumulantSet(tuple(GradedSeries(s, order_cap) for s in slots))


def r_polynomials(c: CumulantSet | None = None) -> tuple[SymPoly, SymPoly, SymPoly]:
    """Polynomials ``r_j(it)`` with ``chf = exp(-t^2/2)(1 + sum eps^j r_j)``.

    Without an argument the result is expressed in ``k12 .. k51``.
    """
    c = c or generic_cumulants()
    cap = c.kappas[0].order_cap
    if c.kappa(2)[0] != 1:
        raise CumulantStructureError("leading variance must be 1")
    expo = GradedSeries.zero(cap)
    T = SymPoly.symbol(IT)
    for m in range(1, 6):
        kap = c.kappa(m)
        if m == 2:
            kap = kap - 1
        expo = expo + kap * (T**m * Fraction(1, factorial(m)))
    series = expo.exp()
    return series[1], series[2], series[3]


@lru_cache(maxsize=None)
def hermite_e(m: int) -> SymPoly:
    """Probabilists' Hermite polynomial ``He_m(x)`` with exact coefficients."""
    if m < 0:
        raise ValueError("m must be >= 0")
    x = SymPoly.symbol(X)
    prev, cur = SymPoly.const(1), x
    if m == 0:
        return prev
    for k in range(1, m):
        prev, cur = cur, x * cur - prev * k
    return cur


def hermite_transform(r: SymPoly, var: Symbol | str = X) -> SymPoly:
    """Map ``c (it)^k`` to ``-c He_{k-1}(x)``.

    If ``F`` has Fourier-Stieltjes transform ``r(it) exp(-t^2/2)`` then
    ``F(x) = p(x) phi(x)`` with ``p`` the returned polynomial.
    """
    var = Symbol(var) if isinstance(var, str) else var
    out = SymPoly()
    for k, coeff in r.collect(IT).items():
        if k == 0:
            if coeff:
                raise ValueError("r must have zero constant term")
            continue
        he = hermite_e(k - 1)
        if var is not X:
            he = he.subs({X: SymPoly.symbol(var)})
        out = out - coeff * he
    return out


@dataclass(frozen=True)
class EdgeworthPolynomials:
    r1: SymPoly
    r2: SymPoly
    r3: SymPoly
    p1: SymPoly
    p2: SymPoly
    p3: SymPoly

    @property
    def p(self) -> tuple[SymPoly, SymPoly, SymPoly]:
        return (self.p1, self.p2, self.p3)


def edgeworth_polynomials(c: CumulantSet | None = None) -> EdgeworthPolynomials:
    c = c or cumulants()
    r = r_polynomials(c)
    return EdgeworthPolynomials(*r, *(hermite_transform(rj) for rj in r))


@dataclass(frozen=True)
class CornishFisherCoefficients:
    A: SymPoly
    B: SymPoly
    C: SymPoly

    def __iter__(self):
        return iter((self.A, self.B, self.C))


def _taylor_shift(p: SymPoly, delta: GradedSeries, var: Symbol) -> GradedSeries:
    """``p(var + delta)`` for ``delta`` with zero constant term."""
    cap = delta.order_cap
    out = GradedSeries.constant(p, cap)
    dk = GradedSeries.constant(1, cap)
    deriv = p
    for k in range(1, cap + 1):
        deriv = deriv.diff(var)
        dk = dk * delta
        if not deriv:
            break
        out = out + dk * (deriv * Fraction(1, factorial(k)))
    return out


def _cf_residual(ps, delta: GradedSeries) -> GradedSeries:
    """``[G_n(z + delta) - Phi(z)] / phi(z)`` as a series in eps."""
    cap = delta.order_cap
    he = [hermite_e(k).subs({X: SymPoly.symbol(Z)}) for k in range(cap + 1)]
    # Phi(z + d) - Phi(z) = phi(z) sum_k d^k/k! (-1)^(k-1) He_{k-1}(z)
    phi_ratio = GradedSeries.constant(1, cap)  # phi(z + d) / phi(z)
    out = GradedSeries.zero(cap)
    dk = GradedSeries.constant(1, cap)
    for k in range(1, cap + 1):
        dk = dk * delta
        w = Fraction((-1) ** (k - 1), factorial(k))
        out = out + dk * (he[k - 1] * w)
        phi_ratio = phi_ratio + dk * (he[k] * Fraction((-1) ** k, factorial(k)))
    for i, p in enumerate(ps, start=1):
        pz = p.subs({X: SymPoly.symbol(Z)})
        out = out + (_taylor_shift(pz, delta, Z) * phi_ratio).shift(i)
    return out


def cornish_fisher(polys: EdgeworthPolynomials | None = None) -> CornishFisherCoefficients:
    """Solve ``G_n(z + A eps + B eps^2 + C eps^3) = Phi(z)`` order by order."""
    polys = polys or edgeworth_polynomials()
    cap = 3
    unknowns = [Symbol("A"), Symbol("B"), Symbol("C")]
    known: list[SymPoly] = []
    for j, u in enumerate(unknowns, start=1):
        slots = [SymPoly()] + known + [SymPoly.symbol(u)] + [SymPoly()] * (cap - j)
        resid = _cf_residual(polys.p, GradedSeries(slots, cap))
        for lower in range(1, j):
            if resid[lower]:
                raise RuntimeError(f"eps^{lower} residual survived while solving {u.name}")
        parts = resid[j].collect(u)
        if set(parts) - {0, 1} or parts.get(1) != 1:
            raise RuntimeError(f"eps^{j} equation is not of the form {u.name} + rest")
        known.append(-parts.get(0, SymPoly()))
    return CornishFisherCoefficients(*known)


@dataclass(frozen=True)
class SymbolicExpansion:
    """Every symbolic object of the pipeline, over the eta basis."""

    sn: GradedSeries
    moments: dict[int, GradedSeries]
    cumulants: CumulantSet
    polys: EdgeworthPolynomials
    cf: CornishFisherCoefficients


@lru_cache(maxsize=1)
def symbolic_expansion() -> SymbolicExpansion:
    moments = {k: sn_moments(k) for k in range(1, 6)}
    cs = cumulants(moments)
    polys = edgeworth_polynomials(cs)
    return SymbolicExpansion(sn_series(), moments, cs, polys, cornish_fisher(polys))


# ---------------------------------------------------------------------------
# numeric side


def normal_cdf(x):
    return special.ndtr(x)


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


def normal_quantile(u):
    return special.ndtri(u)


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(float(v))


def _numeric_poly(p: SymPoly, var: Symbol, eta: Mapping[Symbol, Fraction]) -> np.ndarray:
    """Ascending float coefficients of ``p`` in ``var`` after exact eta substitution."""
    parts = p.collect(var)
    deg = max(parts, default=0)
    coeffs = np.zeros(deg + 1)
    for k, c in parts.items():
        coeffs[k] = float(c.evaluate(eta))
    return coeffs


class CdfValue(NamedTuple):
    value: float
    clamped: bool


@dataclass(frozen=True)
class ExpansionModel:
    """Numeric expansion for one eta vector and sample size ``n``."""

    eta: dict[str, float]
    n: int
    kappa: dict[str, float] = field(repr=False)
    p: tuple[np.ndarray, ...] = field(repr=False)
    cf: tuple[np.ndarray, ...] = field(repr=False)

    @classmethod
    def from_etas(cls, eta, n: int) -> "ExpansionModel":
        if n < 1:
            raise ValueError("n must be >= 1")
        if hasattr(eta, "as_dict"):
            eta = eta.as_dict()
        eta = dict(eta)
        missing = [k for k in ETA_NAMES if k not in eta]
        if missing:
            raise ValueError(f"missing eta values: {missing}")
        exact = {Symbol(k): _exact(eta[k]) for k in ETA_NAMES}
        sym = symbolic_expansion()
        kappa = {k: float(sym.cumulants.coefficient(k).evaluate(exact)) for k in K_NAMES}
        p = tuple(_numeric_poly(pj, X, exact) for pj in sym.polys.p)
        cf = tuple(_numeric_poly(c, Z, exact) for c in sym.cf)
        return cls({k: float(eta[k]) for k in ETA_NAMES}, int(n), kappa, p, cf)

    def _check_order(self, order: int) -> None:
        if order not in (0, 1, 2, 3):
            raise ValueError("order must be 0, 1, 2 or 3")

    def cdf_raw(self, x, order: int = 3) -> np.ndarray:
        """Unclamped ``Phi(x) + sum_{j<=order} n^{-j/2} p_j(x) phi(x)``."""
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        out = normal_cdf(x)
        if order:
            corr = np.zeros_like(x)
            for j in range(1, order + 1):
                corr = corr + self.n ** (-j / 2) * np.polynomial.polynomial.polyval(x, self.p[j - 1])
            out = out + corr * normal_pdf(x)
        return out

    def cdf(self, x, order: int = 3) -> np.ndarray:
        return np.clip(self.cdf_raw(x, order), 0.0, 1.0)

    def quantile(self, u, order: int = 3):
        self._check_order(order)
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr <= 0) | (u_arr >= 1)) or np.any(np.isnan(u_arr)):
            raise ValueError("u must lie strictly between 0 and 1")
        z = normal_quantile(u_arr)
        out = z.copy()
        for j in range(1, order + 1):
            out = out + self.n ** (-j / 2) * np.polynomial.polynomial.polyval(z, self.cf[j - 1])
        return out


def cdf_eval(model: ExpansionModel, x: float, order: int = 3) -> CdfValue:
    raw = float(model.cdf_raw(x, order))
    clamped = raw < 0.0 or raw > 1.0
    return CdfValue(min(max(raw, 0.0), 1.0), clamped)


def quantile_eval(model: ExpansionModel, u: float, order: int = 3) -> float:
    return float(model.quantile(u, order))
