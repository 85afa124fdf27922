"""Stochastic expansion of the location MLE.

The score ``L_n'(theta)`` is Taylor-expanded around 0 in terms of the
normalized sums ``xi_j`` and the constants ``a_j = E rho^(j)(X)``; the ansatz
``theta = B1 eps + B2 eps^2 + B3 eps^3 + B4 eps^4`` is substituted and each
``B_k`` is solved from the ``eps^k`` coefficient in turn.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .symbolic import GradedSeries, Symbol, SymPoly

__all__ = [
    "DerivationError",
    "ScoreSeries",
    "AnsatzSolution",
    "build_score_series",
    "substituted_score",
    "solve_order_by_order",
    "assemble_Sn",
    "residual_check",
    "derive_Sn",
    "SOLVE_CAP",
]

SOLVE_CAP = 4

XI = [None] + [Symbol(f"xi{j}") for j in range(1, 6)]
A = {j: Symbol(f"a{j}") for j in range(2, 6)}
A2INV = Symbol("a2inv")
B_SYMS = [None] + [Symbol(f"B{j}") for j in range(1, 5)]


class DerivationError(RuntimeError):
    """An order-by-order step did not have the expected linear form."""


@dataclass(frozen=True)
class ScoreSeries:
    """``L_n'(theta) = sum_k coeffs[k] * theta**k`` with series coefficients."""

    coeffs: tuple[GradedSeries, ...]

    @property
    def order_cap(self) -> int:
        return self.coeffs[0].order_cap

    def evaluate(self, theta: GradedSeries) -> GradedSeries:
        out = GradedSeries.zero(self.order_cap)
        power = GradedSeries.constant(1, self.order_cap)
        for c in self.coeffs:
            out = out + c * power
            power = power * theta
        return out


@dataclass(frozen=True)
class AnsatzSolution:
    B1: SymPoly
    B2: SymPoly
    B3: SymPoly
    B4: SymPoly

    def __iter__(self):
        return iter((self.B1, self.B2, self.B3, self.B4))

    def as_dict(self) -> dict[str, SymPoly]:
        return {"B1": self.B1, "B2": self.B2, "B3": self.B3, "B4": self.B4}


def build_score_series(order_cap: int = SOLVE_CAP) -> ScoreSeries:
    """Five-term Taylor polynomial of the score in theta.

    The theta^0 slot is ``eps*xi1`` (``a1 = 0``); the theta^k slot is
    ``(-1)^k/k! * (eps*xi_{k+1} + a_{k+1})``.  The theta^4 slot stands in for
    the fifth-derivative remainder.
    """
    coeffs = [GradedSeries.monomial(SymPoly.symbol(XI[1]), 1, order_cap)]
    for k in range(1, 5):
        w = Fraction((-1) ** k, factorial(k))
        c = GradedSeries(
            [SymPoly.symbol(A[k + 1]) * w, SymPoly.symbol(XI[k + 1]) * w], order_cap
        )
        coeffs.append(c)
    return ScoreSeries(tuple(coeffs))


def _theta(known: dict[int, SymPoly], order_cap: int) -> GradedSeries:
    slots = [SymPoly()] * (order_cap + 1)
    for j in range(1, min(4, order_cap) + 1):
        slots[j] = known.get(j, SymPoly.symbol(B_SYMS[j]))
    return GradedSeries(slots, order_cap)


def substituted_score(
    known: dict[int, SymPoly] | None = None, score: ScoreSeries | None = None
) -> GradedSeries:
    """Score with the ansatz plugged in; unsolved ``B_k`` stay as symbols."""
    score = score or build_score_series()
    return score.evaluate(_theta(known or {}, score.order_cap))


def solve_order_by_order(score: ScoreSeries | None = None) -> AnsatzSolution:
    score = score or build_score_series()
    if score.order_cap < 4:
        raise ValueError("the solve needs order_cap 4 (slot for B4)")
    known: dict[int, SymPoly] = {}
    minus_a2 = -SymPoly.symbol(A[2])
    for j in range(1, 5):
        resid = substituted_score(known, score)
        for lower in range(j):
            if resid[lower]:
                raise DerivationError(f"eps^{lower} residual nonzero while solving B{j}")
        parts = resid[j].collect(B_SYMS[j])
        if set(parts) - {0, 1}:
            raise DerivationError(f"eps^{j} equation is not linear in B{j}")
        lead = parts.get(1, SymPoly())
        if lead != minus_a2:
            raise DerivationError(f"coefficient of B{j} is {lead}, expected -a2")
        rest = parts.get(0, SymPoly())
        if any(B_SYMS[i] in rest.symbols() for i in range(1, 5)):
            raise DerivationError(f"eps^{j} equation still contains unknowns")
        known[j] = rest * SymPoly.symbol(A2INV)
    sol = AnsatzSolution(known[1], known[2], known[3], known[4])
    for b in sol:
        if XI[5] in b.symbols():
            raise DerivationError("xi5 leaked into the retained orders")
    return sol


def assemble_Sn(sol: AnsatzSolution, order_cap: int = 3) -> GradedSeries:
    """``sqrt(n) * theta_hat = B1 + eps B2 + eps^2 B3 + eps^3 B4``."""
    return GradedSeries(list(sol), order_cap)


def residual_check(sol: AnsatzSolution, score: ScoreSeries | None = None) -> GradedSeries:
    """Score evaluated at the solved ansatz; zero through eps^4 when correct."""
    score = score or build_score_series()
    known = {j + 1: b for j, b in enumerate(sol)}
    return substituted_score(known, score)


def derive_Sn(order_cap: int = 3) -> GradedSeries:
    return assemble_Sn(solve_order_by_order(), order_cap)
