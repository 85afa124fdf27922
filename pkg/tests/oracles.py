"""Independent oracles shared by the tests.

``brute_xi_moment`` expands ``E prod xi`` for a finite ``n`` by summing over
every assignment of the factors to observations; nothing from the partition
engine is reused.
"""
from collections import Counter
from fractions import Fraction
from functools import lru_cache
from itertools import product

from mlexpand.symbolic import SymPoly, ew_symbol


@lru_cache(maxsize=None)
def assignment_patterns(d: int, n: int) -> tuple:
    """Count index assignments of ``d`` slots to ``n`` observations by induced set partition."""
    counts = Counter()
    for assign in product(range(n), repeat=d):
        groups = {}
        for pos, i in enumerate(assign):
            groups.setdefault(i, []).append(pos)
        counts[tuple(sorted(tuple(g) for g in groups.values()))] += 1
    return tuple(counts.items())


def brute_xi_moment(exponents, n: int) -> tuple[SymPoly, int]:
    """Exact ``E prod xi_j^{m_j}`` at sample size ``n``.

    Returns ``(R, parity)`` with ``E = R * n**(-parity/2)`` and ``R`` a
    polynomial in ``Ew(...)`` symbols with rational coefficients.
    """
    labels = [j + 1 for j, e in enumerate(exponents) for _ in range(e)]
    d = len(labels)
    total = SymPoly()
    for blocks, count in assignment_patterns(d, n):
        if any(len(b) == 1 for b in blocks):
            continue  # a lone centred factor has mean zero
        term = SymPoly.const(count)
        for b in blocks:
            term = term * SymPoly.symbol(ew_symbol(tuple(labels[p] for p in b)))
        total = total + term
    sign = -1 if d % 2 else 1
    return total * Fraction(sign, n ** (d // 2)), d % 2


def series_at_n(series, n: int, parity: int) -> SymPoly:
    """Collapse a graded series at ``eps = n**-1/2`` to the rational part ``R``."""
    out = SymPoly()
    for k, c in enumerate(series.coeffs):
        if not c:
            continue
        assert (k - parity) % 2 == 0, "wrong eps parity"
        out = out + c * Fraction(1, n ** ((k - parity) // 2))
    return out
