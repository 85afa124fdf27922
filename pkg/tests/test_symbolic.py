from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from mlexpand.symbolic import GradedSeries, Symbol, SymPoly, substitute

NAMES = ["xi1", "xi2", "a3", "eta2", "eta3", "x"]

coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=12)
monos = st.dictionaries(st.sampled_from(NAMES), st.integers(1, 3), max_size=3)
polys = st.lists(st.tuples(monos, coeffs), max_size=5).map(
    lambda ts: sum((SymPoly.from_monomial(m, c) for m, c in ts), SymPoly())
)


def to_sympy(p: SymPoly):
    syms = {n: sympy.Symbol(n) for n in NAMES + ["a2", "a2inv"]}
    out = sympy.Integer(0)
    for mono, c in p.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for s, e in mono:
            term *= syms[s.name] ** e
        out += term
    return sympy.expand(out)


@given(polys, polys, polys)
@settings(max_examples=60, deadline=None)
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p - p == SymPoly()
    assert p * 1 == p


@given(polys, polys)
@settings(max_examples=40, deadline=None)
def test_product_matches_sympy(p, q):
    assert sympy.expand(to_sympy(p * q) - to_sympy(p) * to_sympy(q)) == 0


@given(polys)
@settings(max_examples=60, deadline=None)
def test_text_round_trip(p):
    assert SymPoly.parse(str(p)) == p


def test_canonical_text():
    p = SymPoly.parse("x - 1/2*eta3 + x")
    assert str(p) == "-1/2*eta3 + 2*x"
    assert str(SymPoly()) == "0"


def test_a2_inverse_cancels():
    p = SymPoly.parse("a2^3*a2inv^2*xi1")
    assert p == SymPoly.parse("a2*xi1")


def test_parse_parentheses_and_powers():
    p = SymPoly.parse("(x + 1)^2 - 2*(x - 1/3)")
    assert p == SymPoly.parse("x^2 + 5/3")


@pytest.mark.parametrize("bad", ["foo", "x^-1", "x +", "1/0", "xi9"])
def test_parse_rejects(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        SymPoly.parse(bad)


def test_collect_diff_subs_evaluate():
    p = SymPoly.parse("3*x^2*eta3 + x - 2")
    parts = p.collect("x")
    assert parts[2] == SymPoly.parse("3*eta3") and parts[0] == SymPoly.const(-2)
    assert p.diff("x") == SymPoly.parse("6*x*eta3 + 1")
    assert p.subs({"x": SymPoly.parse("eta2")}) == SymPoly.parse("3*eta2^2*eta3 + eta2 - 2")
    assert p.evaluate({"x": Fraction(1, 2), "eta3": 2}) == Fraction(1, 2) * 3 + Fraction(1, 2) - 2


def test_symbols_are_interned():
    assert Symbol("eta4") is Symbol("eta4")
    with pytest.raises(ValueError):
        Symbol("theta")


series = st.lists(polys, min_size=1, max_size=4).map(lambda cs: GradedSeries(cs, 3))


@given(series, series)
@settings(max_examples=40, deadline=None)
def test_series_product_truncates(s, t):
    full = GradedSeries(s.coeffs, 6) * GradedSeries(t.coeffs, 6)
    assert (s * t) == full.truncate(3)


@given(series)
@settings(max_examples=40, deadline=None)
def test_series_round_trip(s):
    assert GradedSeries.parse(str(s)) == s


def test_series_exp_log_identity():
    # exp(a eps) exp(b eps) = exp((a + b) eps)
    a = GradedSeries.monomial(SymPoly.parse("eta3"), 1, 3)
    b = GradedSeries.monomial(SymPoly.parse("x"), 1, 3)
    assert a.exp() * b.exp() == (a + b).exp()
    assert a.exp()[3] == SymPoly.parse("1/6*eta3^3")


def test_series_parse_continuation_lines():
    s = GradedSeries.parse("cap=2\neps^1: x\n      + eta2\neps^2: 1")
    assert s[1] == SymPoly.parse("x + eta2") and s[2] == SymPoly.const(1)


@given(polys, polys)
@settings(max_examples=30, deadline=None)
def test_substitute_is_homomorphism(p, q):
    sigma = {
        "xi1": GradedSeries([SymPoly.parse("eta2"), SymPoly.parse("x")], 3),
        "xi2": GradedSeries([0, SymPoly.parse("eta3")], 3),
    }
    assert substitute(p * q, sigma) == substitute(p, sigma) * substitute(q, sigma)
    assert substitute(p + q, sigma) == substitute(p, sigma) + substitute(q, sigma)
