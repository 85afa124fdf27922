import pytest

from mlexpand.mle_expansion import (
    XI,
    assemble_Sn,
    build_score_series,
    residual_check,
    solve_order_by_order,
    substituted_score,
)
from mlexpand.reference import REFERENCE, golden_suite
from mlexpand.symbolic import Symbol, SymPoly

MLE_NAMES = [k for k in REFERENCE if k.startswith("mle.")]


@pytest.fixture(scope="module")
def sol():
    return solve_order_by_order()


@pytest.mark.parametrize("name", MLE_NAMES)
def test_printed_expansion(name):
    (res,) = golden_suite([name])
    assert res.passed, res.summary()


def test_residual_vanishes(sol):
    assert residual_check(sol).is_zero()


def test_degree_law(sol):
    xis = [Symbol(f"xi{j}") for j in range(1, 6)]
    Sn = assemble_Sn(sol)
    for k in range(4):
        for mono, _ in Sn[k].items():
            assert sum(e for s, e in mono if s in xis) == k + 1


def test_linear_case_collapses(sol):
    zero = {s: 0 for s in ("a3", "a4", "a5", "xi2", "xi3", "xi4")}
    zero["a2inv"] = 1
    Sn = assemble_Sn(sol).subs(zero)
    assert Sn[0] == SymPoly.parse("xi1")
    assert all(not Sn[k] for k in range(1, 4))


def test_fifth_derivative_never_enters(sol):
    for b in sol:
        assert XI[5] not in b.symbols()


def test_score_slots():
    score = build_score_series()
    assert str(score.coeffs[0]) == "cap=4\neps^1: xi1"
    assert score.coeffs[2][0] == SymPoly.parse("1/2*a3")


def test_unsolved_coefficients_stay_symbolic():
    s = substituted_score({})
    assert Symbol("B4") in s[4].symbols()
    assert s[1] == SymPoly.parse("xi1 - a2*B1")


def test_solver_refuses_low_cap():
    with pytest.raises(ValueError):
        solve_order_by_order(build_score_series(order_cap=3))
