"""Published closed forms, transcribed verbatim, and the golden comparison.

Each entry is text in the canonical serialization (polynomials, or series
lines ``eps^k: ...``).  ``golden_suite`` recomputes every object and reports
exact equality with a term-level diff.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .edgeworth import r_polynomials, symbolic_expansion
from .mle_expansion import solve_order_by_order, substituted_score, assemble_Sn
from .moments import a_values, ibp_reduce, w_moment, xi_expectation
from .symbolic import GradedSeries, Symbol, SymPoly

__all__ = ["REFERENCE", "PSI_IDENTITIES", "GoldenResult", "golden_suite", "term_diff"]

# expansion of the estimator (series are in eps = n^-1/2, cap 4 for the
# substituted score, cap 3 for S_n)
_MLE = {
    "B1": "xi1*a2inv",
    "B2": "-xi1*xi2*a2inv^2 + 1/2*xi1^2*a3*a2inv^3",
    "B3": (
        "xi1*xi2^2*a2inv^3 - 1/6*xi1^3*a4*a2inv^4 + 1/2*xi1^2*xi3*a2inv^3"
        " - 3/2*xi1^2*xi2*a3*a2inv^4 + 1/2*xi1^3*a3^2*a2inv^5"
    ),
    "B4": (
        "xi1^3*xi3*a3*a2inv^5 - 5/2*xi1^3*xi2*a3^2*a2inv^6 + 5/8*xi1^4*a3^3*a2inv^7"
        " - xi1*xi2^3*a2inv^4 - 1/6*xi1^3*xi4*a2inv^4 - 3/2*xi1^2*xi3*xi2*a2inv^4"
        " + 2/3*xi1^3*a4*xi2*a2inv^5 + 1/24*xi1^4*a5*a2inv^5 + 3*xi1^2*a3*xi2^2*a2inv^5"
        " - 5/12*xi1^4*a4*a3*a2inv^6"
    ),
    "score_ansatz": """cap=4
        eps^1: -a2*B1 + xi1
        eps^2: -xi2*B1 - a2*B2 + 1/2*a3*B1^2
        eps^3: -xi2*B2 - 1/6*a4*B1^3 + 1/2*xi3*B1^2 + a3*B1*B2 - a2*B3
        eps^4: -1/2*a4*B1^2*B2 + 1/2*a3*B2^2 + 1/24*a5*B1^4 - xi2*B3 + xi3*B1*B2
               - 1/6*xi4*B1^3 + a3*B1*B3 - a2*B4""",
    "score_after_B1": """cap=4
        eps^2: -xi2*xi1*a2inv + 1/2*a3*xi1^2*a2inv^2 - a2*B2
        eps^3: -a2*B3 + a3*xi1*B2*a2inv - xi2*B2 + 1/2*xi3*xi1^2*a2inv^2 - 1/6*a4*xi1^3*a2inv^3
        eps^4: a3*xi1*B3*a2inv + 1/24*a5*xi1^4*a2inv^4 - 1/2*a4*xi1^2*B2*a2inv^2
               - 1/6*xi4*xi1^3*a2inv^3 + 1/2*a3*B2^2 + xi3*xi1*B2*a2inv - xi2*B3 - a2*B4""",
    "score_after_B2": """cap=4
        eps^3: -a2*B3 - 1/6*a4*xi1^3*a2inv^3 + 1/2*xi3*xi1^2*a2inv^2
               - 3/2*xi2*xi1^2*a3*a2inv^3 + xi2^2*xi1*a2inv^2 + 1/2*xi1^3*a3^2*a2inv^4
        eps^4: -1/6*xi4*xi1^3*a2inv^3 + a3*xi1*B3*a2inv + 1/8*xi1^4*a3^3*a2inv^6
               + 1/2*xi3*xi1^3*a3*a2inv^4 - 1/2*xi1^3*xi2*a3^2*a2inv^5 - xi2*B3
               - xi3*xi1^2*xi2*a2inv^3 + 1/24*a5*xi1^4*a2inv^4 + 1/2*a3*xi1^2*xi2^2*a2inv^4
               + 1/2*a4*xi1^3*xi2*a2inv^4 - a2*B4 - 1/4*a4*xi1^4*a3*a2inv^5""",
    "score_after_B3": """cap=4
        eps^4: -a2*B4 - 5/2*xi1^3*xi2*a3^2*a2inv^5 + 5/8*xi1^4*a3^3*a2inv^6
               - xi2^3*xi1*a2inv^3 + xi3*xi1^3*a3*a2inv^4 - 3/2*xi3*xi1^2*xi2*a2inv^3
               + 2/3*a4*xi1^3*xi2*a2inv^4 + 1/24*a5*xi1^4*a2inv^4 - 1/6*xi4*xi1^3*a2inv^3
               + 3*a3*xi1^2*xi2^2*a2inv^4 - 5/12*a4*xi1^4*a3*a2inv^5""",
    "Sn": """cap=3
        eps^0: xi1*a2inv
        eps^1: -xi1*xi2*a2inv^2 + 1/2*a3*xi1^2*a2inv^3
        eps^2: xi1*xi2^2*a2inv^3 - 3/2*a3*xi1^2*xi2*a2inv^4 + 1/2*xi1^2*xi3*a2inv^3
               + 1/2*a3^2*xi1^3*a2inv^5 - 1/6*a4*xi1^3*a2inv^4
        eps^3: 3*xi1^2*a3*xi2^2*a2inv^5 + 5/8*xi1^4*a3^3*a2inv^7 - 5/12*xi1^4*a4*a3*a2inv^6
               - 3/2*xi1^2*xi3*xi2*a2inv^4 - 5/2*xi1^3*a3^2*xi2*a2inv^6 + 1/24*xi1^4*a5*a2inv^5
               + xi1^3*xi3*a3*a2inv^5 + 2/3*xi1^3*a4*xi2*a2inv^5 - 1/6*xi1^3*xi4*a2inv^4
               - xi1*xi2^3*a2inv^4""",
}

_A = {
    "a2": "1",
    "a3": "-1/2*eta3",
    "a4": "2/3*eta4 - eta2",
    "a5": "5*eta6 - 3/2*eta5",
}

# E(psi monomial), keyed by psi indices
_PSI = {
    (1, 1): "1",
    (1, 2): "1/2*eta3",
    (1, 3): "-eta2 + 2/3*eta4",
    (1, 4): "-5*eta6 + 3/2*eta5",
    (1, 1, 2): "2/3*eta4",
    (1, 2, 2): "2*eta6",
    (1, 1, 1, 2): "3/4*eta5",
    (1, 1, 3): "-4*eta6 + 3/2*eta5",
}

# E(w monomial), keyed by w indices
_W = {
    (1, 1): "1",
    (1, 2): "-1/2*eta3",
    (1, 3): "2/3*eta4 - eta2",
    (1, 4): "5*eta6 - 3/2*eta5",
    (1, 1, 2): "-1/3*eta4 + 1",
    (1, 1, 3): "-4*eta6 + 5/4*eta5 - 1/2*eta3",
    (1, 1, 1, 2): "-1/4*eta5 + eta3",
    (1, 2, 2): "2*eta6 - 1/2*eta5 - eta3",
    (2, 2): "eta2 - 1/3*eta4 - 1",
    (2, 3): "-eta6 + 1/4*eta5 + 1/2*eta3",
}

_XI = {
    "xi1^2": "eps^0: 1",
    "xi1^8": "eps^0: 105\neps^2: -630 + 210*eta4 + 280*eta3^2",
}

_MOMENTS = {
    1: """eps^1: 1/4*eta3
          eps^3: 1/9*eta4*eta3 + 1/16*eta5 - 1/4*eta3 + 5/24*eta3*eta2 - 11/64*eta3^3 - 3/8*eta6""",
    2: """eps^0: 1
          eps^2: -1/16*eta3^2 - 1/3*eta4 + eta2 - 1""",
    3: """eps^1: 5/4*eta3
          eps^3: -5/12*eta4*eta3 + 35/8*eta3*eta2 - 45/32*eta3^3 - 15/4*eta3 - 45/8*eta6 + 21/16*eta5""",
    4: """eps^0: 3
          eps^2: 10*eta2 - 9 + 1/8*eta3^2 - 11/3*eta4""",
    5: """eps^1: 35/4*eta3
          eps^3: -175/12*eta4*eta3 - 525/8*eta6 - 875/64*eta3^3 + 259/16*eta5
                 + 525/8*eta3*eta2 - 105/2*eta3""",
}

_KAPPAS = {
    1: """eps^1: 1/4*eta3
          eps^3: 1/9*eta4*eta3 + 1/16*eta5 - 1/4*eta3 + 5/24*eta3*eta2 - 11/64*eta3^3 - 3/8*eta6""",
    2: """eps^0: 1
          eps^2: -1/8*eta3^2 - 1 - 1/3*eta4 + eta2""",
    3: """eps^1: 1/2*eta3
          eps^3: -9/4*eta3 + 3*eta3*eta2 - 1/2*eta3*eta4 + 9/8*eta5 - 13/16*eta3^3 - 9/2*eta6""",
    4: "eps^2: -3 - 5/3*eta4 + 4*eta2",
    5: "eps^3: -15*eta6 - 10*eta3 - 5*eta3*eta4 + 15*eta3*eta2 + 4*eta5 - 15/8*eta3^3",
}

_R = {
    1: "it*k12 + 1/6*it^3*k31",
    2: "1/2*it^2*k12^2 + 1/72*it^6*k31^2 + 1/6*it^4*k12*k31 + 1/24*it^4*k41 + 1/2*it^2*k22",
    3: (
        "1/72*it^7*k12*k31^2 + 1/24*it^5*k12*k41 + 1/12*it^5*k22*k31 + 1/144*it^7*k31*k41"
        " + 1/120*k51*it^5 + 1/12*it^5*k12^2*k31 + 1/2*it^3*k12*k22 + 1/6*it^3*k32"
        " + it*k13 + 1/6*it^3*k12^3 + 1/1296*it^9*k31^3"
    ),
}

_P = {
    1: "-1/12*eta3*(x^2 + 2)",
    2: (
        "-1/288*eta3^2*x^5 + (1/72*eta3^2 + 1/8 + 5/72*eta4 - 1/6*eta2)*x^3"
        " + (1/8 + 1/24*eta3^2 - 1/24*eta4)*x"
    ),
    3: (
        "-1/10368*eta3^3*x^8"
        " + (1/96*eta3 + 19/10368*eta3^3 - 1/72*eta3*eta2 + 5/864*eta4*eta3)*x^6"
        " + (19/1728*eta3^3 - 1/30*eta5 + 1/8*eta6 - 1/72*eta4*eta3)*x^4"
        " + (-5/96*eta4*eta3 + 35/864*eta3^3 + 1/32*eta3 + 1/80*eta5)*x^2"
        " + 35/432*eta3^3 - 5/48*eta4*eta3 + 1/40*eta5 + 1/16*eta3"
    ),
}

_CF = {
    "A": "eta3/12*(z^2 + 2)",
    "B": (
        "(-1/8 - 1/72*eta3^2 - 5/72*eta4 + 1/6*eta2)*z^3"
        " + (-1/36*eta3^2 - 1/8 + 1/24*eta4)*z"
    ),
    "C": (
        "(-1/48*eta3 - 1/144*eta4*eta3 + 1/24*eta3*eta2 + 1/30*eta5 - 1/8*eta6 - 19/1728*eta3^3)*z^4"
        " + (-5/48*eta3 + 1/12*eta3*eta2 - 1/80*eta5 - 67/1296*eta3^3 + 1/48*eta4*eta3)*z^2"
        " - 1/12*eta3 - 1/40*eta5 + 1/9*eta4*eta3 - 113/1296*eta3^3"
    ),
}


def _psi_name(idx: tuple) -> str:
    return "E(" + "*".join(f"psi{i}" for i in idx) + ")"


def _w_name(idx: tuple) -> str:
    return "E(" + "*".join(f"w{i}" for i in idx) + ")"


def _series(text: str, cap: int = 3) -> GradedSeries:
    if text.lstrip().startswith("cap="):
        return GradedSeries.parse(text)
    return GradedSeries.parse(text, order_cap=cap)


PSI_IDENTITIES: dict[tuple, SymPoly] = {k: SymPoly.parse(v) for k, v in _PSI.items()}

REFERENCE: dict[str, SymPoly | GradedSeries] = {}
REFERENCE.update({f"mle.{k}": (SymPoly.parse(v) if k.startswith("B") else _series(v)) for k, v in _MLE.items()})
REFERENCE.update({f"a.{k}": SymPoly.parse(v) for k, v in _A.items()})
REFERENCE.update({f"psi.{_psi_name(k)}": SymPoly.parse(v) for k, v in _PSI.items()})
REFERENCE.update({f"w.{_w_name(k)}": SymPoly.parse(v) for k, v in _W.items()})
REFERENCE.update({f"xi.E({k})": _series(v) for k, v in _XI.items()})
REFERENCE.update({f"moment.E(S^{k})": _series(v) for k, v in _MOMENTS.items()})
REFERENCE.update({f"kappa.{k}": _series(v) for k, v in _KAPPAS.items()})
REFERENCE.update({f"r.{k}": SymPoly.parse(v) for k, v in _R.items()})
REFERENCE.update({f"p.{k}": SymPoly.parse(v) for k, v in _P.items()})
REFERENCE.update({f"cf.{k}": SymPoly.parse(v) for k, v in _CF.items()})


def _computed() -> dict[str, Callable[[], SymPoly | GradedSeries]]:
    sol = solve_order_by_order()
    B = sol.as_dict()
    out: dict[str, Callable] = {}
    for name, b in B.items():
        out[f"mle.{name}"] = (lambda b=b: b)
    out["mle.score_ansatz"] = lambda: substituted_score({})
    out["mle.score_after_B1"] = lambda: substituted_score({1: B["B1"]})
    out["mle.score_after_B2"] = lambda: substituted_score({1: B["B1"], 2: B["B2"]})
    out["mle.score_after_B3"] = lambda: substituted_score({1: B["B1"], 2: B["B2"], 3: B["B3"]})
    out["mle.Sn"] = lambda: assemble_Sn(sol)
    av = a_values()
    for k in _A:
        out[f"a.{k}"] = (lambda k=k: av[Symbol(k)])
    for idx in _PSI:
        out[f"psi.{_psi_name(idx)}"] = (lambda idx=idx: ibp_reduce(idx))
    for idx in _W:
        out[f"w.{_w_name(idx)}"] = (lambda idx=idx: w_moment(idx))
    for m in _XI:
        out[f"xi.E({m})"] = (lambda m=m: xi_expectation(m))
    sym = symbolic_expansion
    for k in _MOMENTS:
        out[f"moment.E(S^{k})"] = (lambda k=k: sym().moments[k])
    for k in _KAPPAS:
        out[f"kappa.{k}"] = (lambda k=k: sym().cumulants.kappa(k))
    for k in _R:
        out[f"r.{k}"] = (lambda k=k: r_polynomials()[k - 1])
    for k in _P:
        out[f"p.{k}"] = (lambda k=k: sym().polys.p[k - 1])
    for i, k in enumerate("ABC"):
        out[f"cf.{k}"] = (lambda i=i: tuple(sym().cf)[i])
    return out


def term_diff(actual, expected) -> list[dict]:
    """Terms where ``actual`` and ``expected`` differ, as JSON-ready dicts."""
    rows = []
    if isinstance(actual, GradedSeries) or isinstance(expected, GradedSeries):
        if not (isinstance(actual, GradedSeries) and isinstance(expected, GradedSeries)):
            return [{"eps_power": None, "monomial": "<type>", "actual": type(actual).__name__,
                     "expected": type(expected).__name__}]
        cap = max(actual.order_cap, expected.order_cap)
        for k in range(cap + 1):
            for row in term_diff(actual[k], expected[k]):
                row["eps_power"] = k
                rows.append(row)
        if actual.order_cap != expected.order_cap:
            rows.append({"eps_power": None, "monomial": "<order_cap>",
                         "actual": str(actual.order_cap), "expected": str(expected.order_cap)})
        return rows
    d = actual - expected
    for mono, _ in d.items():
        name = "*".join(s.name if e == 1 else f"{s.name}^{e}" for s, e in mono) or "1"
        rows.append({
            "monomial": name,
            "actual": str(actual.coeff(mono)),
            "expected": str(expected.coeff(mono)),
        })
    return rows


@dataclass
class GoldenResult:
    name: str
    expected: SymPoly | GradedSeries
    actual: SymPoly | GradedSeries
    diff: list[dict]

    @property
    def passed(self) -> bool:
        return not self.diff

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] {self.name}"
        for row in self.diff:
            where = f"eps^{row['eps_power']} " if row.get("eps_power") is not None else ""
            line += f"\n    {where}{row['monomial']}: computed {row['actual']}, printed {row['expected']}"
        return line


def golden_suite(names: list[str] | None = None) -> list[GoldenResult]:
    comp = _computed()
    names = names or list(REFERENCE)
    out = []
    for name in names:
        expected = REFERENCE[name]
        actual = comp[name]()
        out.append(GoldenResult(name, expected, actual, term_diff(actual, expected)))
    return out
