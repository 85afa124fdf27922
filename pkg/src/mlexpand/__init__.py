"""Higher-order expansion of the location maximum likelihood estimator.

Symbolic side: :mod:`~mlexpand.symbolic` (exact polynomials and graded
series), :mod:`~mlexpand.mle_expansion`, :mod:`~mlexpand.moments` and
:mod:`~mlexpand.edgeworth`.  Numeric side: :mod:`~mlexpand.families`,
:mod:`~mlexpand.mle` and :mod:`~mlexpand.montecarlo`.
"""
__version__ = "0.1.0"

from .edgeworth import ExpansionModel, cdf_eval, quantile_eval, symbolic_expansion
from .families import compute_etas, get_family, standardize
from .mle import solve_mle
from .mle_expansion import solve_order_by_order
from .montecarlo import monte_carlo_cdf
from .symbolic import GradedSeries, Symbol, SymPoly

__all__ = [
    "ExpansionModel",
    "GradedSeries",
    "Symbol",
    "SymPoly",
    "cdf_eval",
    "compute_etas",
    "get_family",
    "monte_carlo_cdf",
    "quantile_eval",
    "solve_mle",
    "solve_order_by_order",
    "standardize",
    "symbolic_expansion",
]
