"""Numeric location MLE: safeguarded Newton on the score equation.

With ``L_n(theta) = -mean(log f(X_i - theta))`` the score is
``L_n'(theta) = mean(l'(X_i - theta))`` and its derivative is
``-mean(l''(X_i - theta))``.  The batch solver works on many samples at once
and is what the Monte Carlo driver uses; :func:`solve_mle` is the one-sample
front end.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import LocationFamily

__all__ = ["MleResult", "BatchMle", "solve_mle", "solve_mle_batch", "score", "SCAN_POINTS"]

SCAN_POINTS = 256
TOL = 1e-10
MAX_ITER = 100
SCAN_ROWS = 256  # rows per grid-scan block, bounds memory at rows*SCAN_POINTS*n


@dataclass(frozen=True)
class MleResult:
    theta_hat: float
    iterations: int
    converged: bool
    score_residual: float


@dataclass(frozen=True)
class BatchMle:
    theta: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(~self.converged))


def score(fam: LocationFamily, x, theta):
    """``L_n'(theta)`` for samples ``x`` (last axis) and matching ``theta``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return fam.ell(x - theta[..., None])[0].mean(axis=-1)


def _loss(fam: LocationFamily, x, theta):
    return -np.asarray(fam.logpdf(x - theta[..., None])).mean(axis=-1)


def _bracketed_newton(fam, x, lo, hi, theta, tol, max_iter):
    """Newton with bisection fallback on rows of ``x``; ``g(lo) <= 0 <= g(hi)``."""
    m = x.shape[0]
    theta = theta.copy()
    lo, hi = lo.copy(), hi.copy()
    done = np.zeros(m, dtype=bool)
    iters = np.zeros(m, dtype=np.int64)
    resid = np.full(m, np.inf)
    active = np.arange(m)
    for _ in range(max_iter + 1):
        if active.size == 0:
            break
        xa, th = x[active], theta[active]
        d = fam.ell(xa - th[:, None])
        g = d[0].mean(axis=-1)
        gp = -d[1].mean(axis=-1)
        resid[active] = g
        ok = np.abs(g) <= tol
        done[active[ok]] = True
        keep = ~ok & (iters[active] < max_iter)
        active, g, gp, th = active[keep], g[keep], gp[keep], th[keep]
        if active.size == 0:
            break
        neg = g < 0
        lo[active] = np.where(neg, th, lo[active])
        hi[active] = np.where(neg, hi[active], th)
        la, ha = lo[active], hi[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = th - g / gp
        mid = 0.5 * (la + ha)
        bad = ~np.isfinite(step) | (gp <= 0) | (step <= la) | (step >= ha)
        new = np.where(bad, mid, step)
        # bracket collapsed to adjacent floats: nothing left to refine
        stuck = (ha - la) <= 4 * np.spacing(np.maximum(np.abs(la), np.abs(ha)))
        theta[active] = new
        iters[active] += 1
        active = active[~stuck]
    return theta, done, iters, resid


def solve_mle_batch(
    fam: LocationFamily,
    x,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    scan: bool | None = None,
) -> BatchMle:
    """MLE for each row of ``x`` (shape ``(m, n)``).

    Log-concave families have a monotone score, so the bracket
    ``[min - 1, max + 1]`` and a median start suffice.  Otherwise the score
    is scanned on ``SCAN_POINTS`` points over that interval, every
    negative-to-positive sign change is refined, and the root with the
    smallest ``L_n`` wins.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = x.shape[0]
    lo = x.min(axis=1) - 1.0
    hi = x.max(axis=1) + 1.0
    med = np.median(x, axis=1)
    if scan is None:
        scan = not fam.log_concave
    if not scan:
        theta, conv, iters, resid = _bracketed_newton(fam, x, lo, hi, med, tol, max_iter)
        return BatchMle(theta, conv, iters, resid)

    rows_l, blo_l, bhi_l = [], [], []
    for s in range(0, m, SCAN_ROWS):
        sl = slice(s, min(m, s + SCAN_ROWS))
        t = np.linspace(0.0, 1.0, SCAN_POINTS)
        grid = lo[sl, None] + (hi[sl] - lo[sl])[:, None] * t
        g = fam.ell(x[sl, None, :] - grid[:, :, None])[0].mean(axis=-1)
        r, j = np.nonzero((g[:, :-1] <= 0) & (g[:, 1:] > 0))
        rows_l.append(r + s)
        blo_l.append(grid[r, j])
        bhi_l.append(grid[r, j + 1])
    rows = np.concatenate(rows_l)
    blo, bhi = np.concatenate(blo_l), np.concatenate(bhi_l)

    theta = med.copy()
    conv = np.zeros(m, dtype=bool)
    iters = np.zeros(m, dtype=np.int64)
    resid = np.full(m, np.inf)
    if rows.size:
        start = np.where((med[rows] > blo) & (med[rows] < bhi), med[rows], 0.5 * (blo + bhi))
        th, ok, it, res = _bracketed_newton(fam, x[rows], blo, bhi, start, tol, max_iter)
        loss = np.where(ok, _loss(fam, x[rows], th), np.inf)
        # per row: converged candidate with the smallest loss
        order = np.lexsort((loss, rows))
        first = np.concatenate([[True], rows[order][1:] != rows[order][:-1]])
        pick = order[first]
        r = rows[pick]
        theta[r], conv[r], resid[r] = th[pick], ok[pick], res[pick]
        np.add.at(iters, rows, it)
    return BatchMle(theta, conv, iters, resid)


def solve_mle(fam: LocationFamily, sample, tol: float = TOL, max_iter: int = MAX_ITER) -> MleResult:
    """Location MLE of one sample.

    Examples
    --------
    >>> from mlexpand.families import get_family
    >>> solve_mle(get_family("gaussian"), [1.0, 2.0, 6.0]).theta_hat
    3.0
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("sample must be non-empty")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    out = solve_mle_batch(fam, x[None, :], tol, max_iter)
    return MleResult(
        theta_hat=float(out.theta[0]),
        iterations=int(out.iterations[0]),
        converged=bool(out.converged[0]),
        score_residual=float(out.residual[0]),
    )
