"""Monte Carlo oracle for the distribution of ``sqrt(n) * theta_hat``.

Replication ``r`` draws its uniforms from the Philox4x64-10 stream keyed by
``(seed, r)``; block ``i`` of that stream is the cipher of counter
``(i + 1, 0, 0, 0)``, which makes it identical to
``numpy.random.Philox(key=[seed, r]).random_raw()``.  Counts on the grid are
exact integers, so the report does not depend on chunking or worker count.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .edgeworth import ExpansionModel
from .families import LocationFamily, compute_etas
from .mle import solve_mle_batch

__all__ = [
    "philox4x64",
    "replication_uniforms",
    "McReport",
    "MonteCarloError",
    "monte_carlo_cdf",
    "parse_grid",
    "MIN_REPS",
    "MAX_FAILURE_RATE",
]

MIN_REPS = 10_000
MAX_FAILURE_RATE = 1e-4
CHUNK = 1 << 15

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


class MonteCarloError(RuntimeError):
    pass


def _mulhilo(a: np.uint64, b: np.ndarray):
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    p0 = a_lo * b_lo
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    p3 = a_hi * b_hi
    mid = (p0 >> _S32) + (p1 & _LO32) + (p2 & _LO32)
    hi = p3 + (p1 >> _S32) + (p2 >> _S32) + (mid >> _S32)
    return hi, a * b


def philox4x64(ctr: tuple, key: tuple, rounds: int = 10) -> tuple:
    """Philox4x64 block cipher on broadcastable uint64 arrays.

    ``ctr`` has four words and ``key`` two; returns the four output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in ctr)
    k0, k1 = (np.asarray(k, dtype=np.uint64) for k in key)
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def replication_uniforms(seed: int, reps: np.ndarray, size: int) -> np.ndarray:
    """Uniforms on the open interval (0, 1), shape ``(len(reps), size)``.

    Row ``j`` holds the first ``size`` draws of replication ``reps[j]``.
    """
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 unsigned bits")
    reps = np.asarray(reps, dtype=np.uint64)
    blocks = -(-size // 4)
    ctr = np.arange(1, blocks + 1, dtype=np.uint64)[None, :]
    zero = np.zeros((1, 1), dtype=np.uint64)
    words = philox4x64((ctr, zero, zero, zero), (np.uint64(seed), reps[:, None]))
    raw = np.stack(words, axis=-1).reshape(len(reps), 4 * blocks)[:, :size]
    # 53 high bits, centred in their cell so 0 and 1 never occur
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def parse_grid(spec: str) -> np.ndarray:
    """``"lo:hi:step"`` to an inclusive, evenly spaced grid."""
    try:
        lo, hi, step = (float(p) for p in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid {spec!r} must be 'lo:hi:step'") from None
    if not (step > 0 and hi >= lo and all(map(math.isfinite, (lo, hi, step)))):
        raise ValueError(f"grid {spec!r} needs lo <= hi and step > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass
class McReport:
    family: str
    n: int
    reps: int
    seed: int
    grid: np.ndarray
    counts: np.ndarray
    converged: int
    failures: int
    model: np.ndarray  # (4, len(grid)): expansion CDF at orders 0..3
    eta: dict = field(default_factory=dict)
    scale: float = 1.0

    @property
    def empirical(self) -> np.ndarray:
        return self.counts / self.converged

    @property
    def abs_err(self) -> np.ndarray:
        return np.abs(self.empirical[None, :] - self.model)

    @property
    def sup_distances(self) -> list[float]:
        return [float(v) for v in self.abs_err.max(axis=1)]

    @property
    def standard_error(self) -> float:
        """Worst-case binomial standard error ``1/(2 sqrt(reps))``."""
        return 0.5 / math.sqrt(self.converged)

    @property
    def se_band(self) -> np.ndarray:
        """Pointwise ``sqrt(F (1 - F) / reps)`` at the empirical CDF."""
        F = self.empirical
        return np.sqrt(F * (1 - F) / self.converged)

    def summary(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "converged": self.converged,
            "failures": self.failures,
            "scale": self.scale,
            "eta": self.eta,
            "grid": {"lo": float(self.grid[0]), "hi": float(self.grid[-1]), "points": len(self.grid)},
            "sup_distance": {f"order{k}": d for k, d in enumerate(self.sup_distances)},
            "mc_standard_error": self.standard_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = ["x", "empirical"] + [f"order{k}" for k in range(4)] + [f"abs_err{k}" for k in range(4)]
        buf.write(",".join(head) + "\n")
        emp, err = self.empirical, self.abs_err
        for j, x in enumerate(self.grid):
            row = [x, emp[j], *self.model[:, j], *err[:, j]]
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()


def _chunk_counts(fam, n, seed, start, stop, grid, root_n):
    u = replication_uniforms(seed, np.arange(start, stop), n)
    x = fam.sample(u)
    res = solve_mle_batch(fam, x)
    t = root_n * res.theta[res.converged]
    idx = np.searchsorted(grid, t, side="left")
    counts = np.bincount(idx, minlength=len(grid) + 1)[: len(grid)]
    return counts.astype(np.int64), int(res.converged.sum()), res.failures


def monte_carlo_cdf(
    fam: LocationFamily,
    n: int,
    reps: int,
    seed: int,
    grid,
    workers: int = 1,
    eta=None,
    chunk: int = CHUNK,
) -> McReport:
    """Empirical CDF of ``sqrt(n) * theta_hat`` under ``theta = 0``.

    Parameters
    ----------
    fam : LocationFamily
        Standardized family (Fisher information 1).
    n, reps, seed : int
        Sample size, replication count (at least ``MIN_REPS``) and stream seed.
    grid : array_like
        Increasing evaluation points.
    workers : int
        Threads used for chunks; the result does not depend on it.
    eta : EtaVector, optional
        Precomputed moments of ``fam``; computed by quadrature otherwise.

    Raises
    ------
    MonteCarloError
        If more than ``MAX_FAILURE_RATE`` of the MLE solves fail.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if reps < MIN_REPS:
        raise ValueError(f"reps must be >= {MIN_REPS}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a non-empty increasing vector")
    if eta is None:
        eta = compute_etas(fam)
    if not eta.standardized:
        raise ValueError(f"family {fam.name!r} is not standardized (a2 = {eta.a2})")

    root_n = math.sqrt(n)
    bounds = [(s, min(reps, s + chunk)) for s in range(0, reps, chunk)]

    def job(b):
        return _chunk_counts(fam, n, seed, b[0], b[1], grid, root_n)

    counts = np.zeros(len(grid), dtype=np.int64)
    ok = bad = 0
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, bounds))
    else:
        results = map(job, bounds)
    for c, k, f in results:
        counts += c
        ok += k
        bad += f
    counts = np.cumsum(counts)
    if bad > MAX_FAILURE_RATE * reps:
        raise MonteCarloError(f"{bad} of {reps} MLE solves failed (limit {MAX_FAILURE_RATE:.2%})")

    model = ExpansionModel.from_etas(eta, n)
    table = np.stack([model.cdf(grid, k) for k in range(4)])
    return McReport(
        family=fam.name,
        n=n,
        reps=reps,
        seed=seed,
        grid=grid,
        counts=counts,
        converged=ok,
        failures=bad,
        model=table,
        eta=eta.as_dict(),
        scale=fam.scale,
    )
