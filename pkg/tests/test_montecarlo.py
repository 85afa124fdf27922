import dataclasses

import numpy as np
import pytest

from mlexpand.families import compute_etas, get_family, standardize
from mlexpand.montecarlo import (
    MIN_REPS,
    MonteCarloError,
    monte_carlo_cdf,
    parse_grid,
    philox4x64,
    replication_uniforms,
)

GRID = parse_grid("-2:2:0.25")


@pytest.fixture(scope="module")
def logistic():
    fam = standardize(get_family("logistic"))
    return fam, compute_etas(fam)


@pytest.mark.parametrize("seed,rep", [(0, 0), (7, 3), (2**64 - 1, 2**40 + 1)])
def test_streams_match_numpy_philox(seed, rep):
    raw = np.random.Philox(key=np.array([seed, rep], dtype=np.uint64)).random_raw(10)
    ref = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    assert np.array_equal(replication_uniforms(seed, np.array([rep]), 10)[0], ref)


def test_philox_known_answer():
    # Random123 known-answer vector for philox4x64-10 with zero counter and key
    out = philox4x64((0, 0, 0, 0), (0, 0))
    assert [int(w) for w in out] == [
        0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B,
    ]


def test_uniforms_open_interval():
    u = replication_uniforms(1, np.arange(1000), 13)
    assert u.shape == (1000, 13) and u.min() > 0 and u.max() < 1


def test_parse_grid():
    assert np.allclose(parse_grid("-1:1:0.5"), [-1, -0.5, 0, 0.5, 1])
    assert len(parse_grid("0:0:1")) == 1
    for bad in ("1:0:0.1", "0:1:0", "a:b:c", "0:1"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_report_independent_of_chunking_and_workers(logistic):
    fam, eta = logistic
    a = monte_carlo_cdf(fam, 10, MIN_REPS, 11, GRID, eta=eta)
    b = monte_carlo_cdf(fam, 10, MIN_REPS, 11, GRID, eta=eta, chunk=777, workers=3)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()


def test_report_shape_and_invariants(logistic):
    fam, eta = logistic
    rep = monte_carlo_cdf(fam, 8, MIN_REPS, 5, GRID, eta=eta)
    assert np.all(np.diff(rep.empirical) >= 0)
    assert all(d >= 0 for d in rep.sup_distances)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "x,empirical,order0,order1,order2,order3,abs_err0,abs_err1,abs_err2,abs_err3"
    assert len(lines) == len(GRID) + 1
    s = rep.summary()
    assert s["seed"] == 5 and s["failures"] == 0 and set(s["sup_distance"]) == {f"order{k}" for k in range(4)}


def test_seed_changes_result(logistic):
    fam, eta = logistic
    a = monte_carlo_cdf(fam, 8, MIN_REPS, 1, GRID, eta=eta)
    b = monte_carlo_cdf(fam, 8, MIN_REPS, 2, GRID, eta=eta)
    assert a.to_csv() != b.to_csv()


def test_gaussian_empirical_cdf_is_normal():
    fam = get_family("gaussian")
    rep = monte_carlo_cdf(fam, 5, 40_000, 3, GRID)
    assert rep.sup_distances[0] < 4 * rep.standard_error


def test_preconditions(logistic):
    fam, eta = logistic
    with pytest.raises(ValueError, match="reps"):
        monte_carlo_cdf(fam, 5, MIN_REPS - 1, 0, GRID, eta=eta)
    with pytest.raises(ValueError, match="grid"):
        monte_carlo_cdf(fam, 5, MIN_REPS, 0, [1.0, 0.0], eta=eta)
    with pytest.raises(ValueError, match="standardized"):
        monte_carlo_cdf(get_family("logistic"), 5, MIN_REPS, 0, GRID)


def test_failures_abort(logistic):
    fam, eta = logistic

    def broken(x):
        d = fam.ell(x)
        return np.where(np.isfinite(d), np.nan, d)

    bad = dataclasses.replace(fam, ell=broken)
    with pytest.raises(MonteCarloError, match="failed"):
        monte_carlo_cdf(bad, 5, MIN_REPS, 0, GRID, eta=eta)
