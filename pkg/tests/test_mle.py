import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from mlexpand.families import BUILTIN_FAMILIES, get_family, standardize
from mlexpand.mle import score, solve_mle, solve_mle_batch

samples = st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=12)


@given(samples)
@settings(max_examples=50, deadline=None)
def test_gaussian_is_sample_mean(xs):
    r = solve_mle(get_family("gaussian"), xs)
    assert r.converged and r.theta_hat == pytest.approx(np.mean(xs), abs=1e-9)


@pytest.mark.parametrize("name", ["gaussian", "logistic", "hypsec", "gumbel", "cauchy"])
@given(xs=samples, c=st.floats(-50, 50))
@settings(max_examples=25, deadline=None)
def test_equivariance(name, xs, c):
    fam = get_family(name)
    a, b = solve_mle(fam, xs), solve_mle(fam, np.asarray(xs) + c)
    assert a.converged and b.converged
    assert b.theta_hat == pytest.approx(a.theta_hat + c, abs=1e-9)


@pytest.mark.parametrize("name", ["gaussian", "logistic", "hypsec"])
def test_symmetric_pair(name):
    assert abs(solve_mle(get_family(name), [-1.7, 1.7]).theta_hat) < 1e-12


def test_cauchy_close_pair_is_centred():
    # for |a| < 1 the Cauchy likelihood of {-a, a} is unimodal
    assert abs(solve_mle(get_family("cauchy"), [-0.6, 0.6]).theta_hat) < 1e-12


def test_single_logistic_point():
    r = solve_mle(get_family("logistic"), [2.5])
    root = optimize.brentq(lambda t: score(get_family("logistic"), np.array([2.5]), np.array(t)), 0, 5, xtol=1e-14)
    assert r.theta_hat == pytest.approx(root, abs=1e-12)


def test_cauchy_picks_global_minimum():
    fam = get_family("cauchy")
    xs = np.array([-8.0, -7.5, -7.2, 3.0, 3.1])
    r = solve_mle(fam, xs)
    grid = np.linspace(-10, 5, 150001)
    loss = -fam.logpdf(xs[None, :] - grid[:, None]).mean(axis=1)
    assert r.theta_hat == pytest.approx(grid[loss.argmin()], abs=2e-4)
    assert abs(r.score_residual) <= 1e-10


def test_score_residual_within_tolerance():
    fam = standardize(get_family("logistic"))
    xs = fam.sample(np.linspace(0.01, 0.99, 15))
    r = solve_mle(fam, xs)
    assert r.converged and abs(r.score_residual) <= 1e-10


def test_non_convergence_is_flagged():
    r = solve_mle(get_family("logistic"), [0.0, 0.3, 7.0], max_iter=1, tol=1e-300)
    assert not r.converged


def test_batch_matches_scalar():
    fam = get_family("hypsec")
    rng = np.random.default_rng(5)
    x = fam.sample(rng.random((30, 7)))
    b = solve_mle_batch(fam, x)
    for i in range(30):
        assert b.theta[i] == pytest.approx(solve_mle(fam, x[i]).theta_hat, abs=1e-12)


def test_scan_and_fast_path_agree_for_log_concave():
    fam = get_family("logistic")
    x = fam.sample(np.random.default_rng(2).random((50, 9)))
    a, b = solve_mle_batch(fam, x, scan=False), solve_mle_batch(fam, x, scan=True)
    assert np.allclose(a.theta, b.theta, atol=1e-11)


def test_bad_samples():
    with pytest.raises(ValueError):
        solve_mle(get_family("gaussian"), [])
    with pytest.raises(ValueError):
        solve_mle(get_family("gaussian"), [1.0, np.nan])


@pytest.mark.parametrize("name", list(BUILTIN_FAMILIES))
def test_families_are_threadsafe_pure_functions(name):
    from concurrent.futures import ThreadPoolExecutor

    fam = get_family(name)
    x = np.linspace(-3, 3, 1001)
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: fam.psi(x), range(8)))
    assert all(np.array_equal(outs[0], o) for o in outs)
