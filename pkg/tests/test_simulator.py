import math

import numpy as np
import pytest

from lobmrr.errors import InvalidSpec
from lobmrr.simulator import (
    MrrParams,
    SignProcessSpec,
    discretize,
    generate_signs,
    profitability_bounds,
    simulate_continuous,
    simulate_discrete,
)
from lobmrr.stats import sign_autocorrelation


def test_iid_signs_uncorrelated():
    eps, eh = generate_signs(SignProcessSpec("iid", seed=1), 1_000_000)
    C = sign_autocorrelation(eps, 1)
    assert abs(C.at(1)) < 3 * C[1].se
    assert np.all(eh == 0)


@pytest.mark.parametrize("rho", [0.5, 0.57, -0.3])
def test_markov_signs_geometric_correlation(rho):
    eps, eh = generate_signs(SignProcessSpec("markov", rho, seed=2), 1_000_000)
    C = sign_autocorrelation(eps, 3)
    for lag in (1, 2, 3):
        assert abs(C.at(lag) - rho ** lag) < 3 * C[lag].se
    np.testing.assert_array_equal(eh[1:], rho * eps[:-1])


def test_linear_predictor_signs():
    spec = SignProcessSpec("linear", weights=(0.3, 0.2), seed=3)
    eps, eh = generate_signs(spec, 200_000)
    assert np.all(np.abs(eh) < 1)
    np.testing.assert_allclose(eh[2:], 0.3 * eps[1:-1] + 0.2 * eps[:-2])
    # Yule-Walker for the sign process: C(1) = a1 / (1 - a2)
    C = sign_autocorrelation(eps, 1)
    assert abs(C.at(1) - 0.3 / 0.8) < 4 * C[1].se


def test_predictions_are_conditional_means():
    spec = SignProcessSpec("markov", 0.4, seed=4)
    news = np.random.default_rng(0).standard_normal(500_000)
    eps, eh = generate_signs(spec, 500_000, news=news, coupling=0.3)
    resid = eps - eh
    for cond in (eh > 0.3, eh < -0.3, np.abs(eh) < 0.2):
        sel = resid[cond]
        assert abs(sel.mean()) < 4 * sel.std() / math.sqrt(sel.size)


@pytest.mark.parametrize("kw", [dict(kind="markov", rho=1.0), dict(kind="markov", rho=-1.0),
                                dict(kind="linear", weights=(0.6, -0.5)), dict(kind="linear")])
def test_invalid_sign_specs(kw):
    with pytest.raises(InvalidSpec):
        SignProcessSpec(**kw)


def test_invalid_params():
    with pytest.raises(InvalidSpec):
        MrrParams(G=0)
    with pytest.raises(InvalidSpec):
        MrrParams(W_coupling=0.2, W_sigma=0.0)
    with pytest.raises(InvalidSpec):
        simulate_discrete(MrrParams(G=0.009, tau=0.01, r=0.003, n_steps=10), SignProcessSpec())
    with pytest.raises(InvalidSpec):
        simulate_continuous(MrrParams(G=0.002, r=0.003, n_steps=10), SignProcessSpec())


def test_reproducible():
    params = MrrParams(G=0.003, W_sigma=0.004, W_coupling=0.2, n_steps=20_000)
    spec = SignProcessSpec("markov", 0.5, seed=11)
    a, b = simulate_discrete(params, spec), simulate_discrete(params, spec)
    for name in ("p", "eps", "eps_hat", "news", "bid", "ask", "vbid", "vask", "shifts"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = simulate_discrete(params, SignProcessSpec("markov", 0.5, seed=12))
    assert not np.array_equal(a.p, c.p)


def test_continuous_no_news_iid_mid_steps_are_signs():
    path = simulate_continuous(MrrParams(G=1.0, W_sigma=0.0, r=0.0, n_steps=1000),
                               SignProcessSpec("iid", seed=5))
    np.testing.assert_array_equal(np.diff(path.mid), path.eps[:-1].astype(float))


def test_continuous_quote_invariants():
    path = simulate_continuous(MrrParams(G=0.05, W_sigma=0.02, r=0.0, n_steps=5000),
                               SignProcessSpec("markov", 0.5, seed=6))
    np.testing.assert_allclose(path.spread, 0.1, atol=1e-12)
    np.testing.assert_allclose(path.mid, path.p - 0.05 * path.eps_hat, atol=1e-12)
    rebated = simulate_continuous(MrrParams(G=0.05, W_sigma=0.02, r=0.003, n_steps=5000),
                                  SignProcessSpec("markov", 0.5, seed=6))
    np.testing.assert_allclose(rebated.mid, path.mid, atol=1e-12)
    np.testing.assert_allclose(rebated.spread, 0.1 - 0.006, atol=1e-12)


def test_continuous_fundamental_is_martingale():
    path = simulate_continuous(MrrParams(G=1.0, W_sigma=0.5, r=0.0, n_steps=400_000),
                               SignProcessSpec("markov", 0.6, seed=7))
    dp = np.diff(path.p)
    prev = path.eps[:-1]
    for cond in (prev[:-1] == 1, prev[:-1] == -1, dp[:-1] > 0):
        sel = dp[1:][cond]
        assert abs(sel.mean()) < 4 * sel.std() / math.sqrt(sel.size)


def test_discrete_grid_invariants():
    params = MrrParams(G=0.003, W_sigma=0.003, r=0.003, tau=0.01, n_steps=100_000)
    path = simulate_discrete(params, SignProcessSpec("markov", 0.5, seed=8))
    np.testing.assert_allclose(path.spread, 0.01, atol=1e-9)
    lo, hi = profitability_bounds(path)
    assert np.all((lo < path.p) & (path.p < hi))
    moved = np.diff(path.bid_index) != 0
    np.testing.assert_array_equal(moved, path.depleted[:-1])
    np.testing.assert_array_equal(np.diff(path.bid_index), path.shifts[:-1])


def test_discrete_hysteresis():
    # G < r: neighbouring intervals overlap, so the same p can sit under two mids
    G, tau, r = 0.001, 0.01, 0.003
    up_then_back = [100.005, 100.013, 100.009]
    direct = [100.005, 100.009]
    idx_a, _ = discretize(up_then_back, [0.0] * 3, G, tau, r, start_index=10000)
    idx_b, _ = discretize(direct, [0.0] * 2, G, tau, r, start_index=10000)
    assert idx_a[-1] == 10001 and idx_b[-1] == 10000


def test_news_coupling_target():
    q, ws = 0.3, 0.005
    path = simulate_discrete(MrrParams(G=0.003, W_sigma=ws, W_coupling=q, n_steps=400_000),
                             SignProcessSpec("markov", 0.5, seed=9))
    prods = path.eps[1:] * path.news[:-1]
    se = prods.std() / math.sqrt(prods.size)
    assert abs(prods.mean() - q * ws * math.sqrt(2 / math.pi)) < 3 * se


def test_volume_inversion_recovers_price():
    params = MrrParams(G=0.003, W_sigma=0.003, volume_noise=0.1, n_steps=100_000)
    path = simulate_discrete(params, SignProcessSpec("markov", 0.5, seed=10))
    wa, wb = path.vask.astype(float) ** 2, path.vbid.astype(float) ** 2
    p_hat = (wa * (path.bid - params.r) + wb * (path.ask + params.r)) / (wa + wb)
    rmse = math.sqrt(np.mean((p_hat - path.p) ** 2))
    # integer rounding of depths near 1000 shares bounds the error well below this pin
    assert rmse < (params.tau + 2 * params.r) * 2e-3


def test_fundamental_symmetric_within_interval():
    path = simulate_discrete(MrrParams(G=0.003, W_sigma=0.003, n_steps=300_000),
                             SignProcessSpec("markov", 0.5, seed=12))
    v = path.p - path.mid - path.params.G * path.eps_hat
    se = v.std() / math.sqrt(v.size)
    assert abs(v.mean()) < 4 * se
    skew = np.mean((v - v.mean()) ** 3) / v.std() ** 3
    assert abs(skew) < 0.05
