import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from lobmrr.errors import EmptySide, ZeroVariance
from lobmrr.frames import Frames
from lobmrr.proxy import (
    ProxySeries,
    ProxyVariant,
    compute_proxy,
    imbalance_information_capture,
    news_trade_covariance,
    proxy_response,
    proxy_values,
    return_correlation,
    signature_plot,
)
from lobmrr.simulator import MrrParams, SignProcessSpec, simulate_continuous, simulate_discrete

import oracles
from conftest import random_frames

depth = st.integers(1, 10**6)
price = st.integers(1_000, 10_000)


def test_worked_squared_volume_example():
    # (100^2 * 9.997 + 200^2 * 10.013) / 50000
    p = proxy_values([10.00], [10.01], [200], [100], "squared", 0.003)[0]
    assert p == pytest.approx(10.0098, abs=1e-12)
    assert p == oracles.squared_volume_proxy(10.00, 10.01, 200.0, 100.0, 0.003)


def test_balanced_book_gives_mid():
    for v in ("squared", "linear", "vwap", "mid"):
        assert proxy_values([10.00], [10.01], [70], [70], v, 0.003)[0] == pytest.approx(10.005, abs=1e-12)


def test_heavy_bid_pushes_towards_ask_plus_rebate():
    p = proxy_values([10.00], [10.01], [10**6], [1], "squared", 0.003)[0]
    assert p == pytest.approx(10.013, abs=1e-9) and p > 10.01


def test_empty_side_rejected():
    with pytest.raises(EmptySide):
        proxy_values([10.0], [10.01], [0], [5], "squared", 0.003)


@given(price, st.integers(1, 5), depth, depth, st.floats(0, 0.005))
def test_bounds(b_ticks, spread, vb, va, r):
    b, a = b_ticks / 100, (b_ticks + spread) / 100
    sq, lin, vw = (proxy_values([b], [a], [vb], [va], v, r)[0] for v in ("squared", "linear", "vwap"))
    eps = 1e-9
    assert b - r - eps <= sq <= a + r + eps
    assert b - r - eps <= lin <= a + r + eps
    assert b - eps <= vw <= a + eps


@given(price, depth, depth, st.integers(1, 1000))
def test_monotone_in_depths(b_ticks, vb, va, bump):
    b, a = b_ticks / 100, (b_ticks + 1) / 100
    base = proxy_values([b], [a], [vb], [va], "squared", 0.003)[0]
    assert proxy_values([b], [a], [vb + bump], [va], "squared", 0.003)[0] >= base
    assert proxy_values([b], [a], [vb], [va + bump], "squared", 0.003)[0] <= base


@given(price, depth, depth)
def test_linear_equals_vwap_without_rebate(b_ticks, vb, va):
    b, a = b_ticks / 100, (b_ticks + 1) / 100
    assert proxy_values([b], [a], [vb], [va], "linear", 0.0)[0] == proxy_values([b], [a], [vb], [va], "vwap", 0.0)[0]


def test_compute_proxy_uses_frame_rebate_unless_overridden(rng):
    f = random_frames(rng, 50)
    a = compute_proxy(f, ProxyVariant.LINEAR)
    b = compute_proxy(f, ProxyVariant.LINEAR, rebate=0.0)
    assert a.rebate == 0.003 and b.rebate == 0.0
    np.testing.assert_array_equal(b.values, compute_proxy(f, "vwap").values)
    np.testing.assert_array_equal(compute_proxy(f, "mid").values, f.mid_usd)


def ma1(n=1_000_000, theta=0.5, seed=9):
    u = np.random.default_rng(seed).standard_normal(n + 1)
    return np.concatenate([[0.0], np.cumsum(u[1:] + theta * u[:-1])])


def test_ma1_return_correlation():
    corr = return_correlation(ma1(), 3)
    assert corr.at(1) == pytest.approx(0.5 / 1.25, rel=0.01)
    assert abs(corr.at(2)) < 4 * corr[2].se


def test_ma1_signature_ratio():
    sig = signature_plot(ma1(), [1, 200])
    assert sig.at(200) / sig.at(1) == pytest.approx(math.sqrt(1.5 ** 2 / 1.25), rel=0.01)


def test_random_walk_is_flat():
    q = np.cumsum(np.random.default_rng(2).standard_normal(200_000))
    sig = signature_plot(q, [1, 10, 50])
    for lag in (10, 50):
        assert abs(sig.at(lag) - sig.at(1)) < 4 * (sig[lag].se + sig[1].se)
    corr = return_correlation(q, 2)
    assert abs(corr.at(1)) < 4 * corr[1].se


def test_zero_variance():
    with pytest.raises(ZeroVariance):
        return_correlation(np.ones(100), 2)


def test_zero_impact_proxy_response():
    rng = np.random.default_rng(5)
    n = 200_000
    p = np.cumsum(rng.standard_normal(n)) * 0.01
    f = Frames.build(eps=rng.choice([-1, 1], n), bid=np.zeros(n), ask=np.ones(n), vbid=np.ones(n),
                     vask=np.ones(n), price_unit=1.0)
    R = proxy_response(f, p, 3)
    for lag in (1, 2, 3):
        assert abs(R.at(lag)) < 4 * R[lag].se


def test_true_price_response_is_flat():
    path = simulate_continuous(MrrParams(G=1.0, W_sigma=0.5, r=0.0, n_steps=300_000),
                               SignProcessSpec("markov", 0.5, seed=8))
    f = path.to_frames(price_unit=1.0)
    R = proxy_response(f, path.p, 10)
    for lag in range(2, 11):
        assert abs(R.at(lag) - R.at(1)) < 4 * (R[lag].se + R[1].se)


def test_news_identity_is_exact(rng):
    f = random_frames(rng, 500)
    est = news_trade_covariance(f, compute_proxy(f))
    assert est.value == est.r1 + est.r1_shift - est.proxy_r1


def test_news_zero_without_coupling():
    path = simulate_discrete(MrrParams(G=0.003, W_sigma=0.005, r=0.003, n_steps=200_000),
                             SignProcessSpec("markov", 0.5, seed=3))
    f = path.to_frames()
    est = news_trade_covariance(f, compute_proxy(f))
    assert abs(est.value) < 4 * est.se


def test_capture_self_and_truth():
    path = simulate_discrete(MrrParams(G=0.001, W_sigma=0.002, r=0.003, n_steps=300_000),
                             SignProcessSpec("markov", 0.5, seed=21))
    f = path.to_frames()
    mid = compute_proxy(f, "mid")
    self_cap = imbalance_information_capture(f, mid, lag=20)
    ok = ~np.isnan(self_cap.capture)
    assert np.all(self_cap.capture[ok] == 0.0)
    truth = ProxySeries(ProxyVariant.MID, path.p, f.tick_size, f.rebate, f.segment, f.day)
    cap = imbalance_information_capture(f, truth, lag=20)
    assert cap.aggregate == pytest.approx(1.0, abs=0.1)
