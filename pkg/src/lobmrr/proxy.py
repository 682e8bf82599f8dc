"""Fundamental-price proxies built from best quotes and depths, and the
diagnostics used to judge them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import EmptySide, InsufficientData, ZeroVariance
from .frames import Frames
from .stats import (
    LagRow,
    LagTable,
    _response,
    _return_covariance,
    _same_segment,
    _table,
    _unpack,
    impact_by_imbalance,
    response_function,
    shifted_response,
    summarize,
)


class ProxyVariant(str, Enum):
    SQUARED = "squared"
    LINEAR = "linear"
    VWAP = "vwap"
    MID = "mid"


@dataclass(frozen=True)
class ProxySeries:
    variant: ProxyVariant
    values: np.ndarray  # dollars
    tick_size: float
    rebate: float
    segment: np.ndarray
    day: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


def proxy_values(bid, ask, vbid, vask, variant: ProxyVariant | str, rebate: float) -> np.ndarray:
    """Proxy prices from dollar quotes and positive depths."""
    variant = ProxyVariant(variant)
    b = np.asarray(bid, dtype=np.float64)
    a = np.asarray(ask, dtype=np.float64)
    vb = np.asarray(vbid, dtype=np.float64)
    va = np.asarray(vask, dtype=np.float64)
    if variant is ProxyVariant.MID:
        return (a + b) / 2
    if vb.size and (vb.min() <= 0 or va.min() <= 0):
        raise EmptySide("proxy needs positive depth on both sides")
    if variant is ProxyVariant.SQUARED:
        wa, wb = va * va, vb * vb
        return (wa * (b - rebate) + wb * (a + rebate)) / (wa + wb)
    if variant is ProxyVariant.LINEAR:
        return (va * (b - rebate) + vb * (a + rebate)) / (va + vb)
    return (va * b + vb * a) / (va + vb)


def compute_proxy(frames: Frames, variant: ProxyVariant | str = ProxyVariant.SQUARED,
                  rebate: float | None = None) -> ProxySeries:
    """Proxy series on pre-trade frames. ``rebate`` defaults to the frames' own."""
    variant = ProxyVariant(variant)
    r = frames.rebate if rebate is None else float(rebate)
    if variant is ProxyVariant.MID:
        values = frames.mid_usd
    else:
        values = proxy_values(frames.bid_usd, frames.ask_usd, frames.vbid, frames.vask, variant, r)
    return ProxySeries(variant, values, frames.tick_size, r, frames.segment, frames.day)


def proxy_response(frames: Frames, proxy: ProxySeries | np.ndarray, max_lag: int) -> LagTable:
    """R^(q)(l) = E[eps_t (q_{t+l} - q_t)] for l = 1..max_lag."""
    q = proxy.values if isinstance(proxy, ProxySeries) else np.asarray(proxy, dtype=np.float64)
    if q.size != frames.n:
        raise ValueError("proxy and frames are not aligned")
    return _response(frames.eps, q, frames.segment, frames.day, 0, range(1, max_lag + 1),
                     "proxy_response")


def return_correlation(series, max_lag: int) -> LagTable:
    """corr_q(l) = E[dq_{t+l} dq_t] / E[dq_t^2] for l = 0..max_lag."""
    q, seg, day = _unpack(series)
    cov = _return_covariance(q, seg, day, range(max_lag + 1), "return_covariance")
    var = cov.value[0]
    if not var > 0:
        raise ZeroVariance("one-step returns have zero variance")
    return LagTable("return_correlation", cov.lags, cov.value / var, cov.se / var, cov.n)


def signature_plot(series, lags: Iterable[int]) -> LagTable:
    """sigma(l) = sqrt(E[(q_{t+l} - q_t)^2] / l), with a delta-method error."""
    q, seg, day = _unpack(series)
    lags = list(lags)
    rows = []
    n = q.size
    for lag in lags:
        if lag < 1:
            raise ValueError("signature lags start at 1")
        m = n - lag
        if m <= 0:
            raise InsufficientData(f"{n} values for lag {lag}")
        ok = _same_segment(seg, lag, m)
        d = q[lag:lag + m] - q[:m]
        ms, se, cnt = summarize((d * d)[ok], day[:m][ok])
        sigma = math.sqrt(ms / lag)
        rows.append((sigma, se / (2.0 * math.sqrt(ms * lag)) if ms > 0 else 0.0, cnt))
    return _table("signature_plot", lags, [LagRow(*r) for r in rows])


@dataclass(frozen=True)
class ImbalanceCapture:
    lag: int
    bins: np.ndarray  # bin indices
    capture: np.ndarray  # per bin, nan where undefined
    n: np.ndarray
    aggregate: float
    top_bins: tuple[int, ...]


def imbalance_information_capture(frames: Frames, proxy: ProxySeries, lag: int = 50,
                                  bins: int = 10, top_bins: Iterable[int] | None = None
                                  ) -> ImbalanceCapture:
    """Share of the imbalance-conditioned mid impact absorbed by the proxy.

    capture = 1 - R^(proxy)(l | iota) / R^(x)(l | iota). The aggregate is the
    count-weighted ratio over ``top_bins`` (default: the upper half of bins).
    """
    top = tuple(range(bins // 2, bins)) if top_bins is None else tuple(top_bins)
    mid_grid = impact_by_imbalance(frames, [lag], bins)
    px_grid = impact_by_imbalance(frames, [lag], bins, series=proxy.values)
    mid_v = mid_grid.value[:, 0]
    px_v = px_grid.value[:, 0]
    cnt = mid_grid.n[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        capture = np.where((cnt > 0) & (mid_v != 0), 1.0 - px_v / mid_v, np.nan)
    use = [b for b in top if cnt[b] > 0]
    if use:
        w = cnt[use].astype(np.float64)
        num = float(np.dot(w, px_v[use]))
        den = float(np.dot(w, mid_v[use]))
        aggregate = 1.0 - num / den if den != 0 else math.nan
    else:
        aggregate = math.nan
    return ImbalanceCapture(lag, np.arange(bins), capture, cnt, aggregate, top)


@dataclass(frozen=True)
class NewsCovarianceEstimate:
    value: float
    se: float
    r1: float
    r1_shift: float
    proxy_r1: float
    n: int


def news_trade_covariance(frames: Frames, proxy: ProxySeries) -> NewsCovarianceEstimate:
    """E[eps_{t+1} W_t] estimated as R(1) + R_1(1) - R^(p)(1), in dollars.

    The standard error comes from the per-trade combination
    eps_t dx_t + eps_{t+1} dx_t - eps_t dp_t on the common sample.
    """
    r1 = response_function(frames, 1).at(1)
    r1k = shifted_response(frames, 1, 1).at(1)
    rp1 = proxy_response(frames, proxy, 1).at(1)
    value = r1 + r1k - rp1
    e = frames.eps.astype(np.float64)
    x = frames.mid_usd
    p = proxy.values
    m = frames.n - 1
    ok = _same_segment(frames.segment, 1, m)
    dx = x[1:] - x[:-1]
    z = e[:m] * dx + e[1:] * dx - e[:m] * (p[1:] - p[:-1])
    row = summarize(z[ok], frames.day[:m][ok])
    return NewsCovarianceEstimate(value, row.se, r1, r1k, rp1, row.n)
