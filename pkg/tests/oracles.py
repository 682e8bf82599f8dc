"""Naive reference estimators: explicit double loops over plain Python floats.

They share nothing with the package beyond the definitions of the
statistics, the segment rule and the per-day pooling rule.
"""

from __future__ import annotations

import math


def summary(values: list[float], days: list[int]) -> tuple[float, float, int]:
    def mean_se(vs):
        s = 0.0
        for v in vs:
            s += v
        m = s / len(vs)
        if len(vs) < 2:
            return m, 0.0
        ss = 0.0
        for v in vs:
            d = v - m
            ss += d * d
        return m, math.sqrt(ss / (len(vs) - 1)) / math.sqrt(len(vs))

    if len(set(days)) == 1:
        m, se = mean_se(values)
    else:
        daily = []
        for d in sorted(set(days)):
            vs = [v for v, dd in zip(values, days) if dd == d]
            s = 0.0
            for v in vs:
                s += v
            daily.append(s / len(vs))
        m, se = mean_se(daily)
    return m, se, len(values)


def mids(frames) -> list[float]:
    unit = frames.price_unit
    return [(b + a) / 2 * unit for b, a in zip(frames.bid.tolist(), frames.ask.tolist())]


def sign_autocorrelation(eps, seg, day, max_lag):
    e = [float(v) for v in eps]
    out = []
    for lag in range(max_lag + 1):
        vals, ds = [], []
        for t in range(len(e) - lag):
            if seg[t] == seg[t + lag]:
                vals.append(e[t + lag] * e[t])
                ds.append(day[t])
        out.append(summary(vals, ds))
    return out


def shifted_response(eps, x, seg, day, k, lags):
    e = [float(v) for v in eps]
    out = []
    for lag in lags:
        span = max(k, lag)
        vals, ds = [], []
        for t in range(len(e) - span):
            if seg[t] == seg[t + span]:
                vals.append(e[t + k] * (x[t + lag] - x[t]))
                ds.append(day[t])
        out.append(summary(vals, ds))
    return out


def return_covariance(q, seg, day, lags):
    dq = [q[t + 1] - q[t] for t in range(len(q) - 1)]
    out = []
    for lag in lags:
        vals, ds = [], []
        for t in range(len(q) - 1 - lag):
            if seg[t] == seg[t + lag + 1]:
                vals.append(dq[t + lag] * dq[t])
                ds.append(day[t])
        out.append(summary(vals, ds))
    return out


def signature(q, seg, day, lags):
    out = []
    for lag in lags:
        vals, ds = [], []
        for t in range(len(q) - lag):
            if seg[t] == seg[t + lag]:
                d = q[t + lag] - q[t]
                vals.append(d * d)
                ds.append(day[t])
        ms, se, n = summary(vals, ds)
        out.append((math.sqrt(ms / lag), se / (2.0 * math.sqrt(ms * lag)) if ms > 0 else 0.0, n))
    return out


def imbalance_impact(q, vbid, vask, seg, day, lags, bins):
    imb = [(float(b) - float(a)) / (float(b) + float(a)) for b, a in zip(vbid, vask)]
    sgn = [float((i > 0) - (i < 0)) for i in imb]
    which = [min(math.floor(abs(i) * bins), bins - 1) for i in imb]
    out = {}
    for lag in lags:
        for b in range(bins):
            vals, ds = [], []
            for t in range(len(q) - lag):
                if seg[t] == seg[t + lag] and which[t] == b:
                    vals.append(sgn[t] * (q[t + lag] - q[t]))
                    ds.append(day[t])
            out[(b, lag)] = summary(vals, ds) if vals else None
    return out


def squared_volume_proxy(b, a, vb, va, r):
    return (va * va * (b - r) + vb * vb * (a + r)) / (va * va + vb * vb)
