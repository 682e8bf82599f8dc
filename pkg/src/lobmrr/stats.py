"""Transaction-time estimators: sign correlation, response functions, the
parameter-free MRR relation, mid-return covariance, imbalance-conditioned and
depletion impact, and the implied-spread check.

Every mean is a strictly sequential sum (``np.add.accumulate``) so results are
reproducible bit for bit and match a plain Python loop. Lags never straddle a
segment boundary (a new day or a trading halt). With several days, values are
the equal-weight average of per-day means and the standard error is the
dispersion of those daily means; with one day it is the i.i.d. product error.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .book import DepletionEvent
from .errors import DegenerateAutocorrelation, InsufficientData, PlateauWarning
from .frames import Frames

DEGENERATE_EPS = 1e-9


class LagRow(NamedTuple):
    value: float
    se: float
    n: int


@dataclass(frozen=True)
class LagTable:
    name: str
    lags: np.ndarray
    value: np.ndarray
    se: np.ndarray
    n: np.ndarray

    def __getitem__(self, lag: int) -> LagRow:
        i = self._index(lag)
        return LagRow(float(self.value[i]), float(self.se[i]), int(self.n[i]))

    def __contains__(self, lag: int) -> bool:
        return bool(np.any(self.lags == lag))

    def _index(self, lag: int) -> int:
        hit = np.flatnonzero(self.lags == lag)
        if hit.size == 0:
            raise KeyError(f"lag {lag} not in {self.name}")
        return int(hit[0])

    def at(self, lag: int) -> float:
        return self[lag].value

    def records(self) -> list[dict]:
        return [{"lag": int(l), "value": float(v), "se": float(s), "n": int(n)}
                for l, v, s, n in zip(self.lags, self.value, self.se, self.n)]


# ----------------------------------------------------------------- reductions

def seqsum(a: np.ndarray) -> float:
    """Left-to-right float64 sum."""
    if a.size == 0:
        return 0.0
    return float(np.add.accumulate(np.asarray(a, dtype=np.float64))[-1])


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    m = seqsum(values) / n
    if n < 2:
        return m, 0.0
    dev = values - m
    return m, math.sqrt(seqsum(dev * dev) / (n - 1)) / math.sqrt(n)


def summarize(values: np.ndarray, days: np.ndarray) -> LagRow:
    """Mean, standard error and count with the per-day pooling rule."""
    n = int(values.size)
    if n == 0:
        raise InsufficientData("no valid samples")
    if np.all(days == days[0]):
        m, se = _mean_se(values)
        return LagRow(m, se, n)
    daily = np.array([seqsum(values[days == d]) / int(np.count_nonzero(days == d))
                      for d in np.unique(days)])
    m, se = _mean_se(daily)
    return LagRow(m, se, n)


def _table(name: str, lags: Sequence[int], rows: list[LagRow]) -> LagTable:
    return LagTable(
        name=name,
        lags=np.asarray(lags, dtype=np.int64),
        value=np.array([r.value for r in rows], dtype=np.float64),
        se=np.array([r.se for r in rows], dtype=np.float64),
        n=np.array([r.n for r in rows], dtype=np.int64),
    )


def _same_segment(segment: np.ndarray, span: int, count: int) -> np.ndarray:
    """Mask over t in [0, count) with t and t + span in one segment."""
    return segment[:count] == segment[span:span + count]


def _unpack(series, segment=None, day=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(series, Frames):
        return series.mid_usd, series.segment, series.day
    if hasattr(series, "values") and hasattr(series, "segment"):
        return series.values, series.segment, series.day
    values = np.asarray(series, dtype=np.float64)
    n = values.size
    seg = np.zeros(n, dtype=np.int64) if segment is None else np.asarray(segment)
    d = np.zeros(n, dtype=np.int64) if day is None else np.asarray(day)
    return values, seg, d


# ------------------------------------------------------------- sign and impact

def sign_autocorrelation(eps, max_lag: int, segment=None, day=None) -> LagTable:
    """C(l) = E[eps_{t+l} eps_t] for l = 0..max_lag."""
    if isinstance(eps, Frames):
        eps, segment, day = eps.eps, eps.segment, eps.day
    e = np.asarray(eps, dtype=np.float64)
    n = e.size
    if n <= max_lag:
        raise InsufficientData(f"{n} signs for max lag {max_lag}")
    seg = np.zeros(n, dtype=np.int64) if segment is None else np.asarray(segment)
    d = np.zeros(n, dtype=np.int64) if day is None else np.asarray(day)
    rows = []
    for lag in range(max_lag + 1):
        m = n - lag
        ok = _same_segment(seg, lag, m)
        rows.append(summarize((e[lag:] * e[:m])[ok], d[:m][ok]))
    return _table("sign_autocorrelation", range(max_lag + 1), rows)


def _response(eps: np.ndarray, x: np.ndarray, seg: np.ndarray, day: np.ndarray,
              k: int, lags: Iterable[int], name: str) -> LagTable:
    e = eps.astype(np.float64)
    n = e.size
    lags = list(lags)
    rows = []
    for lag in lags:
        span = max(k, lag)
        m = n - span
        if m <= 0:
            raise InsufficientData(f"{n} frames for lag {lag}")
        ok = _same_segment(seg, span, m)
        prods = e[k:k + m] * (x[lag:lag + m] - x[:m])
        rows.append(summarize(prods[ok], day[:m][ok]))
    return _table(name, lags, rows)


def response_function(frames: Frames, max_lag: int) -> LagTable:
    """R(l) = E[eps_t (x_{t+l} - x_t)] in dollars, l = 1..max_lag."""
    return _response(frames.eps, frames.mid_usd, frames.segment, frames.day, 0,
                     range(1, max_lag + 1), "response")


def shifted_response(frames: Frames, k: int, max_lag: int) -> LagTable:
    """R_k(l) = E[eps_{t+k} (x_{t+l} - x_t)], l = 1..max_lag."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return _response(frames.eps, frames.mid_usd, frames.segment, frames.day, k,
                     range(1, max_lag + 1), f"shifted_response_k{k}")


@dataclass(frozen=True)
class MrrRow:
    lag: int
    rescaled: float
    se: float
    ratio: float


def mrr_relation_test(C: LagTable, R: LagTable, lags: Iterable[int]) -> list[MrrRow]:
    """R(l)(1 - C(1))/(1 - C(l)) per lag, and its ratio to R(1).

    Under the model every rescaled value equals R(1).
    """
    c1 = C.at(1)
    r1 = R.at(1)
    out = []
    for lag in sorted(set(lags)):
        cl = C.at(lag)
        if 1.0 - cl < DEGENERATE_EPS or 1.0 - c1 < DEGENERATE_EPS:
            raise DegenerateAutocorrelation(f"C({lag}) = {cl} too close to 1")
        scale = (1.0 - c1) / (1.0 - cl)
        row = R[lag]
        val = row.value * scale
        out.append(MrrRow(lag, val, row.se * scale, val / r1 if r1 != 0 else math.nan))
    return out


@dataclass(frozen=True)
class GEstimate:
    G_hat: float
    method: str
    lag_star: int
    per_lag: dict[int, float]
    relative_range: float
    flat: bool


def estimate_G(C: LagTable, R: LagTable, lag_star: int = 50, method: str = "plateau",
               tolerance: float = 0.05) -> GEstimate:
    """Permanent impact G from G(l) = R(l)/(1 - C(l)).

    ``plateau`` takes G(lag_star); ``per_lag`` averages G(l) over the
    diagnostic window [0.6 lag_star, lag_star]. Either way the relative range
    of G(l) over that window is checked against ``tolerance`` and a
    ``PlateauWarning`` is raised when it is exceeded.
    """
    if method not in ("plateau", "per_lag"):
        raise ValueError(f"unknown method {method!r}")
    per_lag: dict[int, float] = {}
    for lag in R.lags.tolist():
        if lag in C and lag > 0:
            denom = 1.0 - C.at(lag)
            if denom < DEGENERATE_EPS:
                if lag == lag_star:
                    raise DegenerateAutocorrelation(f"C({lag_star}) too close to 1")
                continue
            per_lag[lag] = R.at(lag) / denom
    if lag_star not in per_lag:
        raise InsufficientData(f"lag {lag_star} not available for G estimate")
    lo = max(1, int(round(0.6 * lag_star)))
    window = [per_lag[l] for l in range(lo, lag_star + 1) if l in per_lag]
    if method == "plateau":
        g = per_lag[lag_star]
    else:
        g = seqsum(np.array(window)) / len(window)
    spread = (max(window) - min(window)) / abs(g) if g != 0 else math.inf
    flat = spread < tolerance
    if not flat:
        warnings.warn(f"G(l) varies by {spread:.1%} over lags {lo}..{lag_star}",
                      PlateauWarning, stacklevel=2)
    return GEstimate(g, method, lag_star, per_lag, spread, flat)


# -------------------------------------------------------- returns covariance

def _return_covariance(q: np.ndarray, seg: np.ndarray, day: np.ndarray, lags: Iterable[int],
                       name: str) -> LagTable:
    n = q.size
    dq = q[1:] - q[:-1]
    lags = list(lags)
    rows = []
    for lag in lags:
        m = n - 1 - lag
        if m <= 0:
            raise InsufficientData(f"{n} values for return lag {lag}")
        ok = _same_segment(seg, lag + 1, m)
        rows.append(summarize((dq[lag:lag + m] * dq[:m])[ok], day[:m][ok]))
    return _table(name, lags, rows)


def midprice_return_covariance(frames: Frames, max_lag: int) -> LagTable:
    """cov_x(l) = E[(x_{t+1+l} - x_{t+l})(x_{t+1} - x_t)] in dollars^2, l = 0..max_lag."""
    return _return_covariance(frames.mid_usd, frames.segment, frames.day, range(max_lag + 1),
                              "midprice_return_covariance")


@dataclass(frozen=True)
class CovIdentityRow:
    lag: int
    lhs: float
    rhs: float
    gap: float


def covariance_identity_test(frames: Frames, max_lag: int = 5, lag_star: int = 50,
                             G: GEstimate | float | None = None,
                             floor: float = 1e-15) -> list[CovIdentityRow]:
    """Compare cov_x(l) with R(inf)[R_l(1) - R_{l+1}(1)] for l = 1..max_lag.

    ``gap`` is |lhs - rhs| / max(|lhs|, |rhs|, floor).
    """
    if G is None:
        L = max(lag_star, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PlateauWarning)
            G = estimate_G(sign_autocorrelation(frames, L), response_function(frames, L), lag_star)
    g = G.G_hat if isinstance(G, GEstimate) else float(G)
    cov = midprice_return_covariance(frames, max_lag)
    shifted = {k: shifted_response(frames, k, 1).at(1) for k in range(1, max_lag + 2)}
    out = []
    for lag in range(1, max_lag + 1):
        lhs = cov.at(lag)
        rhs = g * (shifted[lag] - shifted[lag + 1])
        gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor)
        out.append(CovIdentityRow(lag, lhs, rhs, gap))
    return out


# ----------------------------------------------------- conditional impacts

@dataclass(frozen=True)
class ImbalanceImpactGrid:
    edges: np.ndarray
    lags: np.ndarray
    value: np.ndarray  # bins x lags, nan where a bin is empty
    se: np.ndarray
    n: np.ndarray

    def bin_of(self, imbalance: float) -> int:
        return min(int(math.floor(abs(imbalance) * (len(self.edges) - 1))), len(self.edges) - 2)

    def records(self) -> list[dict]:
        out = []
        for b in range(len(self.edges) - 1):
            for j, lag in enumerate(self.lags.tolist()):
                out.append({"bin_lo": float(self.edges[b]), "bin_hi": float(self.edges[b + 1]),
                            "lag": int(lag), "value": float(self.value[b, j]),
                            "se": float(self.se[b, j]), "n": int(self.n[b, j])})
        return out


def imbalance_bins(imb: np.ndarray, bins: int) -> np.ndarray:
    return np.minimum(np.floor(np.abs(imb) * bins), bins - 1).astype(np.int64)


def impact_by_imbalance(frames: Frames, lags: Iterable[int], bins: int = 10,
                        series: np.ndarray | None = None) -> ImbalanceImpactGrid:
    """R(l | iota) with |iota| in ``bins`` equal bins over [0, 1).

    Symmetrised by multiplying the move by sign(iota): bid-heavy books count as
    they are, ask-heavy books are flipped. A frame with iota = 0 contributes
    zero, which is the average of its two mirrored copies. ``series`` replaces
    the mid (dollars) when conditioning a proxy instead.
    """
    lags = list(lags)
    q = frames.mid_usd if series is None else np.asarray(series, dtype=np.float64)
    imb = frames.imbalance
    sgn = np.sign(imb)
    which = imbalance_bins(imb, bins)
    n = frames.n
    value = np.full((bins, len(lags)), np.nan)
    se = np.full((bins, len(lags)), np.nan)
    count = np.zeros((bins, len(lags)), dtype=np.int64)
    for j, lag in enumerate(lags):
        m = n - lag
        if m <= 0:
            raise InsufficientData(f"{n} frames for lag {lag}")
        ok = _same_segment(frames.segment, lag, m)
        moves = sgn[:m] * (q[lag:lag + m] - q[:m])
        for b in range(bins):
            sel = ok & (which[:m] == b)
            if not np.any(sel):
                continue
            row = summarize(moves[sel], frames.day[:m][sel])
            value[b, j], se[b, j], count[b, j] = row
    edges = np.linspace(0.0, 1.0, bins + 1)
    return ImbalanceImpactGrid(edges, np.asarray(lags, dtype=np.int64), value, se, count)


@dataclass(frozen=True)
class DepletionImpact:
    value: float
    se: float
    n: int
    horizon: int
    by_cause: dict[str, LagRow]


def _depletion_moves(depletions: Sequence[DepletionEvent], frames: Frames, horizon: int):
    x = frames.mid
    moves, days, causes = [], [], []
    for d in depletions:
        k = d.frame_index + horizon
        if d.frame_index >= frames.n or k >= frames.n or frames.segment[k] != d.segment:
            continue
        moves.append(d.direction * (x[k] - d.pre_mid) * frames.price_unit)
        days.append(frames.day[d.frame_index])
        causes.append(d.cause)
    return np.array(moves, dtype=np.float64), np.array(days, dtype=np.int64), causes


def depletion_impact(depletions: Sequence[DepletionEvent], frames: Frames,
                     horizon: int = 50) -> DepletionImpact:
    """Mean signed mid move ``horizon`` trades after a best-queue depletion."""
    moves, days, causes = _depletion_moves(depletions, frames, horizon)
    if moves.size == 0:
        raise InsufficientData(f"no depletion with {horizon} trades of follow-up")
    pooled = summarize(moves, days)
    by_cause = {}
    for cause in sorted(set(causes)):
        sel = np.array([c == cause for c in causes])
        by_cause[cause] = summarize(moves[sel], days[sel])
    return DepletionImpact(pooled.value, pooled.se, pooled.n, horizon, by_cause)


def depletion_impact_profile(depletions: Sequence[DepletionEvent], frames: Frames,
                             horizons: Iterable[int]) -> LagTable:
    """Depletion impact as a function of the horizon, for sensitivity reports."""
    horizons = list(horizons)
    rows = []
    for h in horizons:
        moves, days, _ = _depletion_moves(depletions, frames, h)
        rows.append(summarize(moves, days))
    return _table("depletion_impact", horizons, rows)


@dataclass(frozen=True)
class ImpliedSpread:
    implied: float
    realized: float
    ratio: float


def implied_spread_check(C: LagTable, R: LagTable, frames: Frames) -> ImpliedSpread:
    """2R(1)/(1 - C(1)) against the mean pre-trade spread."""
    c1 = C.at(1)
    if 1.0 - c1 < DEGENERATE_EPS:
        raise DegenerateAutocorrelation(f"C(1) = {c1}")
    implied = 2.0 * R.at(1) / (1.0 - c1)
    if frames.n == 0:
        raise InsufficientData("no frames")
    realized = summarize(frames.spread * frames.price_unit, frames.day).value
    return ImpliedSpread(implied, realized, implied / realized if realized else math.nan)
