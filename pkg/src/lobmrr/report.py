"""Per-ticker summary tables and the writers shared by every CLI artifact.

Tables are long-format rows ``ticker, statistic, value, se`` with values in
dollars (or dimensionless). Statistics that cannot be computed on the given
data are reported with empty value and se rather than dropped.
"""

from __future__ import annotations

import io
import json
import math
import warnings
from typing import Any, Callable, Iterable, Mapping

from .book import classify_tick_regime, depletions_from_frames
from .errors import DegenerateAutocorrelation, InsufficientData, PlateauWarning
from .frames import Frames
from .proxy import ProxyVariant, compute_proxy, news_trade_covariance, return_correlation
from .stats import (
    depletion_impact,
    impact_by_imbalance,
    implied_spread_check,
    mrr_relation_test,
    response_function,
    sign_autocorrelation,
    summarize,
)

TABLE_COLUMNS = ("ticker", "statistic", "value", "se")
TABLE_NAMES = ("table1", "table2", "table3", "table4")


def _clean(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _row(ticker: str, statistic: str, value: float | None, se: float | None) -> dict:
    return {"ticker": ticker, "statistic": statistic,
            "value": _clean(None if value is None else float(value)),
            "se": _clean(None if se is None else float(se))}


def _guard(rows: list, ticker: str, names: Iterable[str], fn: Callable[[], Iterable[tuple]]) -> None:
    try:
        rows.extend(_row(ticker, *item) for item in fn())
    except (InsufficientData, DegenerateAutocorrelation):
        rows.extend(_row(ticker, name, None, None) for name in names)


def ticker_tables(ticker: str, frames: Frames, lags: Iterable[int] = (1, 2, 5, 10, 20),
                  horizon: int = 50, bins: int = 10, depletions=None) -> dict[str, list[dict]]:
    lags = sorted(set(lags) | {1})
    L = max(max(lags), 1)
    out: dict[str, list[dict]] = {name: [] for name in TABLE_NAMES}

    def table1():
        C = sign_autocorrelation(frames, L)
        R = response_function(frames, L)
        yield ("R(1)", *R[1][:2])
        for row in mrr_relation_test(C, R, lags):
            if row.lag > 1:
                yield (f"R({row.lag})(1-C(1))/(1-C({row.lag}))", row.rescaled, row.se)
    names1 = ["R(1)"] + [f"R({l})(1-C(1))/(1-C({l}))" for l in lags if l > 1]
    _guard(out["table1"], ticker, names1, lambda: list(table1()))

    deps = depletions_from_frames(frames) if depletions is None else depletions

    def table2_depletion():
        di = depletion_impact(deps, frames, horizon)
        yield ("depletion_impact", di.value, di.se)
    _guard(out["table2"], ticker, ["depletion_impact"], lambda: list(table2_depletion()))

    def table2_imbalance():
        grid = impact_by_imbalance(frames, [horizon], bins)
        yield ("imbalance_impact_top_bin", grid.value[-1, 0], grid.se[-1, 0])
    _guard(out["table2"], ticker, ["imbalance_impact_top_bin"], lambda: list(table2_imbalance()))

    for variant in (ProxyVariant.SQUARED, ProxyVariant.LINEAR, ProxyVariant.VWAP, ProxyVariant.MID):
        name = f"corr_{variant.value}(1)"

        def table3(variant=variant, name=name):
            corr = return_correlation(compute_proxy(frames, variant), 1)
            yield (name, *corr[1][:2])
        _guard(out["table3"], ticker, [name], lambda: list(table3()))

    def table4():
        yield ("mean_price", *summarize(frames.mid_usd, frames.day)[:2])
        yield ("mean_spread", *summarize(frames.spread * frames.price_unit, frames.day)[:2])
        C = sign_autocorrelation(frames, 1)
        yield ("C(1)", *C[1][:2])
        news = news_trade_covariance(frames, compute_proxy(frames, ProxyVariant.SQUARED))
        yield ("news_covariance", news.value, news.se)
        yield ("implied_spread", implied_spread_check(C, response_function(frames, 1), frames).implied, None)
    _guard(out["table4"], ticker, ["mean_price", "mean_spread", "C(1)", "news_covariance",
                                    "implied_spread"], lambda: list(table4()))
    return out


def build_report(named: Mapping[str, Frames], lags: Iterable[int] = (1, 2, 5, 10, 20),
                 horizon: int = 50, bins: int = 10) -> dict[str, Any]:
    tables: dict[str, list[dict]] = {name: [] for name in TABLE_NAMES}
    regimes = {}
    lags = list(lags)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PlateauWarning)
        for ticker in sorted(named):
            frames = named[ticker]
            for name, rows in ticker_tables(ticker, frames, lags, horizon, bins).items():
                tables[name].extend(rows)
            if frames.n:
                regime, spread = classify_tick_regime(frames)
                regimes[ticker] = {"regime": regime.value, "mean_spread": spread}
    return {"tables": tables, "regimes": regimes, "horizon": horizon, "bins": bins,
            "units": "dollars"}


# -------------------------------------------------------------- serialization

def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    if isinstance(v, bool):
        return str(int(v))
    return str(v)


def rows_to_csv(rows: list[dict], columns: Iterable[str], header: dict | None = None) -> str:
    columns = list(columns)
    buf = io.StringIO()
    if header is not None:
        buf.write("# " + json.dumps(header, sort_keys=True, default=str) + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")
    return buf.getvalue()


def _json_safe(obj: Any) -> Any:
    if isinstance(obj, float):
        return _clean(obj)
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if hasattr(obj, "item"):
        return _json_safe(obj.item())
    return obj


def to_json(doc: Any) -> str:
    return json.dumps(_json_safe(doc), sort_keys=True, allow_nan=False) + "\n"
