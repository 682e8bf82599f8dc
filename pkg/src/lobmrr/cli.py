"""Command-line front end.

Subcommands share one frame file format, so real and simulated data run
through the same estimators::

    lobmrr simulate --mode discrete --rho 0.5 --steps 1000000 --seed 7 --out sim.csv
    lobmrr stats --frames sim.csv --lags 20 --out-dir stats/
    lobmrr proxy --frames sim.csv --variant squared --out-dir proxy/
    lobmrr ingest --messages MSG.csv --orderbook OB.csv --levels 10 --out day.csv
    lobmrr report --frames day.csv --out-dir report/

Settings resolve as command-line flag, then ``--config`` JSON file, then
built-in defaults. Relative input paths that do not exist are looked up
under ``$LOBMRR_DATA_ROOT``. Every artifact starts with a provenance header
holding the resolved configuration and the SHA-256 of each input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .book import MarketConfig, classify_tick_regime, depletions_from_frames, replay
from .book import DepletionEvent
from .errors import (
    DegenerateAutocorrelation,
    InputError,
    InsufficientData,
    LobMrrError,
    PlateauWarning,
    ReconciliationFailure,
)
from .frames import Frames, concat, read_frames, write_frames
from .lobster import SessionWindow, parse_message_file, parse_snapshot_file
from .proxy import (
    compute_proxy,
    imbalance_information_capture,
    news_trade_covariance,
    proxy_response,
    return_correlation,
    signature_plot,
)
from .report import TABLE_COLUMNS, build_report, rows_to_csv, to_json
from .simulator import MrrParams, SignProcessSpec, simulate
from .stats import (
    covariance_identity_test,
    depletion_impact,
    depletion_impact_profile,
    estimate_G,
    impact_by_imbalance,
    implied_spread_check,
    midprice_return_covariance,
    mrr_relation_test,
    response_function,
    shifted_response,
    sign_autocorrelation,
)

DATA_ROOT_ENV = "LOBMRR_DATA_ROOT"

EXIT_OK, EXIT_INPUT, EXIT_RECONCILE, EXIT_INSUFFICIENT = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "tick": 0.01,
    "rebate": 0.003,
    "levels": 10,
    "session_start": 37800.0,
    "session_end": 54000.0,
    "lags": 20,
    "bins": 10,
    "horizon": 50,
    "format": "csv",
    "seed": 0,
    "max_mismatch": 0.0,
    "jobs": 1,
    "seed_book": False,
    "variant": "squared",
    "mode": "discrete",
    "sign": "markov",
    "rho": 0.5,
    "weights": "",
    "G": None,  # discrete: equal to the rebate; continuous: 1.0
    "wsigma": 0.003,
    "coupling": 0.0,
    "steps": 100_000,
    "p0": 100.005,
    "volume_noise": 0.1,
    "volume_scale": 1000.0,
    "report_lags": "1,2,5,10,20",
}


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    market: MarketConfig
    lags: int
    bins: int
    horizon: int
    session: SessionWindow
    fmt: str
    seed: int
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.lags < 1:
            raise InputError("--lags must be >= 1")
        if self.bins < 1:
            raise InputError("--bins must be >= 1")
        if self.horizon < 1:
            raise InputError("--horizon must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise InputError("--format must be csv or json")
        for path in self.inputs:
            if not Path(path).is_file():
                raise InputError(f"input file not found: {path}")

    def describe(self) -> dict[str, Any]:
        return {"command": self.command, "inputs": self.inputs, "market": asdict(self.market),
                "lags": self.lags, "bins": self.bins, "horizon": self.horizon,
                "session": asdict(self.session), "format": self.fmt, "seed": self.seed,
                "options": self.options}


# ---------------------------------------------------------------- arguments

def _add_market(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tick", type=float, help="tick size in dollars (default 0.01)")
    p.add_argument("--rebate", type=float, help="rebate in dollars per share (default 0.003)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lobmrr", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"lobmrr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="rebuild books from LOBSTER files and export frames")
    _add_common(p)
    _add_market(p)
    p.add_argument("--messages", nargs="+", required=True, help="message files, one per day")
    p.add_argument("--orderbook", nargs="*", default=[], help="aligned order-book files")
    p.add_argument("--levels", type=int, help="levels in the order-book files (default 10)")
    p.add_argument("--session-start", type=float, help="seconds after midnight (default 37800)")
    p.add_argument("--session-end", type=float, help="seconds after midnight (default 54000)")
    p.add_argument("--seed-book", action="store_true", default=None,
                   help="start from the first order-book row instead of an empty book")
    p.add_argument("--max-mismatch", type=float,
                   help="tolerated fraction of unreconciled events (default 0)")
    p.add_argument("--jobs", type=int, help="parallel worker processes across days")
    p.add_argument("--out", required=True, help="frame file to write")
    p.add_argument("--depletions-out", help="optional depletion event file")

    p = sub.add_parser("stats", help="sign correlation, response and model tests")
    _add_common(p)
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--depletions", nargs="*", default=[], help="depletion files aligned with --frames")
    p.add_argument("--lags", type=int)
    p.add_argument("--horizon", type=int, help="lag used as infinity (default 50)")
    p.add_argument("--bins", type=int)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("proxy", help="fundamental-price proxy and its diagnostics")
    _add_common(p)
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--variant", choices=("squared", "linear", "vwap", "mid"))
    p.add_argument("--rebate", type=float, help="override the rebate stored with the frames")
    p.add_argument("--lags", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("simulate", help="simulate a model path as frames")
    _add_common(p)
    _add_market(p)
    p.add_argument("--mode", choices=("continuous", "discrete"))
    p.add_argument("--sign", choices=("iid", "markov", "linear"))
    p.add_argument("--rho", type=float)
    p.add_argument("--weights", help="comma-separated linear predictor weights")
    p.add_argument("--G", type=float, help="impact in dollars")
    p.add_argument("--wsigma", type=float, help="news standard deviation in dollars")
    p.add_argument("--coupling", type=float, help="probability a trade copies the last news sign")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p0", type=float)
    p.add_argument("--volume-noise", type=float)
    p.add_argument("--volume-scale", type=float)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="per-ticker summary tables")
    _add_common(p)
    p.add_argument("--frames", nargs="+", required=True)
    p.add_argument("--tickers", nargs="*", default=[], help="names for the frame files")
    p.add_argument("--report-lags", help="comma-separated lags for table1 (default 1,2,5,10,20)")
    p.add_argument("--horizon", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--out-dir", required=True)
    return parser


def _resolve(path: str) -> str:
    if Path(path).exists() or Path(path).is_absolute():
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    if root and (Path(root) / path).exists():
        return str(Path(root) / path)
    return path


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(_resolve(args.config), encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        section = loaded.get(args.command, {})
        merged.update({k.replace("-", "_"): v for k, v in loaded.items() if not isinstance(v, dict)})
        merged.update({k.replace("-", "_"): v for k, v in section.items()})
    flags = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    merged.update(flags)
    explicit = set(flags) | (set(loaded) | set(section) if getattr(args, "config", None) else set())
    merged["rebate_override"] = merged["rebate"] if "rebate" in explicit else None
    return merged


def make_config(args: argparse.Namespace) -> RunConfig:
    s = _settings(args)
    inputs: list[str] = []
    for key in ("messages", "orderbook", "frames", "depletions"):
        if s.get(key):
            s[key] = [_resolve(p) for p in s[key]]
            inputs += s[key]
    try:
        market = MarketConfig(tick_size=float(s["tick"]), rebate=float(s["rebate"]),
                              levels_tracked=int(s["levels"]))
        session = SessionWindow(float(s["session_start"]), float(s["session_end"]))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    keep = ("messages", "orderbook", "frames", "depletions", "tickers", "out", "out_dir",
            "depletions_out", "max_mismatch", "jobs", "seed_book", "variant", "mode", "sign",
            "rho", "weights", "G", "wsigma", "coupling", "steps", "p0", "volume_noise",
            "volume_scale", "report_lags", "rebate_override")
    options = {k: s[k] for k in keep if k in s}
    return RunConfig(command=args.command, inputs=inputs, market=market, lags=int(s["lags"]),
                     bins=int(s["bins"]), horizon=int(s["horizon"]), session=session,
                     fmt=s["format"], seed=int(s["seed"]), options=options)


# ---------------------------------------------------------------- artifacts

def sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def provenance(cfg: RunConfig) -> dict[str, Any]:
    return {"tool": "lobmrr", "version": __version__, "config": cfg.describe(),
            "inputs": {p: sha256(p) for p in cfg.inputs}}


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit(out_dir: Path, name: str, rows: list[dict], columns: Sequence[str], cfg: RunConfig,
          prov: dict) -> None:
    if cfg.fmt == "json":
        _write(out_dir / f"{name}.json", to_json({"provenance": prov, "name": name, "rows": rows}))
    else:
        _write(out_dir / f"{name}.csv", rows_to_csv(rows, columns, prov))


def _emit_doc(out_dir: Path, name: str, doc: dict, prov: dict) -> None:
    _write(out_dir / f"{name}.json", to_json({"provenance": prov, "name": name, "result": doc}))


LAG_COLUMNS = ("lag", "value", "se", "n")
DEPLETION_COLUMNS = ("frame_index", "event_index", "side", "cause", "pre_mid", "post_mid",
                     "removed", "time_s", "segment")


def write_depletions(path: Path, deps: Sequence[DepletionEvent], prov: dict | None) -> None:
    rows = [asdict(d) for d in deps]
    _write(path, rows_to_csv(rows, DEPLETION_COLUMNS, prov))


def read_depletions(path: str) -> list[DepletionEvent]:
    out = []
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    if not lines:
        return out
    names = lines[0].split(",")
    for ln in lines[1:]:
        rec = dict(zip(names, ln.split(",")))
        out.append(DepletionEvent(
            int(rec["frame_index"]), int(rec["event_index"]), rec["side"], rec["cause"],
            float(rec["pre_mid"]), float(rec["post_mid"] or "nan"), int(rec["removed"]),
            float(rec["time_s"]), int(rec["segment"])))
    return out


# ----------------------------------------------------------------- commands

def _ingest_day(messages: str, orderbook: str | None, market: MarketConfig,
                session: SessionWindow, seed_book: bool):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        events = parse_message_file(messages)
    snaps = parse_snapshot_file(orderbook, market.levels_tracked) if orderbook else None
    return replay(events, market, session, snaps, seed_from_first_snapshot=seed_book)


def cmd_ingest(cfg: RunConfig) -> int:
    o = cfg.options
    msgs, books = o["messages"], o.get("orderbook") or []
    if books and len(books) != len(msgs):
        raise InputError("--orderbook must list one file per --messages file")
    if o.get("seed_book") and not books:
        raise InputError("--seed-book needs --orderbook files")
    pairs = sorted(zip(msgs, books or [None] * len(msgs)), key=lambda mb: Path(mb[0]).name)
    job = [(m, b, cfg.market, cfg.session, bool(o.get("seed_book"))) for m, b in pairs]
    if int(o.get("jobs", 1)) > 1 and len(job) > 1:
        with ProcessPoolExecutor(max_workers=int(o["jobs"])) as pool:
            results = list(pool.map(_ingest_day, *zip(*job)))
    else:
        results = [_ingest_day(*j) for j in job]

    prov = provenance(cfg)
    frames = concat([r.frames for r in results]) if len(results) > 1 else results[0].frames
    frames.meta = {"source": "ingest", "days": [Path(m).name for m, _ in pairs],
                   "flags": [dict(sorted(r.flags.items())) for r in results]}
    write_frames(frames, o["out"], cfg.fmt, prov)
    if o.get("depletions_out"):
        offset, deps = 0, []
        for r in results:
            deps += _rebase(r.depletions, offset, frames)
            offset += r.frames.n
        write_depletions(Path(o["depletions_out"]), deps, prov)

    if books:
        checked = sum(r.reconcile_checked for r in results)
        failed = sum(r.reconcile_failures for r in results)
        if checked and failed / checked > float(o.get("max_mismatch", 0.0)):
            first = next(r.first_failure for r in results if r.first_failure)
            raise ReconciliationFailure(
                f"{failed} of {checked} events failed reconciliation; first at event "
                f"{first[0]}: {first[1].diffs[:3]}")
    return EXIT_OK


def _load_frames(paths: Sequence[str]) -> Frames:
    parts = [read_frames(p) for p in paths]
    return parts[0] if len(parts) == 1 else concat(parts)


def _rebase(deps: Sequence[DepletionEvent], offset: int, frames: Frames) -> list[DepletionEvent]:
    """Shift depletion frame indices into a concatenated frame set."""
    out = []
    for d in deps:
        k = d.frame_index + offset
        seg = int(frames.segment[k]) if k < frames.n else -1
        out.append(DepletionEvent(k, d.event_index, d.side, d.cause, d.pre_mid, d.post_mid,
                                  d.removed, d.time_s, seg))
    return out


def _load_depletions(cfg: RunConfig, frames_paths: Sequence[str], frames: Frames):
    files = cfg.options.get("depletions") or []
    if not files:
        return depletions_from_frames(frames)
    if len(files) != len(frames_paths):
        raise InputError("--depletions must list one file per --frames file")
    deps, offset = [], 0
    for fp, dp in zip(frames_paths, files):
        deps += _rebase(read_depletions(dp), offset, frames)
        offset += read_frames(fp).n
    return deps


def cmd_stats(cfg: RunConfig) -> int:
    o = cfg.options
    frames = _load_frames(o["frames"])
    out = Path(o["out_dir"])
    prov = provenance(cfg)
    L, H = cfg.lags, cfg.horizon
    Lmax = max(L, H)
    C = sign_autocorrelation(frames, Lmax)
    R = response_function(frames, Lmax)
    _emit(out, "sign_autocorrelation", C.records(), LAG_COLUMNS, cfg, prov)
    _emit(out, "response", R.records(), LAG_COLUMNS, cfg, prov)
    for k in range(1, 7):
        _emit(out, f"shifted_response_k{k}", shifted_response(frames, k, L).records(),
              LAG_COLUMNS, cfg, prov)
    rows = [asdict(r) for r in mrr_relation_test(C, R, range(1, L + 1))]
    _emit(out, "mrr_relation", rows, ("lag", "rescaled", "se", "ratio"), cfg, prov)
    _emit(out, "midprice_return_covariance", midprice_return_covariance(frames, L).records(),
          LAG_COLUMNS, cfg, prov)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PlateauWarning)
        G = estimate_G(C, R, H)
    _emit_doc(out, "G_estimate", {"G_hat": G.G_hat, "method": G.method, "lag_star": G.lag_star,
                                  "relative_range": G.relative_range, "flat": G.flat,
                                  "per_lag": G.per_lag,
                                  "warnings": [str(w.message) for w in caught]}, prov)
    rows = [asdict(r) for r in covariance_identity_test(frames, 5, H, G)]
    _emit(out, "covariance_identity", rows, ("lag", "lhs", "rhs", "gap"), cfg, prov)
    grid = impact_by_imbalance(frames, range(1, L + 1), cfg.bins)
    _emit(out, "imbalance_impact", grid.records(),
          ("bin_lo", "bin_hi", "lag", "value", "se", "n"), cfg, prov)

    deps = _load_depletions(cfg, o["frames"], frames)
    try:
        di = depletion_impact(deps, frames, H)
        dep_doc = {"value": di.value, "se": di.se, "n": di.n, "horizon": H,
                   "by_cause": {k: v._asdict() for k, v in di.by_cause.items()}}
        horizons = sorted({1, 5, 10, 20, 30, 40, H})
        profile = depletion_impact_profile(deps, frames, horizons).records()
    except InsufficientData as exc:
        dep_doc, profile = {"value": None, "se": None, "n": 0, "horizon": H, "note": str(exc)}, []
    _emit_doc(out, "depletion_impact", dep_doc, prov)
    _emit(out, "depletion_impact_profile", profile, LAG_COLUMNS, cfg, prov)

    imp = implied_spread_check(C, R, frames)
    _emit_doc(out, "implied_spread", asdict(imp), prov)
    regime, spread = classify_tick_regime(frames)
    _emit_doc(out, "tick_regime", {"regime": regime.value, "mean_spread": spread}, prov)
    return EXIT_OK


def cmd_proxy(cfg: RunConfig) -> int:
    o = cfg.options
    frames = _load_frames(o["frames"])
    out = Path(o["out_dir"])
    prov = provenance(cfg)
    px = compute_proxy(frames, o["variant"], o.get("rebate_override"))
    series = [{"t": i, "value": v, "segment": s, "day": d} for i, (v, s, d) in
              enumerate(zip(px.values.tolist(), frames.segment.tolist(), frames.day.tolist()))]
    _emit(out, "proxy_series", series, ("t", "value", "segment", "day"), cfg, prov)
    L, H = cfg.lags, cfg.horizon
    _emit(out, "proxy_response", proxy_response(frames, px, max(L, H)).records(), LAG_COLUMNS, cfg, prov)
    _emit(out, "return_correlation", return_correlation(px, L).records(), LAG_COLUMNS, cfg, prov)
    _emit(out, "signature_plot", signature_plot(px, range(1, max(L, H) + 1)).records(),
          LAG_COLUMNS, cfg, prov)
    cap = imbalance_information_capture(frames, px, H, cfg.bins)
    rows = [{"bin": int(b), "capture": float(c), "n": int(n)}
            for b, c, n in zip(cap.bins, cap.capture, cap.n)]
    _emit(out, "imbalance_capture", rows, ("bin", "capture", "n"), cfg, prov)
    news = news_trade_covariance(frames, px)
    _emit_doc(out, "news_covariance", {**asdict(news), "capture_aggregate": cap.aggregate,
                                       "capture_lag": cap.lag, "units": "dollars"}, prov)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    o = cfg.options
    mode = o["mode"]
    G = o.get("G")
    if G is None:
        G = cfg.market.rebate if mode == "discrete" else 1.0
    weights = tuple(float(w) for w in str(o.get("weights") or "").split(",") if w.strip())
    try:
        spec = SignProcessSpec(o["sign"], float(o["rho"]) if o["sign"] == "markov" else 0.0,
                               weights, cfg.seed)
        params = MrrParams(G=float(G), W_sigma=float(o["wsigma"]), W_coupling=float(o["coupling"]),
                           tau=cfg.market.tick_size, r=cfg.market.rebate, p_0=float(o["p0"]),
                           n_steps=int(o["steps"]), volume_noise=float(o["volume_noise"]),
                           volume_scale=float(o["volume_scale"]))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    path = simulate(mode, params, spec)
    write_frames(path.to_frames(), o["out"], cfg.fmt, provenance(cfg))
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    o = cfg.options
    paths = o["frames"]
    names = list(o.get("tickers") or [])
    if names and len(names) != len(paths):
        raise InputError("--tickers must name every --frames file")
    if not names:
        names = [Path(p).stem for p in paths]
    grouped: dict[str, list[str]] = {}
    for name, p in zip(names, paths):
        grouped.setdefault(name, []).append(p)
    named = {name: _load_frames(sorted(ps)) for name, ps in grouped.items()}
    lags = [int(x) for x in str(o["report_lags"]).split(",") if x.strip()]
    rep = build_report(named, lags, cfg.horizon, cfg.bins)
    out = Path(o["out_dir"])
    prov = provenance(cfg)
    for name, rows in rep["tables"].items():
        _emit(out, name, rows, TABLE_COLUMNS, cfg, prov)
    _emit_doc(out, "summary", {"regimes": rep["regimes"], "horizon": rep["horizon"],
                               "bins": rep["bins"], "units": rep["units"]}, prov)
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "stats": cmd_stats, "proxy": cmd_proxy,
            "simulate": cmd_simulate, "report": cmd_report}


def run(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which is reserved here
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return run(make_config(args))
    except ReconciliationFailure as exc:
        print(f"lobmrr: reconciliation failure: {exc}", file=sys.stderr)
        return EXIT_RECONCILE
    except (InsufficientData, DegenerateAutocorrelation) as exc:
        print(f"lobmrr: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (InputError, OSError) as exc:
        print(f"lobmrr: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LobMrrError as exc:
        print(f"lobmrr: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
