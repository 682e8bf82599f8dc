"""Columnar transaction-time frames and their CSV/JSON interchange format.

A frame ``t`` is the book just before the ``t``-th trade. Prices are stored
as float64 in units of ``price_unit`` dollars (1e-4 for LOBSTER data), so real
data round-trips as exact integers while simulated quotes may be fractional.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InputError

FORMAT_TAG = "lobmrr-frames/1"

BASE_COLUMNS = ("t", "wall_time", "eps", "bid", "ask", "mid", "vbid", "vask",
                "imb", "size", "depleted", "segment", "day")
EXTRA_COLUMNS = ("p", "eps_hat", "news")


@dataclass
class Frames:
    eps: np.ndarray
    bid: np.ndarray
    ask: np.ndarray
    vbid: np.ndarray
    vask: np.ndarray
    size: np.ndarray
    depleted: np.ndarray
    wall_time: np.ndarray
    segment: np.ndarray
    day: np.ndarray
    tick_size: float = 0.01
    rebate: float = 0.003
    price_unit: float = 1e-4
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.eps = np.asarray(self.eps, dtype=np.int8)
        self.bid = np.asarray(self.bid, dtype=np.float64)
        self.ask = np.asarray(self.ask, dtype=np.float64)
        self.vbid = np.asarray(self.vbid, dtype=np.int64)
        self.vask = np.asarray(self.vask, dtype=np.int64)
        self.size = np.asarray(self.size, dtype=np.int64)
        self.depleted = np.asarray(self.depleted, dtype=bool)
        self.wall_time = np.asarray(self.wall_time, dtype=np.float64)
        self.segment = np.asarray(self.segment, dtype=np.int64)
        self.day = np.asarray(self.day, dtype=np.int64)
        self.extra = {k: np.asarray(v, dtype=np.float64) for k, v in self.extra.items()}
        n = len(self.eps)
        for name in ("bid", "ask", "vbid", "vask", "size", "depleted", "wall_time", "segment", "day"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        for k, v in self.extra.items():
            if len(v) != n:
                raise ValueError(f"extra column {k} has wrong length")

    @classmethod
    def build(cls, eps, bid, ask, vbid, vask, *, size=None, depleted=None, wall_time=None,
              segment=None, day=None, **kw) -> "Frames":
        """Convenience constructor filling bookkeeping columns with defaults."""
        n = len(eps)
        return cls(
            eps=eps, bid=bid, ask=ask, vbid=vbid, vask=vask,
            size=np.ones(n, dtype=np.int64) if size is None else size,
            depleted=np.zeros(n, dtype=bool) if depleted is None else depleted,
            wall_time=np.arange(n, dtype=np.float64) if wall_time is None else wall_time,
            segment=np.zeros(n, dtype=np.int64) if segment is None else segment,
            day=np.zeros(n, dtype=np.int64) if day is None else day,
            **kw,
        )

    def __len__(self) -> int:
        return len(self.eps)

    @property
    def n(self) -> int:
        return len(self.eps)

    @property
    def mid(self) -> np.ndarray:
        return (self.bid + self.ask) / 2

    @property
    def spread(self) -> np.ndarray:
        return self.ask - self.bid

    @property
    def imbalance(self) -> np.ndarray:
        vb = self.vbid.astype(np.float64)
        va = self.vask.astype(np.float64)
        return (vb - va) / (vb + va)

    def dollars(self, values: np.ndarray) -> np.ndarray:
        return values * self.price_unit

    @property
    def mid_usd(self) -> np.ndarray:
        return self.mid * self.price_unit

    @property
    def bid_usd(self) -> np.ndarray:
        return self.bid * self.price_unit

    @property
    def ask_usd(self) -> np.ndarray:
        return self.ask * self.price_unit

    def select(self, idx) -> "Frames":
        return Frames(
            eps=self.eps[idx], bid=self.bid[idx], ask=self.ask[idx], vbid=self.vbid[idx],
            vask=self.vask[idx], size=self.size[idx], depleted=self.depleted[idx],
            wall_time=self.wall_time[idx], segment=self.segment[idx], day=self.day[idx],
            tick_size=self.tick_size, rebate=self.rebate, price_unit=self.price_unit,
            extra={k: v[idx] for k, v in self.extra.items()}, meta=dict(self.meta),
        )

    def header(self) -> dict[str, Any]:
        return {"format": FORMAT_TAG, "tick_size": self.tick_size, "rebate": self.rebate,
                "price_unit": self.price_unit, "n": self.n, "meta": self.meta}


def concat(parts: Sequence[Frames]) -> Frames:
    """Stack frames from several instrument-days.

    Each part becomes its own day and segment ids are renumbered so that no
    two parts share a segment.
    """
    if not parts:
        raise ValueError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if (p.tick_size, p.rebate, p.price_unit) != (first.tick_size, first.rebate, first.price_unit):
            raise InputError("cannot concatenate frames with different market configurations")
    segs, days = [], []
    offset = 0
    for d, p in enumerate(parts):
        if p.n:
            _, seg = np.unique(p.segment, return_inverse=True)
            segs.append(seg.astype(np.int64) + offset)
            offset += int(seg.max()) + 1
        else:
            segs.append(np.zeros(0, dtype=np.int64))
        days.append(np.full(p.n, d, dtype=np.int64))
    keys = set(first.extra)
    extra = {k: np.concatenate([p.extra[k] for p in parts]) for k in keys
             if all(k in p.extra for p in parts)}
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts])  # noqa: E731
    return Frames(
        eps=cat("eps"), bid=cat("bid"), ask=cat("ask"), vbid=cat("vbid"), vask=cat("vask"),
        size=cat("size"), depleted=cat("depleted"), wall_time=cat("wall_time"),
        segment=np.concatenate(segs), day=np.concatenate(days),
        tick_size=first.tick_size, rebate=first.rebate, price_unit=first.price_unit,
        extra=extra, meta={"parts": [p.meta for p in parts]},
    )


# ---------------------------------------------------------------- text formats

def _fmt_float_column(values: np.ndarray) -> list[str]:
    # integral prices print as integers so LOBSTER ticks stay exact
    if values.size and np.all(np.isfinite(values)) and np.all(values == np.rint(values)) \
            and np.max(np.abs(values)) < 2**53:
        return [str(v) for v in values.astype(np.int64).tolist()]
    return [repr(v) for v in values.tolist()]


def to_csv(frames: Frames, provenance: dict[str, Any] | None = None) -> str:
    header = frames.header()
    if provenance is not None:
        header["provenance"] = provenance
    cols = list(BASE_COLUMNS) + [c for c in EXTRA_COLUMNS if c in frames.extra]
    data = [
        [str(i) for i in range(frames.n)],
        [repr(v) for v in frames.wall_time.tolist()],
        [str(v) for v in frames.eps.tolist()],
        _fmt_float_column(frames.bid),
        _fmt_float_column(frames.ask),
        _fmt_float_column(frames.mid),
        [str(v) for v in frames.vbid.tolist()],
        [str(v) for v in frames.vask.tolist()],
        [repr(v) for v in frames.imbalance.tolist()],
        [str(v) for v in frames.size.tolist()],
        [str(int(v)) for v in frames.depleted.tolist()],
        [str(v) for v in frames.segment.tolist()],
        [str(v) for v in frames.day.tolist()],
    ]
    data += [[repr(v) for v in frames.extra[c].tolist()] for c in EXTRA_COLUMNS if c in frames.extra]
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write(",".join(cols) + "\n")
    buf.writelines(",".join(row) + "\n" for row in zip(*data))
    return buf.getvalue()


def _from_columns(header: dict[str, Any], columns: dict[str, np.ndarray]) -> Frames:
    missing = [c for c in BASE_COLUMNS if c not in columns and c not in ("segment", "day")]
    if missing:
        raise InputError(f"frame file lacks columns {missing}")
    n = len(columns["eps"])
    return Frames(
        eps=columns["eps"], bid=columns["bid"], ask=columns["ask"],
        vbid=columns["vbid"], vask=columns["vask"], size=columns["size"],
        depleted=columns["depleted"], wall_time=columns["wall_time"],
        segment=columns.get("segment", np.zeros(n)), day=columns.get("day", np.zeros(n)),
        tick_size=float(header.get("tick_size", 0.01)), rebate=float(header.get("rebate", 0.003)),
        price_unit=float(header.get("price_unit", 1e-4)),
        extra={c: columns[c] for c in EXTRA_COLUMNS if c in columns},
        meta=header.get("meta", {}),
    )


def from_csv(text: str) -> Frames:
    lines = text.splitlines()
    header: dict[str, Any] = {}
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        try:
            header = json.loads(lines[i][1:])
        except json.JSONDecodeError:
            pass
        i += 1
    if i >= len(lines):
        raise InputError("frame file has no column header")
    names = lines[i].strip().split(",")
    body = lines[i + 1:]
    if body:
        arr = np.loadtxt(body, delimiter=",", dtype=np.float64, ndmin=2)
        if arr.shape[1] != len(names):
            raise InputError("frame file column count mismatch")
    else:
        arr = np.zeros((0, len(names)))
    columns = {name: arr[:, j] for j, name in enumerate(names)}
    return _from_columns(header, columns)


def to_json(frames: Frames, provenance: dict[str, Any] | None = None) -> str:
    header = frames.header()
    if provenance is not None:
        header["provenance"] = provenance
    cols: dict[str, list] = {
        "t": list(range(frames.n)),
        "wall_time": frames.wall_time.tolist(),
        "eps": frames.eps.tolist(),
        "bid": frames.bid.tolist(),
        "ask": frames.ask.tolist(),
        "mid": frames.mid.tolist(),
        "vbid": frames.vbid.tolist(),
        "vask": frames.vask.tolist(),
        "imb": frames.imbalance.tolist(),
        "size": frames.size.tolist(),
        "depleted": [int(v) for v in frames.depleted.tolist()],
        "segment": frames.segment.tolist(),
        "day": frames.day.tolist(),
    }
    for c in EXTRA_COLUMNS:
        if c in frames.extra:
            cols[c] = frames.extra[c].tolist()
    return json.dumps({"header": header, "columns": cols}, sort_keys=True) + "\n"


def from_json(text: str) -> Frames:
    doc = json.loads(text)
    columns = {k: np.asarray(v, dtype=np.float64) for k, v in doc["columns"].items()}
    return _from_columns(doc.get("header", {}), columns)


def read_frames(path: str | os.PathLike) -> Frames:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return from_json(text)
    return from_csv(text)


def write_frames(frames: Frames, path: str | os.PathLike, fmt: str = "csv",
                 provenance: dict[str, Any] | None = None) -> None:
    text = to_json(frames, provenance) if fmt == "json" else to_csv(frames, provenance)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def iter_days(frames: Frames) -> Iterable[tuple[int, Frames]]:
    for d in np.unique(frames.day):
        yield int(d), frames.select(frames.day == d)
