"""LOBSTER message and order-book file parsing.

Message rows are ``time,type,order_id,size,price,direction`` with prices in
integer units of 1e-4 dollars. Order-book rows hold ``4K`` columns laid out as
``ask_price_1, ask_size_1, bid_price_1, bid_size_1, ask_price_2, ...``.
"""

from __future__ import annotations

import io
import os
import warnings
from dataclasses import dataclass
from enum import IntEnum
from typing import BinaryIO, Iterable, Iterator, NamedTuple, Sequence, TextIO, Union

from .errors import (
    ColumnCountMismatch,
    MalformedRow,
    NegativeSize,
    NonMonotoneTime,
    NonMonotoneTimeWarning,
    UnknownEventType,
)

PRICE_UNIT = 1e-4
EMPTY_PRICE = 9999999999  # LOBSTER writes +/- this value for an empty level

Source = Union[str, os.PathLike, bytes, BinaryIO, TextIO]


class EventType(IntEnum):
    SUBMISSION = 1
    PARTIAL_CANCEL = 2
    DELETION = 3
    EXEC_VISIBLE = 4
    EXEC_HIDDEN = 5
    CROSS = 6
    HALT = 7


class Direction(IntEnum):
    BUY = 1
    SELL = -1


_TYPES = {int(t): t for t in EventType}
_DIRS = {1: Direction.BUY, -1: Direction.SELL}


class LobEvent(NamedTuple):
    time_s: float
    event_type: EventType
    order_id: int
    size: int
    price_ticks: int
    direction: int

    @property
    def is_visible(self) -> bool:
        return self.event_type <= EventType.EXEC_VISIBLE

    def to_row(self) -> str:
        return (f"{self.time_s!r},{int(self.event_type)},{self.order_id},"
                f"{self.size},{self.price_ticks},{int(self.direction)}")


@dataclass(frozen=True)
class BookSnapshot:
    """One order-book row. Empty levels are ``None`` prices with size 0."""

    ask_prices: tuple[int | None, ...]
    ask_sizes: tuple[int, ...]
    bid_prices: tuple[int | None, ...]
    bid_sizes: tuple[int, ...]

    @property
    def levels(self) -> int:
        return len(self.ask_prices)

    def is_consistent(self) -> bool:
        asks = [p for p in self.ask_prices if p is not None]
        bids = [p for p in self.bid_prices if p is not None]
        if any(x >= y for x, y in zip(asks, asks[1:])):
            return False
        if any(x <= y for x, y in zip(bids, bids[1:])):
            return False
        return not (asks and bids and asks[0] <= bids[0])

    def to_row(self) -> str:
        cols: list[int] = []
        for k in range(self.levels):
            ap, bp = self.ask_prices[k], self.bid_prices[k]
            cols += [EMPTY_PRICE if ap is None else ap, self.ask_sizes[k],
                     -EMPTY_PRICE if bp is None else bp, self.bid_sizes[k]]
        return ",".join(map(str, cols))


@dataclass(frozen=True)
class SessionWindow:
    start_s: float = 37800.0
    end_s: float = 54000.0

    def __post_init__(self) -> None:
        if not self.start_s < self.end_s:
            raise ValueError(f"empty session window [{self.start_s}, {self.end_s})")

    def contains(self, t: float) -> bool:
        return self.start_s <= t < self.end_s


def _lines(source: Source) -> Iterator[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="ascii", newline="") as fh:
            yield from fh
        return
    if isinstance(source, (bytes, bytearray)):
        yield from io.StringIO(bytes(source).decode("ascii"), newline="")
        return
    for line in source:
        yield line.decode("ascii") if isinstance(line, bytes) else line


def parse_message_file(source: Source, *, strict_time: bool = False) -> list[LobEvent]:
    """Parse a message file in file order.

    Non-monotone timestamps emit ``NonMonotoneTimeWarning`` and keep the file
    order, unless ``strict_time`` is set, in which case they raise.
    """
    events: list[LobEvent] = []
    append = events.append
    last_t = -1.0
    warned = False
    for i, line in enumerate(_lines(source)):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise MalformedRow(i, f"expected 6 columns, got {len(parts)}")
        try:
            t = float(parts[0])
            code = int(parts[1])
            oid = int(parts[2])
            size = int(parts[3])
            price = int(parts[4])
            direction = int(parts[5])
        except ValueError as exc:
            raise MalformedRow(i, str(exc)) from None
        etype = _TYPES.get(code)
        if etype is None:
            raise UnknownEventType(i, f"undefined event type {code}")
        if not t >= 0.0:
            raise MalformedRow(i, f"bad timestamp {parts[0]!r}")
        if etype is not EventType.HALT:
            if size <= 0:
                raise MalformedRow(i, f"non-positive size {size}")
            if price <= 0:
                raise MalformedRow(i, f"non-positive price {price}")
            if direction not in _DIRS:
                raise MalformedRow(i, f"bad direction {direction}")
        if t < last_t:
            if strict_time:
                raise NonMonotoneTime(f"row {i}: time {t} < {last_t}")
            if not warned:
                warnings.warn(f"row {i}: time {t} < {last_t}; keeping file order",
                              NonMonotoneTimeWarning, stacklevel=2)
                warned = True
        else:
            last_t = t
        append(LobEvent(t, etype, oid, size, price, _DIRS.get(direction, direction)))
    return events


def _level_price(value: int) -> int | None:
    return None if abs(value) == EMPTY_PRICE else value


def parse_snapshot_file(source: Source, levels: int) -> list[BookSnapshot]:
    if levels < 1:
        raise ValueError("levels must be >= 1")
    width = 4 * levels
    out: list[BookSnapshot] = []
    for i, line in enumerate(_lines(source)):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != width:
            raise ColumnCountMismatch(i, f"expected {width} columns for K={levels}, got {len(parts)}")
        try:
            vals = [int(p) for p in parts]
        except ValueError as exc:
            raise MalformedRow(i, str(exc)) from None
        asizes = tuple(vals[1::4])
        bsizes = tuple(vals[3::4])
        if min(asizes) < 0 or min(bsizes) < 0:
            raise NegativeSize(i, "negative level size")
        out.append(BookSnapshot(
            ask_prices=tuple(_level_price(v) for v in vals[0::4]),
            ask_sizes=asizes,
            bid_prices=tuple(_level_price(v) for v in vals[2::4]),
            bid_sizes=bsizes,
        ))
    return out


def filter_session(events: Sequence[LobEvent], window: SessionWindow = SessionWindow()) -> list[LobEvent]:
    """Keep events with ``start_s <= time_s < end_s``."""
    return [e for e in events if window.start_s <= e.time_s < window.end_s]


def write_messages(events: Iterable[LobEvent]) -> str:
    return "".join(e.to_row() + "\n" for e in events)


def write_snapshots(snaps: Iterable[BookSnapshot]) -> str:
    return "".join(s.to_row() + "\n" for s in snaps)
