"""Price-time priority book reconstruction and transaction-time frames."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CrossedBook, EmptyInput
from .frames import Frames
from .lobster import BookSnapshot, EventType, LobEvent, SessionWindow

BID = 1
ASK = -1
_SIDE_NAME = {BID: "bid", ASK: "ask"}


@dataclass(frozen=True)
class MarketConfig:
    tick_size: float = 0.01
    rebate: float = 0.003
    levels_tracked: int = 10
    price_unit: float = 1e-4

    def __post_init__(self) -> None:
        if not self.tick_size > 0:
            raise ValueError("tick_size must be positive")
        if not self.rebate >= 0:
            raise ValueError("rebate must be non-negative")
        if self.levels_tracked < 1:
            raise ValueError("levels_tracked must be >= 1")
        if not self.price_unit > 0:
            raise ValueError("price_unit must be positive")


class BookDelta(NamedTuple):
    event_type: EventType
    side: int  # BID, ASK, or 0 when the event does not touch the visible book
    price: int
    size_change: int
    applied: bool
    flag: str  # "" or one of: unknown_id, duplicate_id, oversize, not_visible
    level_emptied: bool
    best_depleted: bool
    removed_depth: int  # best-level depth before the event when it depleted


class BookState:
    """Visible limit order book.

    Each price level is an insertion-ordered ``{order_id: size}`` dict, which
    gives FIFO priority for free. Every order ever seen is tracked, so the
    depth-limited snapshot file never loses orders that sit below the tracked
    levels. Volume seeded from a snapshot is held by anonymous orders with
    negative ids at the head of their level.
    """

    def __init__(self) -> None:
        self._levels: dict[int, dict[int, dict[int, int]]] = {BID: {}, ASK: {}}
        self._totals: dict[int, dict[int, int]] = {BID: {}, ASK: {}}
        self._orders: dict[int, tuple[int, int]] = {}
        self._best: dict[int, int | None] = {BID: None, ASK: None}
        self._anon_ids = itertools.count(-1, -1)

    # -- accessors
    @property
    def best_bid(self) -> int | None:
        return self._best[BID]

    @property
    def best_ask(self) -> int | None:
        return self._best[ASK]

    def depth(self, side: int, price: int) -> int:
        return self._totals[side].get(price, 0)

    @property
    def bid_depth(self) -> int:
        b = self._best[BID]
        return 0 if b is None else self._totals[BID][b]

    @property
    def ask_depth(self) -> int:
        a = self._best[ASK]
        return 0 if a is None else self._totals[ASK][a]

    @property
    def mid(self) -> float | None:
        b, a = self._best[BID], self._best[ASK]
        return None if b is None or a is None else (a + b) / 2

    @property
    def spread(self) -> int | None:
        b, a = self._best[BID], self._best[ASK]
        return None if b is None or a is None else a - b

    def top(self, side: int, k: int) -> list[tuple[int, int]]:
        totals = self._totals[side]
        prices = sorted(totals, reverse=(side == BID))[:k]
        return [(p, totals[p]) for p in prices]

    def queue(self, side: int, price: int) -> list[tuple[int, int]]:
        return list(self._levels[side].get(price, {}).items())

    def __contains__(self, order_id: int) -> bool:
        return order_id in self._orders

    # -- mutation
    def _add(self, side: int, price: int, oid: int, size: int) -> None:
        level = self._levels[side].get(price)
        if level is None:
            level = self._levels[side][price] = {}
            self._totals[side][price] = 0
            best = self._best[side]
            if best is None or (price > best if side == BID else price < best):
                self._best[side] = price
        level[oid] = size
        self._totals[side][price] += size
        if oid >= 0:
            self._orders[oid] = (side, price)

    def _drop_level(self, side: int, price: int) -> None:
        del self._levels[side][price]
        del self._totals[side][price]
        if self._best[side] == price:
            rest = self._totals[side]
            self._best[side] = (max(rest) if side == BID else min(rest)) if rest else None

    def _reduce(self, side: int, price: int, oid: int, amount: int) -> bool:
        level = self._levels[side][price]
        left = level[oid] - amount
        if left > 0:
            level[oid] = left
        else:
            del level[oid]
            if oid >= 0:
                del self._orders[oid]
        self._totals[side][price] -= amount
        if not level:
            self._drop_level(side, price)
            return True
        return False

    def seed(self, snap: BookSnapshot) -> None:
        """Load the visible levels of ``snap`` as anonymous resting volume."""
        for k in range(snap.levels):
            if snap.bid_prices[k] is not None and snap.bid_sizes[k] > 0:
                self._add(BID, snap.bid_prices[k], next(self._anon_ids), snap.bid_sizes[k])
            if snap.ask_prices[k] is not None and snap.ask_sizes[k] > 0:
                self._add(ASK, snap.ask_prices[k], next(self._anon_ids), snap.ask_sizes[k])

    def apply_event(self, e: LobEvent) -> BookDelta:
        etype = e.event_type
        if etype > EventType.EXEC_VISIBLE:
            return BookDelta(etype, 0, e.price_ticks, 0, False, "not_visible", False, False, 0)
        side = BID if e.direction > 0 else ASK
        price = e.price_ticks
        if etype == EventType.SUBMISSION:
            if e.order_id in self._orders:
                return BookDelta(etype, side, price, 0, False, "duplicate_id", False, False, 0)
            opp = self._best[-side]
            if opp is not None and (price >= opp if side == BID else price <= opp):
                raise CrossedBook(f"order {e.order_id} at {price} crosses best {_SIDE_NAME[-side]} {opp}")
            self._add(side, price, e.order_id, e.size)
            return BookDelta(etype, side, price, e.size, True, "", False, False, 0)

        was_best = self._best[side] == price
        pre_depth = self._totals[side].get(price, 0)
        loc = self._orders.get(e.order_id)
        flag = ""
        if loc == (side, price):
            remaining = self._levels[side][price][e.order_id]
            amount = remaining if etype == EventType.DELETION else e.size
            if amount > remaining:
                amount, flag = remaining, "oversize"
            emptied = self._reduce(side, price, e.order_id, amount)
        else:
            # untracked id: draw on anonymous volume seeded at this level
            level = self._levels[side].get(price, {})
            anon = [(oid, sz) for oid, sz in level.items() if oid < 0]
            amount = e.size
            if sum(sz for _, sz in anon) < amount:
                return BookDelta(etype, side, price, 0, False, "unknown_id", False, False, 0)
            emptied = False
            need = amount
            for oid, sz in anon:
                take = min(sz, need)
                emptied = self._reduce(side, price, oid, take)
                need -= take
                if need == 0:
                    break
        depleted = emptied and was_best
        return BookDelta(etype, side, price, -amount, True, flag, emptied, depleted,
                         pre_depth if depleted else 0)


# ------------------------------------------------------------- reconciliation

class LevelDiff(NamedTuple):
    side: str
    level: int
    field: str
    expected: int | None
    actual: int | None


@dataclass(frozen=True)
class ReconcileReport:
    passed: bool
    diffs: tuple[LevelDiff, ...] = ()


def reconcile(state: BookState, snap: BookSnapshot) -> ReconcileReport:
    """Compare the top ``snap.levels`` levels of ``state`` with ``snap``."""
    k = snap.levels
    diffs: list[LevelDiff] = []
    for side, prices, sizes in ((ASK, snap.ask_prices, snap.ask_sizes),
                                (BID, snap.bid_prices, snap.bid_sizes)):
        ours = state.top(side, k)
        for lvl in range(k):
            exp_p = prices[lvl]
            exp_s = sizes[lvl] if exp_p is not None else 0
            act_p, act_s = ours[lvl] if lvl < len(ours) else (None, 0)
            if exp_p != act_p:
                diffs.append(LevelDiff(_SIDE_NAME[side], lvl + 1, "price", exp_p, act_p))
            if exp_s != act_s:
                diffs.append(LevelDiff(_SIDE_NAME[side], lvl + 1, "size", exp_s, act_s))
    return ReconcileReport(not diffs, tuple(diffs))


# ------------------------------------------------------------ frame extraction

@dataclass(frozen=True)
class DepletionEvent:
    frame_index: int  # frame of the depleting trade, or next frame for cancellations
    event_index: int
    side: str
    cause: str
    pre_mid: float
    post_mid: float
    removed: int
    time_s: float = 0.0
    segment: int = 0

    @property
    def direction(self) -> int:
        """Expected sign of the mid move: up after an ask depletion."""
        return 1 if self.side == "ask" else -1


@dataclass
class ReplayResult:
    frames: Frames
    depletions: list[DepletionEvent]
    flags: Counter = field(default_factory=Counter)
    executed_volume: int = 0
    reconcile_checked: int = 0
    reconcile_failures: int = 0
    first_failure: tuple[int, ReconcileReport] | None = None
    state: BookState | None = None


class _Group:
    __slots__ = ("time", "direction", "bid", "ask", "vbid", "vask", "size", "depleted",
                 "emit", "deps")

    def __init__(self, e: LobEvent, state: BookState, emit: bool):
        self.time = e.time_s
        self.direction = e.direction
        self.bid, self.ask = state.best_bid, state.best_ask
        self.vbid, self.vask = state.bid_depth, state.ask_depth
        self.size = 0
        self.depleted = False
        self.emit = emit and self.bid is not None and self.ask is not None
        self.deps: list[tuple] = []


def replay(
    events: Sequence[LobEvent],
    cfg: MarketConfig = MarketConfig(),
    window: SessionWindow | None = None,
    snapshots: Sequence[BookSnapshot] | None = None,
    seed_from_first_snapshot: bool = False,
) -> ReplayResult:
    """Run every event through the book and collect frames and depletions.

    The whole stream drives the book, but frames and depletions are only
    recorded for events inside ``window``. When ``snapshots`` are given, each
    is reconciled against the book after its aligned event. With
    ``seed_from_first_snapshot`` the book starts from snapshot 0 and event 0
    is treated as already applied.
    """
    state = BookState()
    start = 0
    if seed_from_first_snapshot:
        if not snapshots:
            raise ValueError("seeding requires snapshots")
        state.seed(snapshots[0])
        start = 1
    if snapshots is not None and len(snapshots) != len(events):
        raise ValueError(f"{len(snapshots)} snapshot rows for {len(events)} messages")

    cols: dict[str, list] = {k: [] for k in ("eps", "bid", "ask", "vbid", "vask", "size",
                                              "depleted", "wall_time", "segment")}
    depletions: list[DepletionEvent] = []
    flags: Counter = Counter()
    result = ReplayResult(frames=None, depletions=depletions, flags=flags)  # type: ignore[arg-type]
    segment = 0
    group: _Group | None = None

    def in_window(t: float) -> bool:
        return window is None or window.start_s <= t < window.end_s

    def flush() -> None:
        nonlocal group
        g = group
        group = None
        if g is None:
            return
        if not g.emit:
            if g.size:
                flags["trade_without_frame"] += 1
            return
        idx = len(cols["eps"])
        cols["eps"].append(-g.direction)
        cols["bid"].append(g.bid)
        cols["ask"].append(g.ask)
        cols["vbid"].append(g.vbid)
        cols["vask"].append(g.vask)
        cols["size"].append(g.size)
        cols["depleted"].append(g.depleted)
        cols["wall_time"].append(g.time)
        cols["segment"].append(segment)
        for ev_idx, side, pre, post, removed in g.deps:
            depletions.append(DepletionEvent(idx, ev_idx, side, "execution", pre, post, removed,
                                             g.time, segment))

    for i in range(start, len(events)):
        e = events[i]
        etype = e.event_type
        if etype == EventType.EXEC_VISIBLE:
            if group is None or e.time_s != group.time or e.direction != group.direction:
                flush()
                group = _Group(e, state, in_window(e.time_s))
            pre_mid = state.mid
            delta = state.apply_event(e)
            group.size += e.size
            if in_window(e.time_s):
                result.executed_volume += e.size
            if delta.flag:
                flags[delta.flag] += 1
            if delta.best_depleted:
                group.depleted = True
                post = state.mid
                if group.emit and pre_mid is not None:
                    group.deps.append((i, _SIDE_NAME[delta.side], pre_mid,
                                       float("nan") if post is None else post, delta.removed_depth))
        elif etype in (EventType.EXEC_HIDDEN, EventType.CROSS):
            flags["hidden_execution" if etype == EventType.EXEC_HIDDEN else "cross"] += 1
        else:
            flush()
            if etype == EventType.HALT:
                flags["halt"] += 1
                segment += 1
            else:
                pre_mid = state.mid
                delta = state.apply_event(e)
                if delta.flag:
                    flags[delta.flag] += 1
                if delta.best_depleted and pre_mid is not None and in_window(e.time_s):
                    post = state.mid
                    depletions.append(DepletionEvent(
                        len(cols["eps"]), i, _SIDE_NAME[delta.side], "cancellation", pre_mid,
                        float("nan") if post is None else post, delta.removed_depth,
                        e.time_s, segment))
        if snapshots is not None:
            rep = reconcile(state, snapshots[i])
            result.reconcile_checked += 1
            if not rep.passed:
                result.reconcile_failures += 1
                if result.first_failure is None:
                    result.first_failure = (i, rep)
    flush()

    result.frames = Frames(
        eps=np.array(cols["eps"], dtype=np.int8),
        bid=np.array(cols["bid"], dtype=np.float64),
        ask=np.array(cols["ask"], dtype=np.float64),
        vbid=np.array(cols["vbid"], dtype=np.int64),
        vask=np.array(cols["vask"], dtype=np.int64),
        size=np.array(cols["size"], dtype=np.int64),
        depleted=np.array(cols["depleted"], dtype=bool),
        wall_time=np.array(cols["wall_time"], dtype=np.float64),
        segment=np.array(cols["segment"], dtype=np.int64),
        day=np.zeros(len(cols["eps"]), dtype=np.int64),
        tick_size=cfg.tick_size, rebate=cfg.rebate, price_unit=cfg.price_unit,
    )
    result.state = state
    return result


def extract_transactions(events: Sequence[LobEvent], cfg: MarketConfig = MarketConfig(),
                         window: SessionWindow | None = None) -> Frames:
    return replay(events, cfg, window).frames


def detect_depletions(events: Sequence[LobEvent], cfg: MarketConfig = MarketConfig(),
                      window: SessionWindow | None = None) -> list[DepletionEvent]:
    return replay(events, cfg, window).depletions


def depletions_from_frames(frames: Frames) -> list[DepletionEvent]:
    """Depletion events implied by the ``depleted`` column of a frame set.

    Used for simulated frames, which carry no event stream. The side is read
    off the direction of the next mid move.
    """
    mid = frames.mid
    out = []
    for t in np.flatnonzero(frames.depleted[:-1]).tolist():
        if frames.segment[t + 1] != frames.segment[t]:
            continue
        move = mid[t + 1] - mid[t]
        if move == 0:
            continue
        out.append(DepletionEvent(t, t, "ask" if move > 0 else "bid", "execution",
                                  float(mid[t]), float(mid[t + 1]), 0,
                                  float(frames.wall_time[t]), int(frames.segment[t])))
    return out


# ---------------------------------------------------------------- tick regime

class TickRegime(str, Enum):
    LARGE = "large"
    MEDIUM = "medium"
    SMALL = "small"


LARGE_TICK_BELOW = 0.013
SMALL_TICK_ABOVE = 0.04


def regime_for_spread(mean_spread: float) -> TickRegime:
    if mean_spread < LARGE_TICK_BELOW:
        return TickRegime.LARGE
    if mean_spread > SMALL_TICK_ABOVE:
        return TickRegime.SMALL
    return TickRegime.MEDIUM


def classify_tick_regime(frames: Frames) -> tuple[TickRegime, float]:
    """Regime from the mean pre-trade spread in dollars."""
    if frames.n == 0:
        raise EmptyInput("no frames to classify")
    mean_spread = float(np.mean(frames.spread)) * frames.price_unit
    return regime_for_spread(mean_spread), mean_spread
