"""Reference writer for LOBSTER-style message/order-book file pairs.

It keeps its own deliberately simple book (sorted lists of levels holding
FIFO lists of orders), independent of ``book.BookState``, and records a
depth-K snapshot after every message. The output is used to check book
reconstruction and to exercise the ingestion pipeline end to end.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass

from .lobster import BookSnapshot, EventType, LobEvent, write_messages, write_snapshots


class _Side:
    def __init__(self, descending: bool):
        self.descending = descending
        self.keys: list[int] = []  # sort keys, ascending
        self.levels: list[list[list[int]]] = []  # per level: [[order_id, size], ...]

    def _key(self, price: int) -> int:
        return -price if self.descending else price

    def prices(self) -> list[int]:
        return [-k if self.descending else k for k in self.keys]

    def best(self) -> int | None:
        return self.prices()[0] if self.keys else None

    def add(self, price: int, oid: int, size: int) -> None:
        key = self._key(price)
        i = bisect.bisect_left(self.keys, key)
        if i == len(self.keys) or self.keys[i] != key:
            self.keys.insert(i, key)
            self.levels.insert(i, [])
        self.levels[i].append([oid, size])

    def level(self, price: int) -> list[list[int]]:
        i = bisect.bisect_left(self.keys, self._key(price))
        return self.levels[i]

    def reduce(self, price: int, oid: int, amount: int) -> None:
        i = bisect.bisect_left(self.keys, self._key(price))
        queue = self.levels[i]
        for j, order in enumerate(queue):
            if order[0] == oid:
                order[1] -= amount
                if order[1] == 0:
                    del queue[j]
                break
        else:
            raise KeyError(oid)
        if not queue:
            del self.keys[i]
            del self.levels[i]

    def snapshot(self, k: int) -> tuple[list[int | None], list[int]]:
        prices, sizes = [], []
        for i in range(k):
            if i < len(self.keys):
                prices.append(self.prices()[i])
                sizes.append(sum(o[1] for o in self.levels[i]))
            else:
                prices.append(None)
                sizes.append(0)
        return prices, sizes


@dataclass
class SyntheticDay:
    messages: list[LobEvent]
    snapshots: list[BookSnapshot]
    levels: int

    def message_text(self) -> str:
        return write_messages(self.messages)

    def snapshot_text(self) -> str:
        return write_snapshots(self.snapshots)


def generate_day(seed: int = 0, n_events: int = 5000, levels: int = 5, tick: int = 100,
                 start_price: int = 2238100, start_time: float = 34200.0,
                 end_time: float = 57600.0, halts: int = 0, hidden_rate: float = 0.03,
                 cross_rate: float = 0.0) -> SyntheticDay:
    """Random visible order flow around a slowly drifting book.

    Market orders walk the opposite best queue, producing consecutive
    execution rows with one shared timestamp. Hidden executions, crosses and
    halts are written but never touch the visible book.
    """
    rng = random.Random(seed)
    bids, asks = _Side(descending=True), _Side(descending=False)
    sides = {1: bids, -1: asks}
    resting: dict[int, tuple[int, int]] = {}
    messages: list[LobEvent] = []
    snapshots: list[BookSnapshot] = []
    next_id = 1
    dt = (end_time - start_time) / (n_events * 1.2)
    t = start_time
    halt_at = sorted(rng.sample(range(n_events // 5, n_events), halts)) if halts else []

    def record(e: LobEvent) -> None:
        messages.append(e)
        ap, asz = asks.snapshot(levels)
        bp, bsz = bids.snapshot(levels)
        snapshots.append(BookSnapshot(tuple(ap), tuple(asz), tuple(bp), tuple(bsz)))

    def submit(direction: int, price: int, size: int) -> None:
        nonlocal next_id
        oid = next_id
        next_id += 1
        sides[direction].add(price, oid, size)
        resting[oid] = (direction, price)
        record(LobEvent(round(t, 9), EventType.SUBMISSION, oid, size, price, direction))

    # opening book
    for j in range(levels + 2):
        submit(1, start_price - j * tick, rng.randint(50, 400))
        submit(-1, start_price + (j + 1) * tick, rng.randint(50, 400))

    while len(messages) < n_events:
        t += rng.expovariate(1.0 / dt)
        if halt_at and len(messages) >= halt_at[0]:
            halt_at.pop(0)
            record(LobEvent(round(t, 9), EventType.HALT, 0, 0, -1, -1))
            t += 60.0
            record(LobEvent(round(t, 9), EventType.HALT, 0, 0, 1, -1))
            continue
        u = rng.random()
        bb, ba = bids.best(), asks.best()
        thin = [d for d in (1, -1) if len(sides[d].keys) < 3]
        if thin:
            d = thin[0]
            ref = (bb if d == 1 else ba) or (start_price if d == 1 else start_price + tick)
            off = rng.randint(0, 3) * tick
            submit(d, ref - off if d == 1 else ref + off, rng.randint(10, 400))
        elif u < hidden_rate:
            d = rng.choice((1, -1))
            record(LobEvent(round(t, 9), EventType.EXEC_HIDDEN, 0, rng.randint(1, 200),
                            ba if d == 1 else bb, d))
        elif u < hidden_rate + cross_rate:
            record(LobEvent(round(t, 9), EventType.CROSS, 0, rng.randint(1, 500), bb, -1))
        elif u < 0.50:
            d = rng.choice((1, -1))
            j = rng.choice((-1, 0, 0, 0, 1, 1, 2, 3))  # -1 improves the quote
            if d == 1:
                price = bb - j * tick
                if price >= ba:
                    price = bb
            else:
                price = ba + j * tick
                if price <= bb:
                    price = ba
            submit(d, price, rng.randint(1, 400))
        elif u < 0.62 and resting:
            oid = rng.choice(list(resting))
            d, price = resting[oid]
            size = next(o[1] for o in sides[d].level(price) if o[0] == oid)
            if size > 1:
                cut = rng.randint(1, size - 1)
                sides[d].reduce(price, oid, cut)
                record(LobEvent(round(t, 9), EventType.PARTIAL_CANCEL, oid, cut, price, d))
        elif u < 0.82 and resting:
            oid = rng.choice(list(resting))
            d, price = resting.pop(oid)
            size = next(o[1] for o in sides[d].level(price) if o[0] == oid)
            sides[d].reduce(price, oid, size)
            record(LobEvent(round(t, 9), EventType.DELETION, oid, size, price, d))
        else:
            # market order against the resting side d
            d = rng.choice((1, -1))
            book = sides[d]
            want = rng.randint(1, 600)
            while want > 0 and len(book.keys) > 1:
                price = book.best()
                oid, size = book.levels[0][0]
                take = min(size, want)
                book.reduce(price, oid, take)
                if take == size:
                    resting.pop(oid)
                want -= take
                record(LobEvent(round(t, 9), EventType.EXEC_VISIBLE, oid, take, price, d))
    return SyntheticDay(messages, snapshots, levels)


def lobster_names(ticker: str, date: str, levels: int) -> tuple[str, str]:
    stem = f"{ticker}_{date}_34200000_57600000"
    return f"{stem}_message_{levels}.csv", f"{stem}_orderbook_{levels}.csv"
