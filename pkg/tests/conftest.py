from __future__ import annotations

import numpy as np
import pytest

from lobmrr.frames import Frames

ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[0])):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


def random_frames(rng: np.random.Generator, n: int, days: int = 1, halts: int = 0,
                  tick: int = 100) -> Frames:
    """Small random frame set with optional day and halt boundaries."""
    bid = 2_000_000 + tick * np.cumsum(rng.integers(-1, 2, n))
    spread = tick * rng.integers(1, 4, n)
    day = np.sort(rng.integers(0, days, n))
    cuts = np.zeros(n, dtype=np.int64)
    if halts:
        cuts[rng.choice(np.arange(1, n), size=halts, replace=False)] = 1
    segment = np.cumsum(cuts) + day * (halts + 1)
    return Frames.build(
        eps=rng.choice([-1, 1], n), bid=bid, ask=bid + spread,
        vbid=rng.integers(1, 500, n), vask=rng.integers(1, 500, n),
        segment=segment, day=day, depleted=rng.random(n) < 0.2,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
