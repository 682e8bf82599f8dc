"""Synthetic price paths: the continuous MRR model and its tick-grid version.

Continuous mode quotes ``a = p + G(1 - eps_hat) - r`` and
``b = p - G(1 + eps_hat) + r`` around the fundamental price ``p``. Discrete
mode keeps a one-tick spread on the price grid and moves it only when ``p``
leaves the interval in which resting orders at the best stay profitable.
Best-level depths are drawn so that the squared-volume proxy inverts back to
``p``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InvalidSpec
from .frames import Frames


class SignKind(str, Enum):
    IID = "iid"
    MARKOV = "markov"
    LINEAR = "linear"


@dataclass(frozen=True)
class SignProcessSpec:
    kind: SignKind = SignKind.MARKOV
    rho: float = 0.0
    weights: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", SignKind(self.kind))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind is SignKind.MARKOV and not -1.0 < self.rho < 1.0:
            raise InvalidSpec(f"Markov rho must lie in (-1, 1), got {self.rho}")
        if self.kind is SignKind.LINEAR:
            if not self.weights:
                raise InvalidSpec("linear predictor needs at least one weight")
            if sum(abs(w) for w in self.weights) >= 1.0:
                raise InvalidSpec("linear predictor weights must satisfy sum |a_k| < 1")


@dataclass(frozen=True)
class MrrParams:
    G: float = 1.0
    W_sigma: float = 0.0
    W_coupling: float = 0.0
    tau: float = 0.01
    r: float = 0.003
    p_0: float = 100.005  # mid-tick: with G = r the interval edges fall on grid points
    n_steps: int = 100_000
    volume_noise: float = 0.1
    volume_scale: float = 1000.0
    trade_size: int = 100
    clamp: float = 1e-3

    def __post_init__(self) -> None:
        if not self.G > 0:
            raise InvalidSpec("G must be positive")
        if not self.W_sigma >= 0:
            raise InvalidSpec("W_sigma must be non-negative")
        if not 0.0 <= self.W_coupling <= 1.0:
            raise InvalidSpec("W_coupling must lie in [0, 1]")
        if self.W_coupling > 0 and self.W_sigma == 0:
            raise InvalidSpec("coupling to news needs W_sigma > 0")
        if not self.r >= 0:
            raise InvalidSpec("rebate must be non-negative")
        if self.n_steps < 1:
            raise InvalidSpec("n_steps must be >= 1")
        if not 0 < self.clamp < 0.5:
            raise InvalidSpec("clamp must lie in (0, 0.5)")
        if self.volume_scale < 1 or self.volume_noise < 0:
            raise InvalidSpec("bad volume parameters")


def generate_signs(spec: SignProcessSpec, n: int, news: np.ndarray | None = None,
                   coupling: float = 0.0, rng: np.random.Generator | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Draw n trade signs and their one-step predictions.

    With ``coupling`` q > 0, eps_t copies sign(news[t-1]) with probability q and
    otherwise follows the base process, so
    eps_hat_t = q sign(W_{t-1}) + (1 - q) base_t.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    q = float(coupling)
    if q > 0 and news is None:
        raise InvalidSpec("coupling needs a news series")
    s = np.zeros(n)
    if news is not None and n > 1:
        s[1:] = np.sign(news[:n - 1])
        if q > 0 and np.any(s[1:] == 0):
            raise InvalidSpec("news series has exact zeros; cannot copy its sign")

    if spec.kind is SignKind.LINEAR:
        return _linear_signs(spec.weights, n, s, q, rng)

    rho = spec.rho if spec.kind is SignKind.MARKOV else 0.0
    first = rng.random() < 0.5
    copy = rng.random(n) < q
    flip = rng.random(n) >= (1.0 + rho) / 2.0
    copy[0] = False
    flip[0] = False
    flip &= ~copy
    idx = np.arange(n)
    anchor = np.maximum.accumulate(np.where(copy, idx, 0))
    anchor_val = np.where(copy, s, 1.0 if first else -1.0)
    anchor_val[0] = 1.0 if first else -1.0
    flips = np.cumsum(flip)
    parity = (flips - flips[anchor]) & 1
    eps = (anchor_val[anchor] * (1 - 2 * parity)).astype(np.int8)
    eps_hat = np.zeros(n)
    if n > 1:
        eps_hat[1:] = q * s[1:] + (1.0 - q) * rho * eps[:-1]
    return eps, eps_hat


def _linear_signs(weights: Sequence[float], n: int, s: np.ndarray, q: float,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    a = list(weights)
    K = len(a)
    u = rng.random(n).tolist()
    sl = s.tolist()
    eps = [0] * n
    eh = [0.0] * n
    for t in range(n):
        base = 0.0
        for k in range(1, min(K, t) + 1):
            base += a[k - 1] * eps[t - k]
        h = q * sl[t] + (1.0 - q) * base
        eh[t] = h
        eps[t] = 1 if u[t] < (1.0 + h) / 2.0 else -1
    return np.array(eps, dtype=np.int8), np.array(eh)


@dataclass
class SimPath:
    mode: str
    params: MrrParams
    spec: SignProcessSpec
    p: np.ndarray
    eps: np.ndarray
    eps_hat: np.ndarray
    news: np.ndarray
    bid: np.ndarray  # dollars
    ask: np.ndarray
    vbid: np.ndarray
    vask: np.ndarray
    shifts: np.ndarray  # grid moves of the quotes right after trade t
    bid_index: np.ndarray | None = None  # discrete mode: bid = bid_index * tau

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
    def depleted(self) -> np.ndarray:
        return self.shifts != 0

    def to_frames(self, price_unit: float = 1e-4) -> Frames:
        ticks = self.params.tau / price_unit
        if self.bid_index is not None and abs(ticks - round(ticks)) < 1e-9:
            step = float(round(ticks))
            bid = self.bid_index.astype(np.float64) * step
            ask = bid + step
        else:
            bid = self.bid / price_unit
            ask = self.ask / price_unit
        meta = {"source": "simulate", "mode": self.mode, "params": asdict(self.params),
                "signs": {"kind": self.spec.kind.value, "rho": self.spec.rho,
                          "weights": list(self.spec.weights), "seed": self.spec.seed}}
        return Frames(
            eps=self.eps, bid=bid, ask=ask, vbid=self.vbid, vask=self.vask,
            size=np.full(self.n, self.params.trade_size, dtype=np.int64),
            depleted=self.depleted, wall_time=np.arange(self.n, dtype=np.float64),
            segment=np.zeros(self.n, dtype=np.int64), day=np.zeros(self.n, dtype=np.int64),
            tick_size=self.params.tau, rebate=self.params.r, price_unit=price_unit,
            extra={"p": self.p, "eps_hat": self.eps_hat, "news": self.news}, meta=meta,
        )


def _draw_path(params: MrrParams, spec: SignProcessSpec):
    rng = np.random.default_rng(spec.seed)
    n = params.n_steps + 1  # one extra step fixes the quotes after the last trade
    news = params.W_sigma * rng.standard_normal(n)
    eps, eps_hat = generate_signs(spec, n, news, params.W_coupling, rng)
    p = np.empty(n)
    p[0] = params.p_0
    p[1:] = params.p_0 + np.cumsum(params.G * (eps[:-1] - eps_hat[:-1]) + news[:-1])
    return rng, p, eps, eps_hat, news


def _volumes(p, bid, ask, params: MrrParams, rng: np.random.Generator):
    r = params.r
    f = np.clip((p - bid + r) / (ask - bid + 2 * r), params.clamp, 1.0 - params.clamp)
    scale = params.volume_scale * np.exp(params.volume_noise * rng.standard_normal(len(p)))
    vbid = np.maximum(1, np.rint(scale * np.sqrt(f))).astype(np.int64)
    vask = np.maximum(1, np.rint(scale * np.sqrt(1.0 - f))).astype(np.int64)
    return vbid, vask


def simulate_continuous(params: MrrParams, spec: SignProcessSpec) -> SimPath:
    if not params.G > params.r:
        raise InvalidSpec("continuous quotes need G > r for a positive spread")
    rng, p, eps, eh, news = _draw_path(params, spec)
    m = params.n_steps
    p, eps, eh, news = p[:m], eps[:m], eh[:m], news[:m]
    G, r = params.G, params.r
    ask = p + G * (1.0 - eh) - r
    bid = p - G * (1.0 + eh) + r
    vbid, vask = _volumes(p, bid, ask, params, rng)
    return SimPath("continuous", params, spec, p, eps, eh, news, bid, ask, vbid, vask,
                   np.zeros(m, dtype=np.int64))


def discretize(p: Sequence[float], eps_hat: Sequence[float], G: float, tau: float, r: float,
               start_index: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Place one-tick quotes on the grid along a fundamental-price path.

    Quotes stay put while ``p`` remains strictly inside
    (b - r + G(1 + eps_hat), a + r - G(1 - eps_hat)); otherwise they move one
    tick at a time in the direction of the exit until ``p`` is back inside.
    Returns the bid grid index at every step and the signed number of moves
    made after each step.
    """
    if not 0 < G < tau / 2 + r:
        raise InvalidSpec("need 0 < G < tau/2 + r for a non-empty profitability interval")
    pl = list(map(float, p))
    el = list(map(float, eps_hat))
    n = len(pl)

    # same arithmetic as profitability_bounds, so both agree to the last bit
    def settle(k: int, pv: float, ev: float) -> int:
        if pv >= (k + 1) * tau + r - G * (1.0 - ev):
            while pv >= (k + 1) * tau + r - G * (1.0 - ev):
                k += 1
        elif pv <= k * tau - r + G * (1.0 + ev):
            while pv <= k * tau - r + G * (1.0 + ev):
                k -= 1
        return k

    if start_index is None:
        start_index = int(math.floor((pl[0] - G * el[0]) / tau))
    k = settle(start_index, pl[0], el[0])
    index = [0] * n
    moves = [0] * n
    for t in range(n - 1):
        index[t] = k
        k2 = settle(k, pl[t + 1], el[t + 1])
        moves[t] = k2 - k
        k = k2
    index[n - 1] = k
    return np.array(index, dtype=np.int64), np.array(moves, dtype=np.int64)


def simulate_discrete(params: MrrParams, spec: SignProcessSpec) -> SimPath:
    rng, p, eps, eh, news = _draw_path(params, spec)
    index, moves = discretize(p, eh, params.G, params.tau, params.r)
    m = params.n_steps
    p, eps, eh, news, index, moves = p[:m], eps[:m], eh[:m], news[:m], index[:m], moves[:m]
    bid = index * params.tau
    ask = (index + 1) * params.tau
    vbid, vask = _volumes(p, bid, ask, params, rng)
    return SimPath("discrete", params, spec, p, eps, eh, news, bid, ask, vbid, vask, moves, index)


def simulate(mode: str, params: MrrParams, spec: SignProcessSpec) -> SimPath:
    if mode == "continuous":
        return simulate_continuous(params, spec)
    if mode == "discrete":
        return simulate_discrete(params, spec)
    raise InvalidSpec(f"unknown mode {mode!r}")


def profitability_bounds(path: SimPath) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper edges of the interval that keeps the quotes in place."""
    G, r = path.params.G, path.params.r
    lo = path.bid - r + G * (1.0 + path.eps_hat)
    hi = path.ask + r - G * (1.0 - path.eps_hat)
    return lo, hi
