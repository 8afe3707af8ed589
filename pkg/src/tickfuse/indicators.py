"""Technical indicators and per-bar signals over minute-bar windows.

Three strategies, all pure functions of a chronological bar sequence:

- EMA crossover: fast (5) vs slow (30) exponential moving averages of VWAP;
  long when the fast line crosses above the slow, short on the mirror cross.
- RSI: 100 - 100 / (1 + RS) with RS = mean gain / mean loss over the last n
  price deltas (plain arithmetic means, n = 15). Long when RSI crosses above
  the oversold line (30), short when it crosses below the overbought line (70).
- Stochastic oscillator: %K = (close - lowest low) / (highest high - lowest
  low) * 100 over a trailing lookback, %D = 3-period SMA of %K. Long on a
  %K/%D upward cross with both lines inside the oversold zone (< 20), short on
  the mirrored cross inside the overbought zone (> 80).

Crosses use a non-strict comparison on the previous bar and a strict one on
the current bar, so touching a level and then crossing fires exactly once.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .bars import MinuteBar
from .errors import TickfuseError

LONG = "long"
SHORT = "short"
HOLD = "hold"

SMA_CROSSOVER = "sma_crossover"
RSI = "rsi"
STOCHASTIC = "stochastic"
STRATEGIES = (SMA_CROSSOVER, RSI, STOCHASTIC)


class EmptySeries(TickfuseError):
    pass


class InsufficientData(TickfuseError):
    def __init__(self, needed: int, got: int):
        super().__init__(f"need at least {needed} bars, got {got}")
        self.needed = needed
        self.got = got


@dataclass(frozen=True)
class IndicatorParams:
    """Window lengths and oscillator thresholds for all three strategies."""

    fast_window: int = 5
    slow_window: int = 30
    rsi_period: int = 15
    rsi_oversold: float = 30.0
    rsi_overbought: float = 70.0
    stoch_lookback: int = 14
    stoch_d_period: int = 3
    stoch_oversold: float = 20.0
    stoch_overbought: float = 80.0

    def __post_init__(self):
        if self.fast_window < 1 or self.slow_window < 1:
            raise ValueError("EMA windows must be positive")
        if self.fast_window >= self.slow_window:
            raise ValueError("fast_window must be smaller than slow_window")
        if self.rsi_period < 1 or self.stoch_lookback < 1 or self.stoch_d_period < 1:
            raise ValueError("oscillator periods must be positive")
        if not (0 < self.rsi_oversold < self.rsi_overbought < 100):
            raise ValueError("require 0 < rsi_oversold < rsi_overbought < 100")
        if not (0 < self.stoch_oversold < self.stoch_overbought < 100):
            raise ValueError("require 0 < stoch_oversold < stoch_overbought < 100")


@dataclass(frozen=True)
class TechnicalSignal:
    """One strategy's verdict for one bar: long, short or hold."""

    ticker: str
    bar_time: int
    direction: str
    strategy: str


def ema(series: Sequence[float], window: int) -> list[float]:
    """Exponential moving average, seeded with the first value.

    alpha = 2 / (window + 1); out[t] = alpha * x[t] + (1 - alpha) * out[t-1],
    evaluated as out[t-1] + alpha * (x[t] - out[t-1]) so a constant series is
    an exact fixed point. Output has the same length as the input.
    """
    if len(series) == 0:
        raise EmptySeries("cannot compute EMA of an empty series")
    if window < 1:
        raise ValueError("window must be positive")
    alpha = 2.0 / (window + 1)
    out = [float(series[0])]
    prev = out[0]
    for x in series[1:]:
        prev = prev + alpha * (x - prev)
        out.append(prev)
    return out


def rsi(series: Sequence[float], period: int) -> list[float]:
    """RSI values for indices >= period (output[i] belongs to series index period + i).

    RS is the ratio of the arithmetic mean gain to the arithmetic mean loss
    over the last `period` deltas. Degenerate windows: no losses -> 100, no
    gains -> 0, completely flat -> 50.
    """
    if period < 1:
        raise ValueError("period must be positive")
    if len(series) < period + 1:
        raise InsufficientData(period + 1, len(series))
    # prefix sums of gains/losses keep each window mean O(1)
    gain_sum = [0.0]
    loss_sum = [0.0]
    for i in range(1, len(series)):
        delta = float(series[i]) - float(series[i - 1])
        gain_sum.append(gain_sum[-1] + (delta if delta > 0 else 0.0))
        loss_sum.append(loss_sum[-1] + (-delta if delta < 0 else 0.0))
    out = []
    for t in range(period, len(series)):
        mean_gain = (gain_sum[t] - gain_sum[t - period]) / period
        mean_loss = (loss_sum[t] - loss_sum[t - period]) / period
        if mean_loss == 0.0:
            out.append(50.0 if mean_gain == 0.0 else 100.0)
        elif mean_gain == 0.0:
            out.append(0.0)
        else:
            out.append(100.0 - 100.0 / (1.0 + mean_gain / mean_loss))
    return out


def _rolling_extremes(values: Sequence[float], window: int, greater: bool) -> list[float]:
    # monotonic-deque sliding extreme; output[i] covers values[i-window+1 .. i]
    out = []
    dq: deque[int] = deque()
    for i, v in enumerate(values):
        while dq and (values[dq[-1]] <= v if greater else values[dq[-1]] >= v):
            dq.pop()
        dq.append(i)
        if dq[0] <= i - window:
            dq.popleft()
        if i >= window - 1:
            out.append(values[dq[0]])
    return out


def stochastic(
    bars: Sequence[MinuteBar], params: IndicatorParams = IndicatorParams()
) -> tuple[list[float], list[float]]:
    """%K and %D series over bar high/low/close.

    k_values[i] is %K at bar index lookback - 1 + i; d_values[j] is %D at bar
    index lookback + d_period - 2 + j. A flat window (highest high == lowest
    low) yields the neutral %K of 50.
    """
    lookback = params.stoch_lookback
    d_period = params.stoch_d_period
    needed = lookback + d_period - 1
    if len(bars) < needed:
        raise InsufficientData(needed, len(bars))
    highs = [b.high for b in bars]
    lows = [b.low for b in bars]
    highest = _rolling_extremes(highs, lookback, greater=True)
    lowest = _rolling_extremes(lows, lookback, greater=False)
    k_values = []
    for i, (hh, ll) in enumerate(zip(highest, lowest)):
        close = bars[lookback - 1 + i].close
        if hh == ll:
            k_values.append(50.0)
        else:
            k_values.append((close - ll) / (hh - ll) * 100.0)
    d_values = [
        sum(k_values[j - d_period + 1 : j + 1]) / d_period
        for j in range(d_period - 1, len(k_values))
    ]
    return k_values, d_values


def sma_crossover_signals(
    bars: Sequence[MinuteBar], params: IndicatorParams = IndicatorParams()
) -> list[TechnicalSignal]:
    """One signal per bar from index 1 on: long/short on an EMA cross, else hold."""
    if len(bars) < 2:
        raise InsufficientData(2, len(bars))
    prices = [b.vwap for b in bars]
    fast = ema(prices, params.fast_window)
    slow = ema(prices, params.slow_window)
    signals = []
    for t in range(1, len(bars)):
        if fast[t - 1] <= slow[t - 1] and fast[t] > slow[t]:
            direction = LONG
        elif fast[t - 1] >= slow[t - 1] and fast[t] < slow[t]:
            direction = SHORT
        else:
            direction = HOLD
        signals.append(
            TechnicalSignal(bars[t].ticker, bars[t].minute_start, direction, SMA_CROSSOVER)
        )
    return signals


def rsi_signals(
    bars: Sequence[MinuteBar], params: IndicatorParams = IndicatorParams()
) -> list[TechnicalSignal]:
    """Signals from the first bar with two consecutive RSI values available."""
    period = params.rsi_period
    if len(bars) < period + 2:
        raise InsufficientData(period + 2, len(bars))
    values = rsi([b.vwap for b in bars], period)
    signals = []
    for i in range(1, len(values)):
        prev, now = values[i - 1], values[i]
        if prev <= params.rsi_oversold < now:
            direction = LONG
        elif prev >= params.rsi_overbought > now:
            direction = SHORT
        else:
            direction = HOLD
        t = period + i
        signals.append(TechnicalSignal(bars[t].ticker, bars[t].minute_start, direction, RSI))
    return signals


def stochastic_signals(
    bars: Sequence[MinuteBar], params: IndicatorParams = IndicatorParams()
) -> list[TechnicalSignal]:
    """%K/%D cross signals gated to fire only inside the oversold/overbought zones."""
    lookback = params.stoch_lookback
    d_period = params.stoch_d_period
    needed = lookback + d_period
    if len(bars) < needed:
        raise InsufficientData(needed, len(bars))
    k_values, d_values = stochastic(bars, params)
    # align %K to %D: d_values[j] pairs with k_values[j + d_period - 1]
    pairs = [(k_values[j + d_period - 1], d_values[j]) for j in range(len(d_values))]
    first_pair_index = lookback + d_period - 2
    signals = []
    for i in range(1, len(pairs)):
        (k_prev, d_prev), (k_now, d_now) = pairs[i - 1], pairs[i]
        direction = HOLD
        if k_prev <= d_prev and k_now > d_now:
            if k_now < params.stoch_oversold and d_now < params.stoch_oversold:
                direction = LONG
        elif k_prev >= d_prev and k_now < d_now:
            if k_now > params.stoch_overbought and d_now > params.stoch_overbought:
                direction = SHORT
        t = first_pair_index + i
        signals.append(
            TechnicalSignal(bars[t].ticker, bars[t].minute_start, direction, STOCHASTIC)
        )
    return signals


SIGNAL_FUNCTIONS = {
    SMA_CROSSOVER: sma_crossover_signals,
    RSI: rsi_signals,
    STOCHASTIC: stochastic_signals,
}


def signals_for(
    strategy: str, bars: Sequence[MinuteBar], params: IndicatorParams = IndicatorParams()
) -> list[TechnicalSignal]:
    try:
        fn = SIGNAL_FUNCTIONS[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}") from None
    return fn(bars, params)


def actionable_from_index(strategy: str, params: IndicatorParams = IndicatorParams()) -> int:
    """First bar index whose signal a trading consumer should act on.

    The EMA crossover emits from bar 1 but its seeded averages carry warmup
    bias, so it only goes live once a full slow window has been seen. The
    oscillators are gated by their own arithmetic and need no extra delay.
    """
    if strategy == SMA_CROSSOVER:
        return params.slow_window
    if strategy == RSI:
        return params.rsi_period + 1
    if strategy == STOCHASTIC:
        return params.stoch_lookback + params.stoch_d_period - 1
    raise ValueError(f"unknown strategy {strategy!r}")
