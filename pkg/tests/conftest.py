import random

import pytest

from tickfuse.bars import MINUTE_MS, MinuteBar

# any epoch on an exact minute boundary
BASE_MINUTE = 28_333_334 * MINUTE_MS


def make_bar(ticker="TEST", index=0, vwap=100.0, high=None, low=None, close=None,
             volume=1000.0, trade_count=10):
    high = vwap if high is None else high
    low = vwap if low is None else low
    close = vwap if close is None else close
    high = max(high, vwap, close)
    low = min(low, vwap, close)
    return MinuteBar(
        ticker=ticker,
        minute_start=BASE_MINUTE + index * MINUTE_MS,
        vwap=vwap,
        high=high,
        low=low,
        close=close,
        total_volume=volume,
        trade_count=trade_count,
    )


def random_walk_bars(rng: random.Random, n: int, ticker="TEST", start_price=100.0,
                     step=0.01) -> list[MinuteBar]:
    """Random-walk window satisfying every bar invariant."""
    bars = []
    price = start_price
    for i in range(n):
        price = max(1.0, price * (1.0 + rng.uniform(-step, step)))
        spread = price * rng.uniform(0.0005, 0.01)
        high = price + spread * rng.random()
        low = price - spread * rng.random()
        close = rng.uniform(low, high)
        vwap = rng.uniform(low, high)
        bars.append(
            MinuteBar(
                ticker=ticker,
                minute_start=BASE_MINUTE + i * MINUTE_MS,
                vwap=vwap,
                high=high,
                low=low,
                close=close,
                total_volume=rng.uniform(100, 10_000),
                trade_count=rng.randint(1, 200),
            )
        )
    return bars


@pytest.fixture
def rng():
    return random.Random(20240217)
