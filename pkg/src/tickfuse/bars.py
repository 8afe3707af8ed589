"""Minute-bar aggregation: ticks in, VWAP bars out, bounded rolling windows.

VWAP for a minute is sum(price * volume) / sum(volume) over the minute's
ticks. Zero-volume prints still stretch high/low/close but never touch the
VWAP terms, so the average stays volume-weighted. Minutes without any volume
emit no bar at all; downstream consumers treat the bar sequence itself as the
time axis.
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from .errors import TickfuseError
from .market_data import Tick

MINUTE_MS = 60_000

BAR_CSV_HEADER = ["ticker", "minute_start_ms", "vwap", "high", "low", "close", "volume"]


class TickerMismatch(TickfuseError):
    def __init__(self, expected: str, got: str):
        super().__init__(f"expected ticker {expected}, got {got}")
        self.expected = expected
        self.got = got


class OutOfOrderBar(TickfuseError):
    def __init__(self, last_start: int, pushed_start: int):
        super().__init__(
            f"bar minute_start {pushed_start} not after last {last_start}"
        )
        self.last_start = last_start
        self.pushed_start = pushed_start


def minute_floor(timestamp_ms: int) -> int:
    return (timestamp_ms // MINUTE_MS) * MINUTE_MS


@dataclass(frozen=True)
class MinuteBar:
    """One ticker-minute: VWAP plus the high/low/close the oscillators need."""

    ticker: str
    minute_start: int
    vwap: float
    high: float
    low: float
    close: float
    total_volume: float
    trade_count: int

    def __post_init__(self):
        if self.minute_start % MINUTE_MS != 0:
            raise ValueError(f"minute_start {self.minute_start} not on a minute boundary")
        if self.total_volume <= 0:
            raise ValueError("total_volume must be positive")
        if self.trade_count <= 0:
            raise ValueError("trade_count must be positive")
        if not (self.low <= self.vwap <= self.high):
            raise ValueError(f"vwap {self.vwap} outside [{self.low}, {self.high}]")
        if not (self.low <= self.close <= self.high):
            raise ValueError(f"close {self.close} outside [{self.low}, {self.high}]")


class MinuteAccumulator:
    """Running per-minute state: O(1) per tick, closed into a MinuteBar.

    Zero-volume ticks update high/low/close and the trade count but leave the
    VWAP sums untouched.
    """

    def __init__(self, ticker: str, minute_start: int):
        self.ticker = ticker
        self.minute_start = minute_start
        self.sum_pv = 0.0
        self.sum_v = 0.0
        self.high: float | None = None
        self.low: float | None = None
        self.close: float | None = None
        self.count = 0

    def add(self, tick: Tick) -> None:
        if tick.ticker != self.ticker:
            raise TickerMismatch(self.ticker, tick.ticker)
        self.sum_pv += tick.price * tick.volume
        self.sum_v += tick.volume
        self.high = tick.price if self.high is None else max(self.high, tick.price)
        self.low = tick.price if self.low is None else min(self.low, tick.price)
        self.close = tick.price
        self.count += 1

    def close_minute(self) -> MinuteBar | None:
        """Emit the bar, or None when the minute carried no volume."""
        if self.sum_v <= 0:
            return None
        # the quotient can land one ulp outside the traded range; the true
        # VWAP is a convex combination of trade prices, so clamping is exact
        vwap = min(max(self.sum_pv / self.sum_v, self.low), self.high)
        return MinuteBar(
            ticker=self.ticker,
            minute_start=self.minute_start,
            vwap=vwap,
            high=self.high,
            low=self.low,
            close=self.close,
            total_volume=self.sum_v,
            trade_count=self.count,
        )


class BarWindow:
    """Bounded chronological window of one ticker's bars; oldest bar evicted at capacity."""

    DEFAULT_CAPACITY = 500

    def __init__(self, ticker: str, capacity: int = DEFAULT_CAPACITY):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.ticker = ticker
        self.capacity = capacity
        self._bars: deque[MinuteBar] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._bars)

    def push(self, bar: MinuteBar) -> None:
        if bar.ticker != self.ticker:
            raise TickerMismatch(self.ticker, bar.ticker)
        if self._bars and bar.minute_start <= self._bars[-1].minute_start:
            raise OutOfOrderBar(self._bars[-1].minute_start, bar.minute_start)
        self._bars.append(bar)

    def snapshot(self) -> tuple[MinuteBar, ...]:
        """Immutable copy for readers; safe to hand across threads."""
        return tuple(self._bars)

    @property
    def last(self) -> MinuteBar | None:
        return self._bars[-1] if self._bars else None


class BarBuilder:
    """Routes one ticker's ticks into minute accumulators and closes bars.

    Minute attribution is floor(timestamp / 60s). Ticks older than the open
    minute belong to an already-closed bar; they are dropped and counted
    rather than reopening history.
    """

    def __init__(self, ticker: str):
        self.ticker = ticker
        self._open: MinuteAccumulator | None = None
        self.late_dropped = 0

    @property
    def open_minute_start(self) -> int | None:
        return self._open.minute_start if self._open else None

    def add(self, tick: Tick) -> list[MinuteBar]:
        """Feed one tick; returns any bars closed by crossing a minute boundary."""
        if tick.ticker != self.ticker:
            raise TickerMismatch(self.ticker, tick.ticker)
        minute = minute_floor(tick.timestamp)
        closed: list[MinuteBar] = []
        if self._open is None:
            self._open = MinuteAccumulator(self.ticker, minute)
        elif minute < self._open.minute_start:
            self.late_dropped += 1
            return closed
        elif minute > self._open.minute_start:
            bar = self._open.close_minute()
            if bar is not None:
                closed.append(bar)
            self._open = MinuteAccumulator(self.ticker, minute)
        self._open.add(tick)
        return closed

    def close_due(self, now_ms: int) -> list[MinuteBar]:
        """Close the open minute once the clock has moved past its end."""
        if self._open is None or now_ms < self._open.minute_start + MINUTE_MS:
            return []
        bar = self._open.close_minute()
        self._open = None
        return [bar] if bar is not None else []

    def flush(self) -> list[MinuteBar]:
        """Close whatever is open; used at end of a replay."""
        if self._open is None:
            return []
        bar = self._open.close_minute()
        self._open = None
        return [bar] if bar is not None else []


def write_bars_csv(target: str | IO[str], bars: Iterable[MinuteBar]) -> None:
    """Historical-bar CSV used by backtests (trade_count is not persisted)."""

    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BAR_CSV_HEADER)
        for bar in bars:
            writer.writerow(
                [
                    bar.ticker,
                    str(bar.minute_start),
                    repr(bar.vwap),
                    repr(bar.high),
                    repr(bar.low),
                    repr(bar.close),
                    repr(bar.total_volume),
                ]
            )

    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(target)


def read_bars_csv(source: str | IO[str]) -> list[MinuteBar]:
    """Load bars back from the CSV format; rows must satisfy bar invariants."""

    def _read(fh: IO[str]) -> Iterator[MinuteBar]:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and [h.strip() for h in header] != BAR_CSV_HEADER:
            raise ValueError(f"unexpected bar CSV header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise ValueError(f"row {line_no}: expected 7 fields, got {len(row)}")
            try:
                yield MinuteBar(
                    ticker=row[0],
                    minute_start=int(row[1]),
                    vwap=float(row[2]),
                    high=float(row[3]),
                    low=float(row[4]),
                    close=float(row[5]),
                    total_volume=float(row[6]),
                    trade_count=1,  # not carried by the file format
                )
            except ValueError as exc:
                raise ValueError(f"row {line_no}: {exc}") from exc

    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return list(_read(fh))
    return list(_read(source))
