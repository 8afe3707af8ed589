"""Trade-tick ingestion: wire-message parsing, CSV replay, and watchlist management.

Live ticks arrive as JSON trade messages over a WebSocket feed; deterministic
runs replay the same ticks from a CSV file. Both paths normalize into Tick
values before anything downstream sees them.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import re
import time
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Iterator, Sequence

from .errors import TickfuseError

logger = logging.getLogger(__name__)

TICKER_PATTERN = re.compile(r"^[A-Z.\-]{1,10}$")

REPLAY_CSV_HEADER = ["ticker", "timestamp_ms", "price", "volume"]


class MalformedMessage(TickfuseError):
    """A feed message is not valid JSON or contains an invalid trade entry."""

    def __init__(self, reason: str, offset: int = 0):
        super().__init__(f"malformed message at offset {offset}: {reason}")
        self.reason = reason
        self.offset = offset


class InvalidTicker(TickfuseError):
    """One or more requested symbols fail validation; the request is rejected whole."""

    def __init__(self, rejected: Sequence[str]):
        super().__init__(f"invalid ticker symbols: {', '.join(rejected)}")
        self.rejected = list(rejected)


class ReplayOrderViolation(TickfuseError):
    """A replay row moves backwards in time within one ticker."""

    def __init__(self, row: int, ticker: str):
        super().__init__(f"row {row}: timestamp for {ticker} goes backwards")
        self.row = row
        self.ticker = ticker


class RowParseError(TickfuseError):
    """A replay row cannot be turned into a valid Tick."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


@dataclass(frozen=True)
class Tick:
    """One trade print: symbol, epoch-ms timestamp, price and size."""

    ticker: str
    timestamp: int
    price: float
    volume: float

    def __post_init__(self):
        if not TICKER_PATTERN.match(self.ticker):
            raise ValueError(f"bad ticker {self.ticker!r}")
        if self.timestamp <= 0:
            raise ValueError(f"timestamp must be positive, got {self.timestamp}")
        if not (self.price > 0) or not math.isfinite(self.price):
            raise ValueError(f"price must be positive and finite, got {self.price}")
        if self.volume < 0 or not math.isfinite(self.volume):
            raise ValueError(f"volume must be >= 0 and finite, got {self.volume}")


@dataclass(frozen=True)
class TickerSet:
    """The active watchlist plus a revision counter bumped on every update."""

    tickers: tuple[str, ...] = ()
    revision: int = 0

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.tickers


def parse_trade_message(raw: str) -> list[Tick]:
    """Parse one feed message into Ticks.

    Non-trade messages (pings, acks) yield an empty list. Raises
    MalformedMessage when the payload is not JSON or a trade entry violates
    Tick invariants; the error carries the offending offset.
    """
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"invalid JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(payload, dict):
        raise MalformedMessage("top-level value is not an object")
    if payload.get("type") != "trade":
        return []
    data = payload.get("data")
    if not isinstance(data, list):
        raise MalformedMessage("trade message without a data list")
    ticks = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise MalformedMessage("trade entry is not an object", offset=i)
        try:
            tick = Tick(
                ticker=str(entry["s"]),
                timestamp=int(entry["t"]),
                price=float(entry["p"]),
                volume=float(entry["v"]),
            )
        except KeyError as exc:
            raise MalformedMessage(f"trade entry missing field {exc}", offset=i) from exc
        except (TypeError, ValueError) as exc:
            raise MalformedMessage(str(exc), offset=i) from exc
        ticks.append(tick)
    return ticks


def subscribe_message(symbol: str) -> str:
    """Wire message sent per ticker when (re)connecting the live feed."""
    return json.dumps({"type": "subscribe", "symbol": symbol})


def normalize_symbols(requested: Iterable[str]) -> list[str]:
    """Uppercase, validate and dedupe symbols; raises InvalidTicker listing every reject."""
    seen: dict[str, None] = {}
    rejected = []
    for raw in requested:
        symbol = str(raw).strip().upper()
        if not TICKER_PATTERN.match(symbol):
            rejected.append(raw)
            continue
        seen.setdefault(symbol, None)
    if rejected:
        raise InvalidTicker(rejected)
    return sorted(seen)


def update_tickers(current: TickerSet, requested: Iterable[str]) -> TickerSet:
    """Replace the watchlist with a validated, deduplicated, uppercased set.

    The whole request is rejected atomically if any symbol is invalid. The
    revision bump is the restart signal consumed by subscription pipelines.
    """
    symbols = normalize_symbols(requested)
    return TickerSet(tickers=tuple(symbols), revision=current.revision + 1)


class TickGate:
    """Admission filter in front of the bar pipeline.

    Ticks for symbols outside the active set are dropped silently but counted;
    subscriptions can lag a watchlist update, so a drop is not an error.
    """

    def __init__(self, active: TickerSet | None = None):
        self.active = active or TickerSet()
        self.ingested = 0
        self.dropped = 0

    def admit(self, tick: Tick) -> bool:
        if tick.ticker in self.active:
            self.ingested += 1
            return True
        self.dropped += 1
        return False


def _parse_row(row: Sequence[str], line_no: int) -> Tick:
    if len(row) != 4:
        raise RowParseError(line_no, f"expected 4 fields, got {len(row)}")
    ticker, ts_text, price_text, volume_text = row
    try:
        return Tick(
            ticker=ticker.strip(),
            timestamp=int(ts_text),
            price=float(price_text),
            volume=float(volume_text),
        )
    except ValueError as exc:
        raise RowParseError(line_no, str(exc)) from exc


def replay_ticks(
    source: str | IO[str],
    speed: float | None = None,
    sleep=time.sleep,
) -> Iterator[Tick]:
    """Yield Ticks from a replay CSV (header `ticker,timestamp_ms,price,volume`).

    `speed` is a playback-rate factor: 2.0 replays twice as fast as recorded,
    None (or inf) replays as fast as possible. The emitted Tick sequence is
    identical either way; only wall-clock pacing differs. Timestamps must be
    non-decreasing within each ticker or ReplayOrderViolation is raised.
    """
    if speed is not None and speed <= 0:
        raise ValueError("speed factor must be positive")

    def _generate(fh: IO[str]) -> Iterator[Tick]:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and [h.strip() for h in header] != REPLAY_CSV_HEADER:
            raise RowParseError(1, f"unexpected header {header!r}")
        last_seen: dict[str, int] = {}
        prev_ts: int | None = None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            tick = _parse_row(row, line_no)
            last = last_seen.get(tick.ticker)
            if last is not None and tick.timestamp < last:
                raise ReplayOrderViolation(line_no, tick.ticker)
            last_seen[tick.ticker] = tick.timestamp
            if speed is not None and math.isfinite(speed) and prev_ts is not None:
                gap_s = max(tick.timestamp - prev_ts, 0) / 1000.0
                if gap_s > 0:
                    sleep(gap_s / speed)
            prev_ts = tick.timestamp
            yield tick

    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            yield from _generate(fh)
    else:
        yield from _generate(source)


class WebSocketTickFeed:
    """Single-producer live feed: one connection, subscribe per ticker, push ticks out.

    Reconnects with a fixed delay on any transport failure and resubscribes to
    the watchlist current at connect time. A revision change forces a
    reconnect so new subscriptions take effect.
    """

    def __init__(self, url: str, api_key: str = "", retry_delay_s: float = 3.0):
        self.url = url
        self.api_key = api_key
        self.retry_delay_s = retry_delay_s
        self._stop = False

    def stop(self) -> None:
        self._stop = True

    def run(self, tickers: Callable[[], TickerSet], emit: Callable[[Tick], None]) -> None:
        """Blocking pump loop; `emit(tick)` is called for every parsed trade.

        `tickers` returns the current watchlist; the feed polls it to notice
        revision bumps and reconnect with fresh subscriptions.
        """
        import asyncio

        asyncio.run(self._pump(tickers, emit))

    async def _pump(self, tickers, emit) -> None:
        import asyncio

        import websockets

        while not self._stop:
            active = tickers()
            url = self.url
            if self.api_key:
                sep = "&" if "?" in url else "?"
                url = f"{url}{sep}token={self.api_key}"
            try:
                async with websockets.connect(url) as ws:
                    for symbol in active.tickers:
                        await ws.send(subscribe_message(symbol))
                    logger.info("feed connected, %d subscriptions", len(active.tickers))
                    while not self._stop:
                        if tickers().revision != active.revision:
                            logger.info("watchlist revision changed, reconnecting")
                            break
                        try:
                            raw = await asyncio.wait_for(ws.recv(), timeout=1.0)
                        except asyncio.TimeoutError:
                            continue
                        try:
                            for tick in parse_trade_message(raw):
                                emit(tick)
                        except MalformedMessage as exc:
                            logger.warning("dropping malformed message: %s", exc)
            except Exception as exc:  # transport failures use the fixed retry policy
                if self._stop:
                    return
                logger.warning("feed connection lost (%s), retrying in %.1fs", exc, self.retry_delay_s)
                await asyncio.sleep(self.retry_delay_s)


def format_tick_row(tick: Tick) -> list[str]:
    # repr() keeps the shortest decimal that round-trips the float exactly
    return [tick.ticker, str(tick.timestamp), repr(tick.price), repr(tick.volume)]


def write_ticks_csv(target: str | IO[str], ticks: Iterable[Tick]) -> None:
    """Write ticks in the replay CSV format (UTF-8, LF, header row)."""

    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPLAY_CSV_HEADER)
        for tick in ticks:
            writer.writerow(format_tick_row(tick))

    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(target)
