"""Live pipeline orchestration and the REST surface the dashboard polls.

Data flow: feed ticks -> per-ticker minute bars -> indicator signals -> fusion
with the latest sentiment -> published state snapshots. Bars and their
signals are published together as one unit, so a state read can never pair a
bar with a stale signal. The simulated-trade journal is an append-only JSONL
file replayed at startup.
"""
from __future__ import annotations

import json
import logging
import os
import queue
import threading
import time
from dataclasses import dataclass
from typing import IO, Callable, Iterable

from .bars import MINUTE_MS, BarBuilder, BarWindow, MinuteBar
from .config import EngineConfig
from .errors import TickfuseError
from .indicators import (
    STRATEGIES,
    InsufficientData,
    TechnicalSignal,
    signals_for,
)
from .market_data import (
    TICKER_PATTERN,
    InvalidTicker,
    Tick,
    TickerSet,
    TickGate,
    WebSocketTickFeed,
    replay_ticks,
    update_tickers,
)
from .sentiment import (
    KeywordSentimentProvider,
    ProviderUnavailable,
    SentimentScore,
    SentimentStore,
    TextSource,
    TitleSummarizer,
    score_text,
    summarize,
)
from .strategy import fuse

logger = logging.getLogger(__name__)

SIGNAL_LOG_HEADER = "minute_start_ms,ticker,vwap,sma_crossover,rsi,stochastic"

LONG_SIDE = "long"
SHORT_SIDE = "short"


class UnknownTicker(TickfuseError):
    def __init__(self, ticker: str):
        super().__init__(f"ticker {ticker!r} is not active")
        self.ticker = ticker


class ValidationError(TickfuseError):
    pass


@dataclass(frozen=True)
class SimulatedTrade:
    """A user-logged paper trade, journaled for later performance review."""

    id: int
    ticker: str
    side: str
    quantity: float
    price: float
    logged_at: int
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "ticker": self.ticker,
            "side": self.side,
            "quantity": self.quantity,
            "price": self.price,
            "logged_at": self.logged_at,
            "note": self.note,
        }


class TradeJournal:
    """Append-only JSONL trade log; ids stay monotone across restarts."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._trades: list[SimulatedTrade] = []
        self._next_id = 1
        self._replay()

    def _replay(self) -> None:
        if not os.path.exists(self.path):
            return
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                trade = SimulatedTrade(
                    id=int(row["id"]),
                    ticker=row["ticker"],
                    side=row["side"],
                    quantity=float(row["quantity"]),
                    price=float(row["price"]),
                    logged_at=int(row["logged_at"]),
                    note=row.get("note", ""),
                )
                self._trades.append(trade)
                self._next_id = max(self._next_id, trade.id + 1)

    def append(self, ticker: str, side: str, quantity: float, price: float,
               logged_at: int, note: str = "") -> SimulatedTrade:
        if not TICKER_PATTERN.match(ticker):
            raise ValidationError(f"bad ticker {ticker!r}")
        if side not in (LONG_SIDE, SHORT_SIDE):
            raise ValidationError(f"side must be long or short, got {side!r}")
        if not quantity > 0:
            raise ValidationError("quantity must be positive")
        if not price > 0:
            raise ValidationError("price must be positive")
        with self._lock:
            trade = SimulatedTrade(self._next_id, ticker, side, quantity, price, logged_at, note)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(trade.to_dict(), sort_keys=True) + "\n")
                fh.flush()
            self._trades.append(trade)
            self._next_id += 1
            return trade

    def list(self) -> list[SimulatedTrade]:
        with self._lock:
            return list(self._trades)


def _signal_dict(sig: TechnicalSignal) -> dict:
    return {"direction": sig.direction, "bar_time": sig.bar_time}


def _bar_dict(bar: MinuteBar) -> dict:
    return {
        "minute_start": bar.minute_start,
        "vwap": bar.vwap,
        "high": bar.high,
        "low": bar.low,
        "close": bar.close,
        "volume": bar.total_volume,
        "trade_count": bar.trade_count,
    }


@dataclass
class ReplayStats:
    ticks: int = 0
    bars: int = 0
    elapsed_s: float = 0.0

    @property
    def ticks_per_second(self) -> float:
        return self.ticks / self.elapsed_s if self.elapsed_s > 0 else float("inf")


class PipelineEngine:
    """Single place where ticks, bars, signals, sentiment and trades meet.

    One lock serializes all mutation (tick routing, publishes, watchlist
    updates); HTTP readers assemble their response under the same lock, so
    every state snapshot is internally consistent.
    """

    def __init__(
        self,
        config: EngineConfig | None = None,
        provider=None,
        summarizer=None,
        text_sources: Iterable[TextSource] = (),
        clock: Callable[[], int] | None = None,
    ):
        self.config = config or EngineConfig()
        self.provider = provider or KeywordSentimentProvider()
        self.summarizer = summarizer or TitleSummarizer()
        self.text_sources = list(text_sources)
        self.clock = clock or (lambda: int(time.time() * 1000))

        self._lock = threading.RLock()
        self.ticker_set = TickerSet()
        self.gate = TickGate(self.ticker_set)
        self._builders: dict[str, BarBuilder] = {}
        self._windows: dict[str, BarWindow] = {}
        self._published: dict[str, dict] = {}
        self._data_time_ms = 0

        self.sentiment_store = SentimentStore()
        self._last_fetch_ms: dict[str, int] = {}
        self.journal = TradeJournal(self.config.journal_path)

        self._stop_event = threading.Event()
        self._threads: list[threading.Thread] = []
        self._feed: WebSocketTickFeed | None = None

        if self.config.tickers:
            self.submit_tickers(self.config.tickers)

    # ------------------------------------------------------------------ ticks

    def process_tick(self, tick: Tick, admit_all: bool = False) -> list[str]:
        """Route one tick; returns signal-log lines for any bars it closed."""
        with self._lock:
            if admit_all and tick.ticker not in self.ticker_set:
                self.ticker_set = TickerSet(
                    tickers=tuple(sorted(set(self.ticker_set.tickers) | {tick.ticker})),
                    revision=self.ticker_set.revision,
                )
                self.gate.active = self.ticker_set
            if not self.gate.admit(tick):
                return []
            self._data_time_ms = max(self._data_time_ms, tick.timestamp)
            builder = self._builders.get(tick.ticker)
            if builder is None:
                builder = self._builders[tick.ticker] = BarBuilder(tick.ticker)
            closed = builder.add(tick)
            return [self._publish(bar) for bar in closed]

    def close_due(self, now_ms: int | None = None) -> list[str]:
        """Close open minutes whose boundary has passed (live clock sweep)."""
        now = self.clock() if now_ms is None else now_ms
        with self._lock:
            lines = []
            for ticker in sorted(self._builders):
                for bar in self._builders[ticker].close_due(now):
                    lines.append(self._publish(bar))
            return lines

    def flush_all(self) -> list[str]:
        """Close every open minute; used when a replay stream ends."""
        with self._lock:
            lines = []
            for ticker in sorted(self._builders):
                for bar in self._builders[ticker].flush():
                    lines.append(self._publish(bar))
            return lines

    def _publish(self, bar: MinuteBar) -> str:
        # caller holds the lock
        window = self._windows.get(bar.ticker)
        if window is None:
            window = self._windows[bar.ticker] = BarWindow(bar.ticker, self.config.bar_capacity)
        window.push(bar)
        snap = window.snapshot()
        params = self.config.indicators

        latest: dict[str, TechnicalSignal | None] = {}
        # oscillators only need a short trailing slice for their newest value
        tails = {
            "sma_crossover": snap,
            "rsi": snap[-(params.rsi_period + 2):],
            "stochastic": snap[-(params.stoch_lookback + params.stoch_d_period):],
        }
        for strat in STRATEGIES:
            try:
                sigs = signals_for(strat, tails[strat], params)
                latest[strat] = sigs[-1] if sigs else None
            except InsufficientData:
                latest[strat] = None

        close_time = bar.minute_start + MINUTE_MS
        fusion = self.config.fusion_params()
        sentiment = self.sentiment_store.latest(bar.ticker, close_time, fusion.staleness_limit_ms)
        combined = {
            strat: fuse(sig, sentiment, self.config.mode, fusion)
            for strat, sig in latest.items()
            if sig is not None
        }

        self._published[bar.ticker] = {
            "bar": _bar_dict(bar),
            "signals": {s: _signal_dict(sig) for s, sig in latest.items() if sig is not None},
            "combined": {
                s: {
                    "direction": c.direction,
                    "size_fraction": c.size_fraction,
                    "rationale": c.rationale,
                    "bar_time": c.bar_time,
                    "mode": c.mode,
                }
                for s, c in combined.items()
            },
            "bar_count": len(snap),
        }

        def cell(strat: str) -> str:
            sig = latest[strat]
            return sig.direction if sig is not None else "n/a"

        return (
            f"{bar.minute_start},{bar.ticker},{bar.vwap!r},"
            f"{cell('sma_crossover')},{cell('rsi')},{cell('stochastic')}"
        )

    # -------------------------------------------------------------- watchlist

    def submit_tickers(self, symbols: list[str]) -> TickerSet:
        """Replace the watchlist; removed tickers lose their pipeline state."""
        with self._lock:
            new_set = update_tickers(self.ticker_set, symbols)
            removed = set(self.ticker_set.tickers) - set(new_set.tickers)
            self.ticker_set = new_set
            self.gate.active = new_set
            for ticker in removed:
                self._builders.pop(ticker, None)
                self._windows.pop(ticker, None)
                self._published.pop(ticker, None)
                self._last_fetch_ms.pop(ticker, None)
            logger.info("watchlist now %s (revision %d)", new_set.tickers, new_set.revision)
            return new_set

    # ------------------------------------------------------------------ state

    def _now_ms(self) -> int:
        return self._data_time_ms or self.clock()

    def get_state(self, ticker: str) -> dict:
        symbol = ticker.strip().upper()
        with self._lock:
            if symbol not in self.ticker_set:
                raise UnknownTicker(symbol)
            published = self._published.get(symbol)
            score = self.sentiment_store.latest(symbol, self._now_ms(), None)
            limit = self.config.fusion_params().staleness_limit_ms
            sentiment = None
            if score is not None:
                stale = limit is not None and self._now_ms() - score.as_of > limit
                sentiment = {
                    "label": score.label,
                    "confidence": score.confidence,
                    "as_of": score.as_of,
                    "summary": score.summary,
                    "stale": stale,
                }
            state = {
                "ticker": symbol,
                "revision": self.ticker_set.revision,
                "bar": published["bar"] if published else None,
                "signals": published["signals"] if published else {},
                "combined": published["combined"] if published else {},
                "bar_count": published["bar_count"] if published else 0,
                "sentiment": sentiment,
                "counters": {
                    "ingested": self.gate.ingested,
                    "dropped": self.gate.dropped,
                    "late_dropped": sum(b.late_dropped for b in self._builders.values()),
                },
            }
            return state

    # ----------------------------------------------------------------- trades

    def log_trade(self, ticker: str, side: str, quantity: float, price: float,
                  note: str = "") -> SimulatedTrade:
        return self.journal.append(
            ticker=str(ticker).strip().upper(),
            side=side,
            quantity=quantity,
            price=price,
            logged_at=self.clock(),
            note=note,
        )

    def list_trades(self) -> list[SimulatedTrade]:
        return self.journal.list()

    # -------------------------------------------------------------- sentiment

    def poll_text_sources(self) -> int:
        """One fetch/summarize/score sweep over the active tickers."""
        scored = 0
        for ticker in self.ticker_set.tickers:
            since = self._last_fetch_ms.get(ticker, 0)
            items = []
            for source in self.text_sources:
                try:
                    items.extend(source.fetch(ticker, since))
                except Exception as exc:
                    logger.warning("text source failed for %s: %s", ticker, exc)
            if not items:
                continue
            items.sort(key=lambda i: i.published_at)
            try:
                summary = summarize(self.summarizer, items)
                result = score_text(self.provider, summary)
            except ProviderUnavailable as exc:
                logger.warning("provider unavailable for %s, retry in %.0fs", ticker, exc.retry_after_s)
                continue
            as_of = max(i.published_at for i in items)
            self.sentiment_store.add(
                SentimentScore(ticker, as_of, result.label, result.confidence, summary)
            )
            self._last_fetch_ms[ticker] = as_of
            scored += 1
        return scored

    # ----------------------------------------------------------------- replay

    def replay(self, path: str, speed: float | None = None, sink: IO[str] | None = None) -> ReplayStats:
        """Run a tick CSV through the full pipeline, emitting the signal log.

        Tickers found in the file are admitted automatically. The log is
        deterministic: same file, same lines, byte for byte.
        """
        stats = ReplayStats()
        started = time.perf_counter()

        def emit(line: str) -> None:
            if sink is not None:
                sink.write(line + "\n")
            stats.bars += 1

        if sink is not None:
            sink.write(SIGNAL_LOG_HEADER + "\n")
        for tick in replay_ticks(path, speed):
            stats.ticks += 1
            for line in self.process_tick(tick, admit_all=True):
                emit(line)
        for line in self.flush_all():
            emit(line)
        stats.elapsed_s = time.perf_counter() - started
        return stats

    # ------------------------------------------------------------------- live

    def start_live(self) -> None:
        """Spawn the feed, minute-closer and text-polling workers."""
        self._stop_event.clear()
        tick_queue: queue.Queue[Tick] = queue.Queue(maxsize=100_000)

        self._feed = WebSocketTickFeed(self.config.feed_url, self.config.feed_token())

        def feed_worker() -> None:
            self._feed.run(lambda: self.ticker_set, tick_queue.put)

        def consume_worker() -> None:
            while not self._stop_event.is_set():
                try:
                    tick = tick_queue.get(timeout=0.5)
                except queue.Empty:
                    continue
                try:
                    self.process_tick(tick)
                except TickfuseError as exc:
                    logger.warning("dropped tick: %s", exc)

        def closer_worker() -> None:
            while not self._stop_event.wait(1.0):
                # small grace so stragglers land before the bar closes
                self.close_due(self.clock() - 2_000)

        def text_worker() -> None:
            while not self._stop_event.wait(self.config.text_poll_interval_s):
                try:
                    self.poll_text_sources()
                except Exception:
                    logger.exception("text polling sweep failed")

        workers = [feed_worker, consume_worker, closer_worker]
        if self.text_sources:
            workers.append(text_worker)
        for target in workers:
            thread = threading.Thread(target=target, name=target.__name__, daemon=True)
            thread.start()
            self._threads.append(thread)

    def stop(self) -> None:
        self._stop_event.set()
        if self._feed is not None:
            self._feed.stop()
        for thread in self._threads:
            thread.join(timeout=5.0)
        self._threads.clear()
