"""Position-based historical simulation with Sharpe and win-ratio reporting.

One position at a time per run: a decision opposite the open side closes it
at the current bar's VWAP (flipping realizes the profit or loss) and opens
the new side; repeat signals in the open direction never pyramid. Whatever
is still open at the last bar is closed at that bar's price. The model is
frictionless, sizes trades as a fraction of initial cash, and allows
fractional shares.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .bars import MinuteBar
from .errors import TickfuseError
from .indicators import (
    HOLD,
    LONG,
    SHORT,
    STRATEGIES,
    IndicatorParams,
    InsufficientData,
    TechnicalSignal,
    actionable_from_index,
    signals_for,
)
from .sentiment import SentimentScore
from .strategy import BASE, MODES, SENTIMENT, CombinedSignal, FusionParams, fuse

EXIT_FLIP = "flip"
EXIT_FINAL = "final"


class EmptyBars(TickfuseError):
    pass


class NonChronologicalInput(TickfuseError):
    pass


class ZeroVolatility(TickfuseError):
    pass


class InsufficientReturns(TickfuseError):
    pass


@dataclass(frozen=True)
class Position:
    ticker: str
    side: str
    quantity: float
    entry_price: float
    entry_time: int

    def __post_init__(self):
        if self.side not in (LONG, SHORT):
            raise ValueError(f"side must be long or short, got {self.side!r}")
        if self.quantity <= 0:
            raise ValueError("quantity must be positive")
        if self.entry_price <= 0:
            raise ValueError("entry_price must be positive")

    def unrealized(self, mark: float) -> float:
        if self.side == LONG:
            return self.quantity * (mark - self.entry_price)
        return self.quantity * (self.entry_price - mark)


@dataclass(frozen=True)
class TradeRecord:
    """A completed round trip; `winning` means strictly positive pnl."""

    ticker: str
    side: str
    quantity: float
    entry_price: float
    entry_time: int
    exit_price: float
    exit_time: int
    realized_pnl: float
    winning: bool
    exit_reason: str = EXIT_FLIP

    def to_dict(self) -> dict:
        return {
            "ticker": self.ticker,
            "side": self.side,
            "quantity": self.quantity,
            "entry_price": self.entry_price,
            "entry_time": self.entry_time,
            "exit_price": self.exit_price,
            "exit_time": self.exit_time,
            "realized_pnl": self.realized_pnl,
            "winning": self.winning,
            "exit_reason": self.exit_reason,
        }


@dataclass(frozen=True)
class BacktestConfig:
    initial_cash: float = 10_000.0
    mode: str = BASE
    strategy: str = "sma_crossover"
    indicator_params: IndicatorParams = field(default_factory=IndicatorParams)
    fusion_params: FusionParams = field(default_factory=FusionParams)

    def __post_init__(self):
        if self.initial_cash <= 0:
            raise ValueError("initial_cash must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")


@dataclass(frozen=True)
class BacktestReport:
    config: BacktestConfig
    trades: tuple[TradeRecord, ...]
    equity_curve: tuple[float, ...]
    bar_times: tuple[int, ...]
    sharpe: float | None
    win_ratio: float | None

    @property
    def trade_count(self) -> int:
        return len(self.trades)

    @property
    def final_equity(self) -> float:
        return self.equity_curve[-1]

    def to_dict(self) -> dict:
        return {
            "ticker": self.trades[0].ticker if self.trades else None,
            "mode": self.config.mode,
            "strategy": self.config.strategy,
            "initial_cash": self.config.initial_cash,
            "trade_count": self.trade_count,
            "sharpe": self.sharpe,
            "win_ratio": self.win_ratio,
            "final_equity": self.final_equity,
            "trades": [t.to_dict() for t in self.trades],
            "equity_curve": list(self.equity_curve),
            "bar_times": list(self.bar_times),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def sharpe_ratio(returns: Sequence[float], risk_free: float = 0.0) -> float:
    """Mean excess return over the sample standard deviation of returns.

    Per-period and unannualized; ddof = 1. Raises ZeroVolatility when the
    returns carry no spread and InsufficientReturns below two observations.
    """
    if len(returns) < 2:
        raise InsufficientReturns(f"need at least 2 returns, got {len(returns)}")
    arr = np.asarray(returns, dtype=float)
    sigma = float(arr.std(ddof=1))
    if sigma == 0.0:
        raise ZeroVolatility("returns have zero standard deviation")
    return float((arr.mean() - risk_free) / sigma)


def win_ratio(trades: Sequence[TradeRecord]) -> float | None:
    """Winning trades over total trades; None when there were no trades."""
    if not trades:
        return None
    return sum(1 for t in trades if t.winning) / len(trades)


def _close(position: Position, price: float, time_ms: int, reason: str) -> TradeRecord:
    pnl = position.unrealized(price)
    return TradeRecord(
        ticker=position.ticker,
        side=position.side,
        quantity=position.quantity,
        entry_price=position.entry_price,
        entry_time=position.entry_time,
        exit_price=price,
        exit_time=time_ms,
        realized_pnl=pnl,
        winning=pnl > 0,
        exit_reason=reason,
    )


def _validate_inputs(bars: Sequence[MinuteBar], sentiments: Sequence[SentimentScore]) -> None:
    if not bars:
        raise EmptyBars("no bars to simulate")
    tickers = {b.ticker for b in bars}
    if len(tickers) > 1:
        raise ValueError(f"bars span multiple tickers: {sorted(tickers)}")
    for prev, cur in zip(bars, bars[1:]):
        if cur.minute_start <= prev.minute_start:
            raise NonChronologicalInput(
                f"bar at {cur.minute_start} not after {prev.minute_start}"
            )
    for prev, cur in zip(sentiments, sentiments[1:]):
        if cur.as_of < prev.as_of:
            raise NonChronologicalInput(
                f"sentiment at {cur.as_of} before {prev.as_of}"
            )


def run_backtest(
    bars: Sequence[MinuteBar],
    sentiments: Sequence[SentimentScore],
    config: BacktestConfig,
) -> BacktestReport:
    """Simulate one ticker's bars under the configured strategy and mode.

    Decisions at a bar execute at that bar's VWAP and see only bars up to it
    and sentiment scores with as_of at or before its minute. In sentiment
    mode a score stays in force until the next one arrives (historical text
    is sparse; no timeout). The run is a pure function of its inputs.
    """
    _validate_inputs(bars, sentiments)
    ticker = bars[0].ticker
    relevant = [s for s in sentiments if s.ticker == ticker]

    try:
        signals = signals_for(config.strategy, bars, config.indicator_params)
    except InsufficientData:
        signals = []
    live_from = actionable_from_index(config.strategy, config.indicator_params)
    offset = len(bars) - len(signals)
    direction_at = {
        signals[i].bar_time: signals[i].direction
        for i in range(len(signals))
        if offset + i >= live_from
    }
    # backtests let a score stand until superseded
    backtest_fusion = replace(config.fusion_params, staleness_limit_ms=None)

    position: Position | None = None
    trades: list[TradeRecord] = []
    realized = 0.0
    equity: list[float] = []
    sent_idx = -1

    for bar in bars:
        while sent_idx + 1 < len(relevant) and relevant[sent_idx + 1].as_of <= bar.minute_start:
            sent_idx += 1
        current_sentiment = relevant[sent_idx] if sent_idx >= 0 else None

        direction = direction_at.get(bar.minute_start, HOLD)
        if direction != HOLD:
            technical = TechnicalSignal(ticker, bar.minute_start, direction, config.strategy)
            decision = fuse(technical, current_sentiment, config.mode, backtest_fusion)
            if decision.direction != HOLD:
                if position is not None and position.side != decision.direction:
                    trade = _close(position, bar.vwap, bar.minute_start, EXIT_FLIP)
                    trades.append(trade)
                    realized += trade.realized_pnl
                    position = None
                if position is None:
                    quantity = decision.size_fraction * config.initial_cash / bar.vwap
                    position = Position(ticker, decision.direction, quantity, bar.vwap, bar.minute_start)
        mark = position.unrealized(bar.vwap) if position else 0.0
        equity.append(config.initial_cash + realized + mark)

    if position is not None:
        last = bars[-1]
        trade = _close(position, last.vwap, last.minute_start, EXIT_FINAL)
        trades.append(trade)
        realized += trade.realized_pnl
        equity[-1] = config.initial_cash + realized

    returns = [
        (equity[i] - equity[i - 1]) / equity[i - 1]
        for i in range(1, len(equity))
        if equity[i - 1] > 0
    ]
    try:
        sharpe = sharpe_ratio(returns)
    except (ZeroVolatility, InsufficientReturns):
        sharpe = None

    return BacktestReport(
        config=config,
        trades=tuple(trades),
        equity_curve=tuple(equity),
        bar_times=tuple(b.minute_start for b in bars),
        sharpe=sharpe,
        win_ratio=win_ratio(trades),
    )


@dataclass(frozen=True)
class ComparisonRow:
    """Base-vs-sentiment cells for one (ticker, strategy)."""

    ticker: str
    strategy: str
    base_sharpe: float | None
    base_win_ratio: float | None
    base_trades: int
    sentiment_sharpe: float | None
    sentiment_win_ratio: float | None
    sentiment_trades: int


def compare_modes(
    bars: Sequence[MinuteBar],
    sentiments: Sequence[SentimentScore],
    configs: Sequence[BacktestConfig],
) -> list[ComparisonRow]:
    """Run every config in both modes, one row per (ticker, strategy).

    Each grid config is expanded to a base arm and a sentiment arm over the
    same bars, so the two columns differ only by the sentiment gate.
    """
    if not configs:
        raise ValueError("config grid is empty")
    by_ticker: dict[str, list[MinuteBar]] = {}
    for bar in bars:
        by_ticker.setdefault(bar.ticker, []).append(bar)
    rows = []
    for ticker in sorted(by_ticker):
        ticker_bars = by_ticker[ticker]
        ticker_sents = [s for s in sentiments if s.ticker == ticker]
        for config in configs:
            base_report = run_backtest(ticker_bars, ticker_sents, replace(config, mode=BASE))
            sent_report = run_backtest(ticker_bars, ticker_sents, replace(config, mode=SENTIMENT))
            rows.append(
                ComparisonRow(
                    ticker=ticker,
                    strategy=config.strategy,
                    base_sharpe=base_report.sharpe,
                    base_win_ratio=base_report.win_ratio,
                    base_trades=base_report.trade_count,
                    sentiment_sharpe=sent_report.sharpe,
                    sentiment_win_ratio=sent_report.win_ratio,
                    sentiment_trades=sent_report.trade_count,
                )
            )
    return rows


def _cell(value: float | None, fmt: str) -> str:
    # undefined metrics render as n/a, never as a fake 0
    return "n/a" if value is None else format(value, fmt)


def render_comparison_csv(rows: Iterable[ComparisonRow]) -> str:
    lines = [
        "ticker,strategy,base_sharpe,base_win_ratio,base_trades,"
        "sentiment_sharpe,sentiment_win_ratio,sentiment_trades"
    ]
    for r in rows:
        lines.append(
            f"{r.ticker},{r.strategy},{_cell(r.base_sharpe, '.4f')},"
            f"{_cell(r.base_win_ratio, '.4f')},{r.base_trades},"
            f"{_cell(r.sentiment_sharpe, '.4f')},{_cell(r.sentiment_win_ratio, '.4f')},"
            f"{r.sentiment_trades}"
        )
    return "\n".join(lines) + "\n"


def render_comparison_text(rows: Sequence[ComparisonRow]) -> str:
    """Aligned table with base and sentiment Sharpe / win-ratio columns."""
    header = (
        f"{'Ticker':<8} {'Strategy':<14} {'Base Sharpe':>12} {'Sent Sharpe':>12} "
        f"{'Base Win':>9} {'Sent Win':>9} {'Base N':>7} {'Sent N':>7}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        base_win = "n/a" if r.base_win_ratio is None else f"{100 * r.base_win_ratio:.1f}%"
        sent_win = "n/a" if r.sentiment_win_ratio is None else f"{100 * r.sentiment_win_ratio:.1f}%"
        lines.append(
            f"{r.ticker:<8} {r.strategy:<14} {_cell(r.base_sharpe, '.2f'):>12} "
            f"{_cell(r.sentiment_sharpe, '.2f'):>12} {base_win:>9} {sent_win:>9} "
            f"{r.base_trades:>7} {r.sentiment_trades:>7}"
        )
    return "\n".join(lines) + "\n"
