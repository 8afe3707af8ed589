"""Fuse a technical signal with the prevailing sentiment into a sized decision.

Two modes:

- base: the technical direction trades as-is at 10% of initial cash.
- sentiment: sentiment gates the technical trigger. Agreement (positive vs
  long, negative vs short) keeps the direction and sizes up to 15% when the
  score's confidence clears the conviction threshold; disagreement vetoes the
  trade; stale or missing sentiment means no trade at all.

Sentiment never reverses a technical signal, it only vetoes or resizes it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .indicators import HOLD, LONG, SHORT, TechnicalSignal
from .sentiment import NEGATIVE, POSITIVE, SentimentScore

BASE = "base"
SENTIMENT = "sentiment"
MODES = (BASE, SENTIMENT)

BASE_SIZE = 0.10
HIGH_CONVICTION_SIZE = 0.15


@dataclass(frozen=True)
class FusionParams:
    """Conviction cut between the 10% and 15% trade sizes plus staleness policy.

    staleness_limit_ms None means a score stays actionable until superseded
    (the backtest reading of sparse historical text).
    """

    high_conviction_threshold: float = 0.8
    staleness_limit_ms: int | None = 3_600_000

    def __post_init__(self):
        if not (0 < self.high_conviction_threshold < 1):
            raise ValueError("high_conviction_threshold must be in (0, 1)")
        if self.staleness_limit_ms is not None and self.staleness_limit_ms <= 0:
            raise ValueError("staleness_limit_ms must be positive or None")


@dataclass(frozen=True)
class CombinedSignal:
    """Unified buy/sell/hold decision with its size as a fraction of initial cash."""

    ticker: str
    bar_time: int
    direction: str
    size_fraction: float
    strategy: str
    mode: str
    rationale: str

    def __post_init__(self):
        if (self.direction == HOLD) != (self.size_fraction == 0.0):
            raise ValueError("hold decisions carry size 0 and only those do")


def _agrees(label: str, direction: str) -> bool:
    return (label == POSITIVE and direction == LONG) or (
        label == NEGATIVE and direction == SHORT
    )


def fuse(
    technical: TechnicalSignal,
    sentiment: SentimentScore | None,
    mode: str,
    params: FusionParams = FusionParams(),
) -> CombinedSignal:
    """Combine one bar's technical signal with the latest sentiment score.

    `sentiment` is None when no fresh score exists (stale or never scored).
    Total over all valid inputs; never raises.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")

    def combined(direction: str, size: float, rationale: str) -> CombinedSignal:
        return CombinedSignal(
            ticker=technical.ticker,
            bar_time=technical.bar_time,
            direction=direction,
            size_fraction=size,
            strategy=technical.strategy,
            mode=mode,
            rationale=rationale,
        )

    if technical.direction == HOLD:
        return combined(HOLD, 0.0, "no technical trigger")
    if mode == BASE:
        return combined(technical.direction, BASE_SIZE, "technical signal, base sizing")
    if sentiment is None:
        return combined(HOLD, 0.0, "sentiment stale or missing")
    if not _agrees(sentiment.label, technical.direction):
        return combined(HOLD, 0.0, f"{sentiment.label} sentiment vetoes {technical.direction}")
    if sentiment.confidence >= params.high_conviction_threshold:
        return combined(
            technical.direction,
            HIGH_CONVICTION_SIZE,
            f"{sentiment.label} sentiment agrees, high conviction",
        )
    return combined(technical.direction, BASE_SIZE, f"{sentiment.label} sentiment agrees")
