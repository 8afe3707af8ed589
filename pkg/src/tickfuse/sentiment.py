"""Sentiment scoring contract, text sources, score store, and the evaluation harness.

The scoring model itself lives behind a provider interface: live deployments
wrap an HTTP endpoint, tests use a deterministic keyword scorer. Scores carry
a positive/negative label and a [0, 1] confidence derived from the provider's
class probabilities.
"""
from __future__ import annotations

import bisect
import csv
import json
import math
import threading
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple, Protocol, Sequence

from .errors import TickfuseError

POSITIVE = "positive"
NEGATIVE = "negative"
LABELS = (POSITIVE, NEGATIVE)

NEWS = "news"
REDDIT = "reddit"

SENTIMENT_CSV_HEADER = ["ticker", "as_of_ms", "label", "confidence"]


class EmptyText(TickfuseError):
    pass


class ProviderUnavailable(TickfuseError):
    """The scoring backend could not be reached; retry after the given hint."""

    def __init__(self, reason: str, retry_after_s: float = 30.0):
        super().__init__(f"sentiment provider unavailable: {reason}")
        self.retry_after_s = retry_after_s


class LengthMismatch(TickfuseError):
    pass


class EmptyInput(TickfuseError):
    pass


@dataclass(frozen=True)
class TextItem:
    """One fetched document: a news article or a reddit post with its comments."""

    source: str
    ticker: str
    published_at: int
    title: str
    body: str = ""
    comments: tuple[str, ...] = ()

    def __post_init__(self):
        if self.source not in (NEWS, REDDIT):
            raise ValueError(f"unknown source {self.source!r}")
        if self.published_at <= 0:
            raise ValueError("published_at must be positive")
        if not self.title:
            raise ValueError("title must be non-empty")


@dataclass(frozen=True)
class SentimentScore:
    """A ticker's sentiment at a point in time: label, confidence, summary text."""

    ticker: str
    as_of: int
    label: str
    confidence: float
    summary: str = ""

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


class ScoreResult(NamedTuple):
    """Provider output before a ticker and timestamp are attached."""

    label: str
    confidence: float


def score_from_logits(positive_logit: float, negative_logit: float) -> ScoreResult:
    """Normalize a two-class logit pair into a label plus max-class probability."""
    m = max(positive_logit, negative_logit)
    ep = math.exp(positive_logit - m)
    en = math.exp(negative_logit - m)
    p_positive = ep / (ep + en)
    if p_positive >= 0.5:
        return ScoreResult(POSITIVE, p_positive)
    return ScoreResult(NEGATIVE, 1.0 - p_positive)


class SentimentProvider(Protocol):
    def score(self, text: str) -> ScoreResult: ...


POSITIVE_WORDS = frozenset(
    """
    beat beats gain gains growth profit profits record surge surges rally rallies
    upgrade upgraded bullish strong outperform soar soars jump jumps boom win wins
    expand expansion exceed exceeds exceeded optimistic breakthrough dividend
    """.split()
)

NEGATIVE_WORDS = frozenset(
    """
    loss losses bankruptcy bankrupt decline declines drop drops fall falls miss
    misses missed downgrade downgraded bearish weak underperform plunge plunges
    crash crashes lawsuit fraud layoff layoffs mount mounts warn warning warns
    pessimistic recall default
    """.split()
)


class KeywordSentimentProvider:
    """Deterministic lexicon scorer used as the test-time provider.

    Label follows the sign of (positive hits - negative hits); a tie, including
    zero matches, is positive at confidence 0.5. Confidence is the matched
    majority fraction, so an unopposed match scores 1.0.
    """

    def score(self, text: str) -> ScoreResult:
        words = [w for w in "".join(c.lower() if c.isalnum() else " " for c in text).split()]
        pos = sum(1 for w in words if w in POSITIVE_WORDS)
        neg = sum(1 for w in words if w in NEGATIVE_WORDS)
        if pos == neg:
            return ScoreResult(POSITIVE, 0.5)
        if pos > neg:
            return ScoreResult(POSITIVE, pos / (pos + neg))
        return ScoreResult(NEGATIVE, neg / (pos + neg))


class HttpSentimentProvider:
    """Live provider adapter: POST the text, read {"label", "confidence"} back."""

    def __init__(self, endpoint: str, timeout_s: float = 10.0):
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def score(self, text: str) -> ScoreResult:
        import requests

        try:
            resp = requests.post(self.endpoint, data=text.encode("utf-8"), timeout=self.timeout_s)
            resp.raise_for_status()
            payload = resp.json()
        except requests.RequestException as exc:
            raise ProviderUnavailable(str(exc)) from exc
        label = payload.get("label")
        confidence = payload.get("confidence")
        if label not in LABELS or not isinstance(confidence, (int, float)):
            raise ProviderUnavailable(f"bad response payload: {payload!r}")
        return ScoreResult(label, float(confidence))


def score_text(provider: SentimentProvider, text: str) -> ScoreResult:
    """Score one piece of text; whitespace-only input is rejected as EmptyText."""
    normalized = " ".join(text.split())
    if not normalized:
        raise EmptyText("nothing to score after whitespace normalization")
    return provider.score(normalized)


class Summarizer(Protocol):
    def summarize(self, items: Sequence[TextItem]) -> str: ...


class TitleSummarizer:
    """Fixture summarizer: joins titles and truncates to the configured cap."""

    def __init__(self, max_chars: int = 280):
        self.max_chars = max_chars

    def summarize(self, items: Sequence[TextItem]) -> str:
        return " ".join(item.title for item in items)[: self.max_chars]


def summarize(provider: Summarizer, items: Sequence[TextItem]) -> str:
    """Condense one ticker's fetched items into a single summary text."""
    if not items:
        raise ValueError("cannot summarize an empty item list")
    tickers = {item.ticker for item in items}
    if len(tickers) > 1:
        raise ValueError(f"items span multiple tickers: {sorted(tickers)}")
    return provider.summarize(items)


class SentimentStore:
    """Chronological score store per ticker; one writer, snapshot readers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._by_ticker: dict[str, list[SentimentScore]] = {}
        self._times: dict[str, list[int]] = {}

    def add(self, score: SentimentScore) -> None:
        with self._lock:
            scores = self._by_ticker.setdefault(score.ticker, [])
            times = self._times.setdefault(score.ticker, [])
            at = bisect.bisect_right(times, score.as_of)
            scores.insert(at, score)
            times.insert(at, score.as_of)

    def latest(
        self, ticker: str, as_of: int, staleness_limit_ms: int | None
    ) -> SentimentScore | None:
        """Most recent score at or before `as_of` and within the staleness limit.

        Returns None when every candidate is stale or no score exists; a None
        limit means scores stay actionable until superseded.
        """
        with self._lock:
            times = self._times.get(ticker)
            if not times:
                return None
            at = bisect.bisect_right(times, as_of) - 1
            if at < 0:
                return None
            score = self._by_ticker[ticker][at]
        if staleness_limit_ms is not None and as_of - score.as_of > staleness_limit_ms:
            return None
        return score

    def all_scores(self, ticker: str) -> list[SentimentScore]:
        with self._lock:
            return list(self._by_ticker.get(ticker, []))


class TextSource(Protocol):
    def fetch(self, ticker: str, since_ms: int) -> list[TextItem]: ...


class FixtureTextSource:
    """Recorded-fixture replacement for the live news/reddit clients.

    The fixture file is JSON: {"TICKER": [{source, ticker, published_at,
    title, body, comments}, ...]}. Items come back in chronological order.
    """

    def __init__(self, path: str):
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        self._items: dict[str, list[TextItem]] = {}
        for ticker, entries in raw.items():
            items = [
                TextItem(
                    source=e["source"],
                    ticker=e["ticker"],
                    published_at=int(e["published_at"]),
                    title=e["title"],
                    body=e.get("body", ""),
                    comments=tuple(e.get("comments", ())),
                )
                for e in entries
            ]
            self._items[ticker] = sorted(items, key=lambda i: i.published_at)

    def fetch(self, ticker: str, since_ms: int) -> list[TextItem]:
        return [i for i in self._items.get(ticker, []) if i.published_at > since_ms]


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationMetrics:
    """Accuracy plus per-class and averaged precision/recall/F1."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict[str, ClassMetrics] = field(default_factory=dict)
    averaging: str = "macro"


def evaluate_classifier(
    predictions: Sequence[str], truths: Sequence[str], averaging: str = "macro"
) -> ClassificationMetrics:
    """Confusion-matrix metrics over a finite label set.

    Per-class F1 is the harmonic mean of that class's precision and recall
    (0 when both are 0). `averaging` picks how per-class rows are combined:
    macro is the unweighted mean, weighted uses truth-label support. Weighted
    recall always equals accuracy, which the tests assert as a cross-check.
    """
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if len(predictions) == 0:
        raise EmptyInput("no samples to evaluate")
    if averaging not in ("macro", "weighted"):
        raise ValueError(f"averaging must be macro or weighted, got {averaging!r}")

    labels = sorted(set(predictions) | set(truths))
    tp = {label: 0 for label in labels}
    fp = {label: 0 for label in labels}
    fn = {label: 0 for label in labels}
    support = {label: 0 for label in labels}
    correct = 0
    for pred, truth in zip(predictions, truths):
        support[truth] += 1
        if pred == truth:
            tp[pred] += 1
            correct += 1
        else:
            fp[pred] += 1
            fn[truth] += 1

    per_class = {}
    for label in labels:
        precision = tp[label] / (tp[label] + fp[label]) if tp[label] + fp[label] else 0.0
        recall = tp[label] / (tp[label] + fn[label]) if tp[label] + fn[label] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, support[label])

    total = len(truths)
    if averaging == "macro":
        weights = {label: 1.0 / len(labels) for label in labels}
    else:
        weights = {label: support[label] / total for label in labels}
    return ClassificationMetrics(
        accuracy=correct / total,
        precision=sum(per_class[l].precision * weights[l] for l in labels),
        recall=sum(per_class[l].recall * weights[l] for l in labels),
        f1=sum(per_class[l].f1 * weights[l] for l in labels),
        per_class=per_class,
        averaging=averaging,
    )


def read_labeled_csv(source: str | IO[str]) -> tuple[list[str], list[str]]:
    """Read a `text,label` benchmark CSV; returns (texts, labels)."""

    def _read(fh: IO[str]) -> tuple[list[str], list[str]]:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ValueError("labeled CSV needs a header with a 'label' column")
        texts, labels = [], []
        for row in reader:
            texts.append(row.get("text", ""))
            labels.append(row["label"].strip())
        return texts, labels

    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read(fh)
    return _read(source)


def write_sentiment_csv(target: str | IO[str], scores: Iterable[SentimentScore]) -> None:
    """Backtest input CSV: `ticker,as_of_ms,label,confidence` (summary not persisted)."""

    def _write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SENTIMENT_CSV_HEADER)
        for s in scores:
            writer.writerow([s.ticker, str(s.as_of), s.label, repr(s.confidence)])

    if isinstance(target, str):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
    else:
        _write(target)


def read_sentiment_csv(source: str | IO[str]) -> list[SentimentScore]:
    def _read(fh: IO[str]) -> list[SentimentScore]:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is not None and [h.strip() for h in header] != SENTIMENT_CSV_HEADER:
            raise ValueError(f"unexpected sentiment CSV header {header!r}")
        scores = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"row {line_no}: expected 4 fields, got {len(row)}")
            try:
                scores.append(
                    SentimentScore(
                        ticker=row[0],
                        as_of=int(row[1]),
                        label=row[2].strip(),
                        confidence=float(row[3]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"row {line_no}: {exc}") from exc
        return scores

    if isinstance(source, str):
        with open(source, newline="", encoding="utf-8") as fh:
            return _read(fh)
    return _read(source)
