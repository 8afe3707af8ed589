import itertools

import pytest

from tickfuse.indicators import HOLD, LONG, SHORT, TechnicalSignal
from tickfuse.sentiment import NEGATIVE, POSITIVE, SentimentScore
from tickfuse.strategy import (
    BASE,
    BASE_SIZE,
    CombinedSignal,
    FusionParams,
    HIGH_CONVICTION_SIZE,
    SENTIMENT,
    fuse,
)


def tech(direction, strategy="sma_crossover"):
    return TechnicalSignal("AAPL", 1_700_000_040_000, direction, strategy)


def score(label, confidence):
    return SentimentScore("AAPL", 1_700_000_000_000, label, confidence)


PARAMS = FusionParams(high_conviction_threshold=0.8)


class TestFuseRules:
    def test_agreement_high_conviction_sizes_up(self):
        decision = fuse(tech(LONG), score(POSITIVE, 0.9), SENTIMENT, PARAMS)
        assert decision.direction == LONG
        assert decision.size_fraction == HIGH_CONVICTION_SIZE

    def test_agreement_low_conviction_base_size(self):
        decision = fuse(tech(LONG), score(POSITIVE, 0.6), SENTIMENT, PARAMS)
        assert decision.direction == LONG
        assert decision.size_fraction == BASE_SIZE

    def test_threshold_is_inclusive(self):
        decision = fuse(tech(SHORT), score(NEGATIVE, 0.8), SENTIMENT, PARAMS)
        assert decision.size_fraction == HIGH_CONVICTION_SIZE

    def test_disagreement_vetoes(self):
        decision = fuse(tech(LONG), score(NEGATIVE, 0.9), SENTIMENT, PARAMS)
        assert decision.direction == HOLD
        assert decision.size_fraction == 0.0
        assert "veto" in decision.rationale

    def test_stale_sentiment_means_no_trade(self):
        decision = fuse(tech(LONG), None, SENTIMENT, PARAMS)
        assert decision.direction == HOLD

    def test_base_mode_ignores_sentiment(self):
        decision = fuse(tech(SHORT), score(POSITIVE, 0.99), BASE, PARAMS)
        assert decision.direction == SHORT
        assert decision.size_fraction == BASE_SIZE

    def test_technical_hold_always_holds(self):
        decision = fuse(tech(HOLD), score(POSITIVE, 0.99), SENTIMENT, PARAMS)
        assert decision.direction == HOLD

    def test_short_agreement_is_negative(self):
        decision = fuse(tech(SHORT), score(NEGATIVE, 0.95), SENTIMENT, PARAMS)
        assert decision.direction == SHORT
        assert decision.size_fraction == HIGH_CONVICTION_SIZE

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            fuse(tech(LONG), None, "turbo", PARAMS)


SENTIMENTS = [
    None,
    score(POSITIVE, 0.95),
    score(POSITIVE, 0.5),
    score(NEGATIVE, 0.95),
    score(NEGATIVE, 0.5),
]


class TestFuseProperties:
    @pytest.mark.parametrize(
        "direction,sentiment,mode",
        list(itertools.product([LONG, SHORT, HOLD], SENTIMENTS, [BASE, SENTIMENT])),
    )
    def test_exhaustive_grid_invariants(self, direction, sentiment, mode):
        decision = fuse(tech(direction), sentiment, mode, PARAMS)
        # hold <=> size 0 is enforced by the type; reaching here means it held
        assert isinstance(decision, CombinedSignal)
        assert decision.size_fraction in (0.0, BASE_SIZE, HIGH_CONVICTION_SIZE)
        # sentiment never reverses the technical direction
        assert decision.direction in (direction, HOLD)
        if mode == BASE and direction != HOLD:
            assert decision.size_fraction == BASE_SIZE
        assert decision.mode == mode
        assert decision.strategy == "sma_crossover"
        assert decision.rationale

    def test_base_mode_independent_of_sentiment(self):
        for direction in (LONG, SHORT, HOLD):
            outputs = {fuse(tech(direction), s, BASE, PARAMS) for s in SENTIMENTS}
            assert len(outputs) == 1

    def test_confidence_monotone_in_size(self):
        """With agreement, more confidence never shrinks the trade."""
        sizes = [
            fuse(tech(LONG), score(POSITIVE, c / 100), SENTIMENT, PARAMS).size_fraction
            for c in range(1, 100)
        ]
        assert sizes == sorted(sizes)


class TestTypes:
    def test_combined_signal_invariant(self):
        with pytest.raises(ValueError):
            CombinedSignal("AAPL", 1, HOLD, 0.10, "rsi", BASE, "broken")
        with pytest.raises(ValueError):
            CombinedSignal("AAPL", 1, LONG, 0.0, "rsi", BASE, "broken")

    def test_fusion_params_validation(self):
        with pytest.raises(ValueError):
            FusionParams(high_conviction_threshold=0.0)
        with pytest.raises(ValueError):
            FusionParams(high_conviction_threshold=1.0)
        with pytest.raises(ValueError):
            FusionParams(staleness_limit_ms=0)
        FusionParams(staleness_limit_ms=None)
