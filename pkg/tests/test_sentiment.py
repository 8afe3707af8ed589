import io
import json
import random

import pytest

from tickfuse.sentiment import (
    EmptyInput,
    EmptyText,
    FixtureTextSource,
    HttpSentimentProvider,
    KeywordSentimentProvider,
    LengthMismatch,
    NEGATIVE,
    POSITIVE,
    ProviderUnavailable,
    SentimentScore,
    SentimentStore,
    TextItem,
    TitleSummarizer,
    evaluate_classifier,
    read_labeled_csv,
    read_sentiment_csv,
    score_from_logits,
    score_text,
    summarize,
    write_sentiment_csv,
)


class TestKeywordProvider:
    def setup_method(self):
        self.provider = KeywordSentimentProvider()

    def test_all_positive_words(self):
        assert score_text(self.provider, "record profit beat expectations") == (POSITIVE, 1.0)

    def test_all_negative_words(self):
        assert score_text(self.provider, "bankruptcy filing losses mount") == (NEGATIVE, 1.0)

    def test_empty_text(self):
        with pytest.raises(EmptyText):
            score_text(self.provider, "")
        with pytest.raises(EmptyText):
            score_text(self.provider, "   \n\t ")

    def test_tie_is_neutral_positive(self):
        assert self.provider.score("profit and losses") == (POSITIVE, 0.5)
        assert self.provider.score("nothing matches here") == (POSITIVE, 0.5)

    def test_majority_fraction(self):
        label, confidence = self.provider.score("profit gains growth despite losses")
        assert label == POSITIVE
        assert confidence == pytest.approx(3 / 4)

    def test_deterministic(self):
        text = "markets rally on strong profit but lawsuit fears mount"
        assert self.provider.score(text) == self.provider.score(text)

    def test_punctuation_and_case_ignored(self):
        assert self.provider.score("PROFIT!!! Gains, gains...").label == POSITIVE


class TestLogits:
    def test_equal_logits_positive_half(self):
        assert score_from_logits(2.0, 2.0) == (POSITIVE, 0.5)

    def test_positive_dominates(self):
        label, confidence = score_from_logits(5.0, -5.0)
        assert label == POSITIVE
        assert confidence > 0.99

    def test_negative_dominates(self):
        import math

        label, confidence = score_from_logits(-1.0, 3.0)
        assert label == NEGATIVE
        assert confidence == pytest.approx(1 / (1 + math.exp(-4)), abs=1e-12)

    def test_confidence_bounded(self):
        rng = random.Random(5)
        for _ in range(200):
            _, confidence = score_from_logits(rng.uniform(-50, 50), rng.uniform(-50, 50))
            assert 0.5 <= confidence <= 1.0


class TestSummarize:
    def test_single_title_identity(self):
        items = [TextItem("news", "AAPL", 1, "X")]
        assert summarize(TitleSummarizer(100), items) == "X"

    def test_two_titles_joined(self):
        items = [TextItem("news", "AAPL", 1, "A"), TextItem("news", "AAPL", 2, "B")]
        assert summarize(TitleSummarizer(100), items) == "A B"

    def test_truncated_to_cap(self):
        items = [TextItem("news", "AAPL", 1, "A" * 50), TextItem("news", "AAPL", 2, "B" * 50)]
        assert len(summarize(TitleSummarizer(60), items)) == 60

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            summarize(TitleSummarizer(), [])

    def test_mixed_tickers_rejected(self):
        items = [TextItem("news", "AAPL", 1, "A"), TextItem("news", "MSFT", 2, "B")]
        with pytest.raises(ValueError):
            summarize(TitleSummarizer(), items)


class TestTextItem:
    def test_reddit_comments(self):
        item = TextItem("reddit", "GME", 5, "to the moon", comments=("c1", "c2"))
        assert item.comments == ("c1", "c2")

    def test_bad_source(self):
        with pytest.raises(ValueError):
            TextItem("twitter", "AAPL", 1, "t")

    def test_empty_title(self):
        with pytest.raises(ValueError):
            TextItem("news", "AAPL", 1, "")


class TestSentimentStore:
    def score(self, ticker="AAPL", as_of=100, label=POSITIVE, confidence=0.9):
        return SentimentScore(ticker, as_of, label, confidence)

    def test_fresh_hit(self):
        store = SentimentStore()
        score = self.score(as_of=100)
        store.add(score)
        assert store.latest("AAPL", 150, 60) == score

    def test_stale_miss(self):
        store = SentimentStore()
        store.add(self.score(as_of=100))
        assert store.latest("AAPL", 200, 60) is None

    def test_most_recent_wins(self):
        store = SentimentStore()
        early = self.score(as_of=100)
        late = self.score(as_of=140, label=NEGATIVE)
        store.add(early)
        store.add(late)
        assert store.latest("AAPL", 150, 1000) == late

    def test_future_scores_invisible(self):
        store = SentimentStore()
        store.add(self.score(as_of=500))
        assert store.latest("AAPL", 100, None) is None

    def test_none_limit_means_until_superseded(self):
        store = SentimentStore()
        store.add(self.score(as_of=1))
        assert store.latest("AAPL", 10_000_000, None) is not None

    def test_unknown_ticker(self):
        assert SentimentStore().latest("AAPL", 1, None) is None

    def test_staleness_monotone(self, rng):
        """Raising the limit never turns a hit into a miss."""
        store = SentimentStore()
        for _ in range(50):
            store.add(self.score(as_of=rng.randint(1, 10_000)))
        for _ in range(200):
            as_of = rng.randint(1, 12_000)
            small = rng.randint(1, 5_000)
            large = small + rng.randint(0, 5_000)
            if store.latest("AAPL", as_of, small) is not None:
                assert store.latest("AAPL", as_of, large) is not None


class TestEvaluateClassifier:
    def test_perfect_classifier(self):
        metrics = evaluate_classifier(["a", "b", "a"], ["a", "b", "a"])
        assert metrics.accuracy == 1.0
        assert metrics.precision == 1.0
        assert metrics.recall == 1.0
        assert metrics.f1 == 1.0

    def test_three_item_fixture(self):
        metrics = evaluate_classifier(
            [POSITIVE, POSITIVE, NEGATIVE], [POSITIVE, NEGATIVE, NEGATIVE]
        )
        assert metrics.accuracy == pytest.approx(2 / 3)
        pos = metrics.per_class[POSITIVE]
        neg = metrics.per_class[NEGATIVE]
        assert pos.precision == pytest.approx(0.5)
        assert pos.recall == pytest.approx(1.0)
        assert neg.precision == pytest.approx(1.0)
        assert neg.recall == pytest.approx(0.5)
        assert metrics.f1 == pytest.approx(2 / 3)  # macro

    def test_disjoint_predictions(self):
        metrics = evaluate_classifier(["a", "a"], ["b", "b"])
        assert metrics.accuracy == 0.0
        assert metrics.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evaluate_classifier(["a"], ["a", "b"])

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            evaluate_classifier([], [])

    def test_accuracy_permutation_invariant(self, rng):
        pairs = [(rng.choice("ab"), rng.choice("ab")) for _ in range(60)]
        metrics = evaluate_classifier([p for p, _ in pairs], [t for _, t in pairs])
        rng.shuffle(pairs)
        shuffled = evaluate_classifier([p for p, _ in pairs], [t for _, t in pairs])
        assert shuffled.accuracy == metrics.accuracy
        assert shuffled.f1 == pytest.approx(metrics.f1)

    def test_macro_invariant_under_relabeling(self, rng):
        preds = [rng.choice("xy") for _ in range(80)]
        truths = [rng.choice("xy") for _ in range(80)]
        swap = {"x": "y", "y": "x"}
        original = evaluate_classifier(preds, truths)
        relabeled = evaluate_classifier([swap[p] for p in preds], [swap[t] for t in truths])
        assert relabeled.precision == pytest.approx(original.precision)
        assert relabeled.recall == pytest.approx(original.recall)
        assert relabeled.f1 == pytest.approx(original.f1)
        assert relabeled.per_class["x"] == original.per_class["y"]

    def test_weighted_recall_equals_accuracy(self, rng):
        """Algebraic identity used as a cross-check of the implementation."""
        for _ in range(50):
            n = rng.randint(1, 100)
            labels = ["a", "b", "c"]
            preds = [rng.choice(labels) for _ in range(n)]
            truths = [rng.choice(labels) for _ in range(n)]
            metrics = evaluate_classifier(preds, truths, averaging="weighted")
            assert metrics.recall == pytest.approx(metrics.accuracy, abs=1e-12)

    def test_bad_averaging(self):
        with pytest.raises(ValueError):
            evaluate_classifier(["a"], ["a"], averaging="micro")


class TestHttpProvider:
    def test_unreachable_endpoint(self):
        provider = HttpSentimentProvider("http://127.0.0.1:1/score", timeout_s=0.2)
        with pytest.raises(ProviderUnavailable) as exc:
            provider.score("anything")
        assert exc.value.retry_after_s > 0


class TestFixtureTextSource:
    def test_fetch_filters_and_sorts(self, tmp_path):
        path = tmp_path / "texts.json"
        path.write_text(
            json.dumps(
                {
                    "AAPL": [
                        {"source": "reddit", "ticker": "AAPL", "published_at": 300,
                         "title": "late", "comments": ["c"]},
                        {"source": "news", "ticker": "AAPL", "published_at": 100, "title": "early"},
                    ]
                }
            )
        )
        source = FixtureTextSource(str(path))
        assert [i.title for i in source.fetch("AAPL", 0)] == ["early", "late"]
        assert [i.title for i in source.fetch("AAPL", 100)] == ["late"]
        assert source.fetch("MSFT", 0) == []


class TestCsv:
    def test_labeled_csv(self):
        buf = io.StringIO("text,label\ngood profit,positive\nbad losses,negative\n")
        texts, labels = read_labeled_csv(buf)
        assert texts == ["good profit", "bad losses"]
        assert labels == [POSITIVE, NEGATIVE]

    def test_labeled_csv_requires_label_column(self):
        with pytest.raises(ValueError):
            read_labeled_csv(io.StringIO("a,b\n1,2\n"))

    def test_sentiment_round_trip(self):
        scores = [
            SentimentScore("AAPL", 1000, POSITIVE, 0.875),
            SentimentScore("MSFT", 2000, NEGATIVE, 0.25),
        ]
        buf = io.StringIO()
        write_sentiment_csv(buf, scores)
        buf.seek(0)
        assert read_sentiment_csv(buf) == scores

    def test_sentiment_csv_validates(self):
        buf = io.StringIO("ticker,as_of_ms,label,confidence\nAAPL,1,positive,1.5\n")
        with pytest.raises(ValueError):
            read_sentiment_csv(buf)
