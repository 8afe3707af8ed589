import io
import math
import random

import pytest

from tickfuse.bars import (
    BarBuilder,
    BarWindow,
    MINUTE_MS,
    MinuteAccumulator,
    MinuteBar,
    OutOfOrderBar,
    TickerMismatch,
    minute_floor,
    read_bars_csv,
    write_bars_csv,
)
from tickfuse.market_data import Tick

from conftest import BASE_MINUTE, make_bar


def tick(ts, price, volume, ticker="TEST"):
    return Tick(ticker, ts, price, volume)


class TestAccumulator:
    def test_single_tick_minute(self):
        acc = MinuteAccumulator("TEST", BASE_MINUTE)
        acc.add(tick(BASE_MINUTE + 1, 100.0, 50.0))
        bar = acc.close_minute()
        assert bar.vwap == 100.0
        assert bar.high == bar.low == bar.close == 100.0
        assert bar.total_volume == 50.0
        assert bar.trade_count == 1

    def test_two_tick_vwap(self):
        acc = MinuteAccumulator("TEST", BASE_MINUTE)
        acc.add(tick(BASE_MINUTE + 1, 10.0, 100.0))
        acc.add(tick(BASE_MINUTE + 2, 20.0, 300.0))
        bar = acc.close_minute()
        assert bar.vwap == pytest.approx(17.5, abs=1e-12)  # (10*100 + 20*300) / 400
        assert bar.high == 20.0
        assert bar.low == 10.0
        assert bar.close == 20.0
        assert bar.total_volume == 400.0
        assert bar.trade_count == 2

    def test_zero_volume_tick_moves_extremes_only(self):
        acc = MinuteAccumulator("TEST", BASE_MINUTE)
        acc.add(tick(BASE_MINUTE + 1, 100.0, 50.0))
        acc.add(tick(BASE_MINUTE + 2, 99.0, 0.0))
        bar = acc.close_minute()
        assert bar.vwap == 100.0
        assert bar.low == 99.0
        assert bar.close == 99.0

    def test_no_trades_yields_none(self):
        assert MinuteAccumulator("TEST", BASE_MINUTE).close_minute() is None

    def test_only_zero_volume_yields_none(self):
        acc = MinuteAccumulator("TEST", BASE_MINUTE)
        acc.add(tick(BASE_MINUTE + 1, 99.0, 0.0))
        assert acc.close_minute() is None

    def test_ticker_mismatch(self):
        acc = MinuteAccumulator("TEST", BASE_MINUTE)
        with pytest.raises(TickerMismatch):
            acc.add(tick(BASE_MINUTE, 1.0, 1.0, ticker="AAPL"))

    def test_incremental_matches_batch_formula(self, rng):
        """Incremental VWAP equals sum(p*v)/sum(v) computed independently."""
        for _ in range(300):
            n = rng.randint(1, 200)
            prices = [rng.uniform(0.01, 5000) for _ in range(n)]
            volumes = [rng.choice([0.0, rng.uniform(0.01, 1e5)]) for _ in range(n)]
            if not any(volumes):
                volumes[0] = 1.0
            acc = MinuteAccumulator("TEST", BASE_MINUTE)
            for i, (p, v) in enumerate(zip(prices, volumes)):
                acc.add(tick(BASE_MINUTE + i, p, v))
            bar = acc.close_minute()
            expected = math.fsum(p * v for p, v in zip(prices, volumes)) / math.fsum(volumes)
            assert bar.vwap == pytest.approx(expected, rel=1e-12)
            assert min(prices) <= bar.vwap <= max(prices)
            assert bar.low <= bar.vwap <= bar.high
            assert bar.low <= bar.close <= bar.high


class TestMinuteBarInvariants:
    def test_unaligned_minute_rejected(self):
        with pytest.raises(ValueError):
            MinuteBar("TEST", BASE_MINUTE + 1, 100, 101, 99, 100, 10, 1)

    def test_vwap_outside_range_rejected(self):
        with pytest.raises(ValueError):
            MinuteBar("TEST", BASE_MINUTE, 102, 101, 99, 100, 10, 1)

    def test_zero_volume_rejected(self):
        with pytest.raises(ValueError):
            MinuteBar("TEST", BASE_MINUTE, 100, 101, 99, 100, 0, 1)


class TestBarWindow:
    def test_push_and_eviction(self):
        window = BarWindow("TEST", capacity=2)
        b1, b2, b3 = make_bar(index=0), make_bar(index=1), make_bar(index=2)
        window.push(b1)
        assert window.snapshot() == (b1,)
        window.push(b2)
        assert window.snapshot() == (b1, b2)
        window.push(b3)
        assert window.snapshot() == (b2, b3)

    def test_out_of_order_rejected(self):
        window = BarWindow("TEST", capacity=4)
        window.push(make_bar(index=1))
        with pytest.raises(OutOfOrderBar):
            window.push(make_bar(index=1))
        with pytest.raises(OutOfOrderBar):
            window.push(make_bar(index=0))

    def test_ticker_mismatch(self):
        window = BarWindow("TEST")
        with pytest.raises(TickerMismatch):
            window.push(make_bar(ticker="AAPL"))

    def test_snapshot_is_stable_copy(self):
        window = BarWindow("TEST")
        window.push(make_bar(index=0))
        snap = window.snapshot()
        window.push(make_bar(index=1))
        assert len(snap) == 1


class TestBarBuilder:
    def test_closes_on_minute_boundary_cross(self):
        builder = BarBuilder("TEST")
        assert builder.add(tick(BASE_MINUTE + 100, 10.0, 100.0)) == []
        assert builder.add(tick(BASE_MINUTE + 200, 20.0, 300.0)) == []
        closed = builder.add(tick(BASE_MINUTE + MINUTE_MS + 5, 30.0, 10.0))
        assert len(closed) == 1
        assert closed[0].vwap == pytest.approx(17.5)
        assert closed[0].minute_start == BASE_MINUTE

    def test_gap_minutes_emit_no_bars(self):
        builder = BarBuilder("TEST")
        builder.add(tick(BASE_MINUTE + 1, 10.0, 1.0))
        closed = builder.add(tick(BASE_MINUTE + 5 * MINUTE_MS, 11.0, 1.0))
        assert [b.minute_start for b in closed] == [BASE_MINUTE]

    def test_late_tick_dropped_and_counted(self):
        builder = BarBuilder("TEST")
        builder.add(tick(BASE_MINUTE + MINUTE_MS, 10.0, 1.0))
        assert builder.add(tick(BASE_MINUTE + 10, 99.0, 1.0)) == []
        assert builder.late_dropped == 1

    def test_flush_closes_open_minute(self):
        builder = BarBuilder("TEST")
        builder.add(tick(BASE_MINUTE + 1, 10.0, 1.0))
        assert [b.minute_start for b in builder.flush()] == [BASE_MINUTE]
        assert builder.flush() == []

    def test_close_due_respects_boundary(self):
        builder = BarBuilder("TEST")
        builder.add(tick(BASE_MINUTE + 1, 10.0, 1.0))
        assert builder.close_due(BASE_MINUTE + MINUTE_MS - 1) == []
        assert len(builder.close_due(BASE_MINUTE + MINUTE_MS)) == 1

    def test_minute_floor(self):
        assert minute_floor(BASE_MINUTE + 59_999) == BASE_MINUTE
        assert minute_floor(BASE_MINUTE + MINUTE_MS) == BASE_MINUTE + MINUTE_MS


class TestBarCsv:
    def test_round_trip(self, rng):
        bars = []
        for i in range(50):
            price = rng.uniform(1, 500)
            spread = price * 0.01
            high = price + spread * rng.random()
            low = price - spread * rng.random()
            bars.append(
                MinuteBar(
                    "TEST",
                    BASE_MINUTE + i * MINUTE_MS,
                    vwap=rng.uniform(low, high),
                    high=high,
                    low=low,
                    close=rng.uniform(low, high),
                    total_volume=rng.uniform(1, 1e6),
                    trade_count=1,
                )
            )
        buf = io.StringIO()
        write_bars_csv(buf, bars)
        buf.seek(0)
        assert read_bars_csv(buf) == bars

    def test_bad_header(self):
        with pytest.raises(ValueError):
            read_bars_csv(io.StringIO("x,y\n"))

    def test_invariant_violations_rejected(self):
        buf = io.StringIO(
            "ticker,minute_start_ms,vwap,high,low,close,volume\n"
            f"TEST,{BASE_MINUTE},105.0,101.0,99.0,100.0,10.0\n"
        )
        with pytest.raises(ValueError):
            read_bars_csv(buf)
