"""Operator entry points: serve, replay, backtest, compare, eval-sentiment.

Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import backtest as bt
from .bars import read_bars_csv
from .config import load_config
from .errors import TickfuseError
from .sentiment import (
    FixtureTextSource,
    HttpSentimentProvider,
    KeywordSentimentProvider,
    evaluate_classifier,
    read_labeled_csv,
    read_sentiment_csv,
    score_text,
)
from .service import PipelineEngine


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tickfuse")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the live service")
    serve.add_argument("--config", default=None)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--text-fixture", default=None,
                       help="JSON fixture file standing in for the news/reddit clients")
    serve.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE")

    replay = sub.add_parser("replay", help="replay a tick CSV through the pipeline")
    replay.add_argument("--ticks", required=True)
    replay.add_argument("--speed", default="max",
                        help="playback rate factor, or 'max' for as fast as possible")
    replay.add_argument("--out", default=None, help="signal log path (default stdout)")
    replay.add_argument("--config", default=None)
    replay.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE")

    backtest = sub.add_parser("backtest", help="run one historical simulation")
    backtest.add_argument("--bars", required=True)
    backtest.add_argument("--sentiment", default=None)
    backtest.add_argument("--mode", choices=["base", "sentiment"], default="base")
    backtest.add_argument("--strategy",
                          choices=["sma_crossover", "rsi", "stochastic"],
                          default="sma_crossover")
    backtest.add_argument("--cash", type=float, default=10_000.0)
    backtest.add_argument("--ticker", default=None,
                          help="select one ticker when the bar file holds several")
    backtest.add_argument("--out", default="backtest_report.json")
    backtest.add_argument("--config", default=None)
    backtest.add_argument("--set", dest="overrides", action="append", default=[],
                          metavar="KEY=VALUE")

    compare = sub.add_parser("compare", help="base vs sentiment grid over strategies")
    compare.add_argument("--bars", required=True)
    compare.add_argument("--sentiment", default=None)
    compare.add_argument("--strategies", default="sma_crossover,rsi,stochastic")
    compare.add_argument("--cash", type=float, default=10_000.0)
    compare.add_argument("--out", default="comparison.csv")
    compare.add_argument("--config", default=None)
    compare.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VALUE")

    evals = sub.add_parser("eval-sentiment", help="classifier metrics harness")
    evals.add_argument("--pred", default=None, help="CSV with a label column of predictions")
    evals.add_argument("--truth", default=None, help="CSV with a label column of truths")
    evals.add_argument("--data", default=None,
                       help="labeled text,label CSV scored with the fixture provider")
    evals.add_argument("--averaging", choices=["macro", "weighted"], default="macro")

    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config, args.overrides)
    endpoint = config.resolved_provider_endpoint()
    provider = HttpSentimentProvider(endpoint) if endpoint else KeywordSentimentProvider()
    sources = [FixtureTextSource(args.text_fixture)] if args.text_fixture else []
    engine = PipelineEngine(config, provider=provider, text_sources=sources)
    engine.start_live()
    try:
        uvicorn.run(create_app(engine), host=args.host, port=args.port, log_level="info")
    finally:
        engine.stop()
    return 0


def _cmd_replay(args) -> int:
    config = load_config(args.config, args.overrides)
    speed = None if args.speed == "max" else float(args.speed)
    engine = PipelineEngine(config)
    if args.out is None:
        stats = engine.replay(args.ticks, speed, sink=sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            stats = engine.replay(args.ticks, speed, sink=fh)
    print(
        f"replayed {stats.ticks} ticks into {stats.bars} bars "
        f"in {stats.elapsed_s:.2f}s ({stats.ticks_per_second:.0f} ticks/s)",
        file=sys.stderr,
    )
    return 0


def _select_bars(path: str, ticker: str | None):
    bars = read_bars_csv(path)
    if ticker:
        bars = [b for b in bars if b.ticker == ticker.upper()]
        if not bars:
            raise TickfuseError(f"no bars for ticker {ticker!r} in {path}")
    return bars


def _cmd_backtest(args) -> int:
    config = load_config(args.config, args.overrides)
    bars = _select_bars(args.bars, args.ticker)
    sentiments = read_sentiment_csv(args.sentiment) if args.sentiment else []
    bt_config = bt.BacktestConfig(
        initial_cash=args.cash,
        mode=args.mode,
        strategy=args.strategy,
        indicator_params=config.indicators,
        fusion_params=config.fusion_params(),
    )
    report = bt.run_backtest(bars, sentiments, bt_config)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    sharpe = "n/a" if report.sharpe is None else f"{report.sharpe:.4f}"
    win = "n/a" if report.win_ratio is None else f"{report.win_ratio:.4f}"
    print(
        f"{args.strategy} [{args.mode}]: {report.trade_count} trades, "
        f"sharpe {sharpe}, win_ratio {win}, final equity {report.final_equity:.2f}"
    )
    print(f"report written to {args.out}")
    return 0


def _cmd_compare(args) -> int:
    config = load_config(args.config, args.overrides)
    bars = read_bars_csv(args.bars)
    sentiments = read_sentiment_csv(args.sentiment) if args.sentiment else []
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    configs = [
        bt.BacktestConfig(
            initial_cash=args.cash,
            strategy=strategy,
            indicator_params=config.indicators,
            fusion_params=config.fusion_params(),
        )
        for strategy in strategies
    ]
    rows = bt.compare_modes(bars, sentiments, configs)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(bt.render_comparison_csv(rows))
    print(bt.render_comparison_text(rows), end="")
    print(f"comparison written to {args.out}")
    return 0


def _cmd_eval_sentiment(args) -> int:
    if args.data:
        texts, truths = read_labeled_csv(args.data)
        provider = KeywordSentimentProvider()
        predictions = [score_text(provider, text).label for text in texts]
    elif args.pred and args.truth:
        _, predictions = read_labeled_csv(args.pred)
        _, truths = read_labeled_csv(args.truth)
    else:
        raise TickfuseError("need either --data or both --pred and --truth")
    metrics = evaluate_classifier(predictions, truths, averaging=args.averaging)
    print(f"accuracy {metrics.accuracy:.4f}")
    print(f"precision {metrics.precision:.4f}")
    print(f"recall {metrics.recall:.4f}")
    print(f"f1 {metrics.f1:.4f}")
    for label in sorted(metrics.per_class):
        m = metrics.per_class[label]
        print(
            f"  {label}: precision {m.precision:.4f} recall {m.recall:.4f} "
            f"f1 {m.f1:.4f} support {m.support}"
        )
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "backtest": _cmd_backtest,
    "compare": _cmd_compare,
    "eval-sentiment": _cmd_eval_sentiment,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except TickfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
