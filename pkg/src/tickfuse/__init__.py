"""tickfuse: minute-VWAP bars, technical signals, sentiment-gated sizing, backtests."""

__version__ = "0.1.0"
