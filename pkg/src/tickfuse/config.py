"""Engine configuration: JSON file, defaults, and `key=value` overrides.

Secrets (feed token, provider keys) come from environment variables only;
everything else lives in the config file and can be overridden per run from
the command line.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any

from .indicators import IndicatorParams
from .strategy import FusionParams, SENTIMENT

FEED_TOKEN_ENV = "TICKFUSE_FEED_TOKEN"
PROVIDER_URL_ENV = "TICKFUSE_SENTIMENT_URL"


@dataclass
class EngineConfig:
    tickers: list[str] = field(default_factory=list)
    feed_url: str = "wss://ws.finnhub.io"
    mode: str = SENTIMENT
    bar_capacity: int = 500
    text_poll_interval_s: float = 60.0
    dashboard_poll_s: float = 5.0
    staleness_minutes: float = 60.0
    journal_path: str = "trades.jsonl"
    provider_endpoint: str = ""  # empty selects the fixture keyword scorer
    high_conviction_threshold: float = 0.8
    dashboard_dir: str = "frontend"  # static dashboard mount, skipped when absent
    indicators: IndicatorParams = field(default_factory=IndicatorParams)

    def fusion_params(self) -> FusionParams:
        return FusionParams(
            high_conviction_threshold=self.high_conviction_threshold,
            staleness_limit_ms=int(self.staleness_minutes * 60_000),
        )

    def feed_token(self) -> str:
        return os.environ.get(FEED_TOKEN_ENV, "")

    def resolved_provider_endpoint(self) -> str:
        return os.environ.get(PROVIDER_URL_ENV, "") or self.provider_endpoint


def _coerce(current: Any, raw: str) -> Any:
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def apply_overrides(config: EngineConfig, overrides: list[str]) -> EngineConfig:
    """Apply `key=value` pairs; nested indicator fields use `indicators.<name>`."""
    data = asdict(config)
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        parts = key.split(".")
        node = data
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ValueError(f"unknown config key {key!r}")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ValueError(f"unknown config key {key!r}")
        node[leaf] = _coerce(node[leaf], raw.strip())
    return _from_dict(data)


def _from_dict(data: dict) -> EngineConfig:
    known = {f.name for f in fields(EngineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "indicators" in kwargs and isinstance(kwargs["indicators"], dict):
        kwargs["indicators"] = IndicatorParams(**kwargs["indicators"])
    return EngineConfig(**kwargs)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> EngineConfig:
    """Read the JSON config file (all keys optional) and apply overrides."""
    if path is None:
        config = EngineConfig()
    else:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
        base = asdict(EngineConfig())
        for key, value in raw.items():
            if key == "indicators":
                base["indicators"].update(value)
            else:
                base[key] = value
        config = _from_dict(base)
    if overrides:
        config = apply_overrides(config, overrides)
    return config
