"""REST endpoints served to the dashboard: watchlist, state, trades, health.

All errors come back as JSON {"error", "detail"} with a 4xx status. When the
configured dashboard directory exists it is mounted at /ui and / redirects
there, so one process serves both the API and the browser client.
"""
from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .market_data import InvalidTicker
from .service import PipelineEngine, UnknownTicker, ValidationError


class TickersRequest(BaseModel):
    symbols: list[str]


class TradeRequest(BaseModel):
    ticker: str
    side: str
    quantity: float = Field(gt=0)
    price: float = Field(gt=0)
    note: str = ""


def create_app(engine: PipelineEngine) -> FastAPI:
    app = FastAPI(title="tickfuse", docs_url=None, redoc_url=None)
    app.state.engine = engine

    def error_response(status: int, error: str, detail) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": error, "detail": detail})

    @app.exception_handler(InvalidTicker)
    async def invalid_ticker_handler(request: Request, exc: InvalidTicker):
        return error_response(422, "invalid_ticker", exc.rejected)

    @app.exception_handler(UnknownTicker)
    async def unknown_ticker_handler(request: Request, exc: UnknownTicker):
        return error_response(404, "unknown_ticker", exc.ticker)

    @app.exception_handler(ValidationError)
    async def validation_handler(request: Request, exc: ValidationError):
        return error_response(422, "validation_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(request: Request, exc: RequestValidationError):
        return error_response(422, "validation_error", exc.errors())

    @app.post("/tickers")
    def submit_tickers(body: TickersRequest):
        ticker_set = engine.submit_tickers(body.symbols)
        return {"tickers": list(ticker_set.tickers), "revision": ticker_set.revision}

    @app.get("/state/{ticker}")
    def get_state(ticker: str):
        return engine.get_state(ticker)

    @app.get("/trades")
    def list_trades():
        return [trade.to_dict() for trade in engine.list_trades()]

    @app.post("/trades")
    def log_trade(body: TradeRequest):
        trade = engine.log_trade(
            ticker=body.ticker,
            side=body.side,
            quantity=body.quantity,
            price=body.price,
            note=body.note,
        )
        return trade.to_dict()

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "revision": engine.ticker_set.revision,
            "tickers": list(engine.ticker_set.tickers),
            "poll_hint_s": engine.config.dashboard_poll_s,
        }

    dashboard_dir = engine.config.dashboard_dir
    if dashboard_dir and os.path.isfile(os.path.join(dashboard_dir, "index.html")):
        app.mount("/ui", StaticFiles(directory=dashboard_dir, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index():
            return RedirectResponse("/ui/")

    return app
