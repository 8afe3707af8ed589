// View model: everything rendered traces back to one service response.
// The dashboard holds no state a reload cannot rebuild from the endpoints.

import type { Direction, TickerState, TradeRow } from "./api.js";

export const VWAP_HISTORY_CAP = 60;
export const SIGNAL_SCROLLBACK_CAP = 20;

export interface SignalEvent {
  strategy: string;
  direction: Direction;
  barTime: number;
}

export interface PanelModel {
  ticker: string;
  state: TickerState | null;
  vwapHistory: number[];
  lastBarTime: number | null;
  signalLog: SignalEvent[];
}

function emptyPanel(ticker: string): PanelModel {
  return { ticker, state: null, vwapHistory: [], lastBarTime: null, signalLog: [] };
}

export class DashboardModel {
  tickers: string[] = [];
  panels = new Map<string, PanelModel>();
  journal: TradeRow[] = [];
  connected = true;

  /** Sync the panel set with the accepted watchlist; dropped tickers lose their panel. */
  setTickers(symbols: string[]): void {
    this.tickers = [...symbols];
    for (const existing of [...this.panels.keys()]) {
      if (!symbols.includes(existing)) this.panels.delete(existing);
    }
    for (const symbol of symbols) {
      if (!this.panels.has(symbol)) this.panels.set(symbol, emptyPanel(symbol));
    }
  }

  /** Fold one /state response into its panel; returns true when the bar advanced. */
  applyState(ticker: string, state: TickerState): boolean {
    const panel = this.panels.get(ticker);
    if (!panel) return false;
    panel.state = state;
    const bar = state.bar;
    if (bar === null || bar.minute_start === panel.lastBarTime) return false;
    panel.lastBarTime = bar.minute_start;
    panel.vwapHistory.push(bar.vwap);
    if (panel.vwapHistory.length > VWAP_HISTORY_CAP) {
      panel.vwapHistory.splice(0, panel.vwapHistory.length - VWAP_HISTORY_CAP);
    }
    for (const [strategy, signal] of Object.entries(state.signals)) {
      if (signal.direction === "hold") continue;
      panel.signalLog.push({ strategy, direction: signal.direction, barTime: signal.bar_time });
    }
    if (panel.signalLog.length > SIGNAL_SCROLLBACK_CAP) {
      panel.signalLog.splice(0, panel.signalLog.length - SIGNAL_SCROLLBACK_CAP);
    }
    return true;
  }

  setJournal(trades: TradeRow[]): void {
    this.journal = [...trades].sort((a, b) => a.id - b.id);
  }

  appendTrade(trade: TradeRow): void {
    this.journal.push(trade);
  }
}
