// Typed client for the service REST contract. The dashboard talks to nothing else.

export type Direction = "long" | "short" | "hold";
export type SentimentLabel = "positive" | "negative";

export interface BarInfo {
  minute_start: number;
  vwap: number;
  high: number;
  low: number;
  close: number;
  volume: number;
  trade_count: number;
}

export interface SignalInfo {
  direction: Direction;
  bar_time: number;
}

export interface CombinedInfo {
  direction: Direction;
  size_fraction: number;
  rationale: string;
  bar_time: number;
  mode: string;
}

export interface SentimentInfo {
  label: SentimentLabel;
  confidence: number;
  as_of: number;
  summary: string;
  stale: boolean;
}

export interface TickerState {
  ticker: string;
  revision: number;
  bar: BarInfo | null;
  signals: Record<string, SignalInfo>;
  combined: Record<string, CombinedInfo>;
  bar_count: number;
  sentiment: SentimentInfo | null;
  counters: { ingested: number; dropped: number; late_dropped: number };
}

export interface TradeRow {
  id: number;
  ticker: string;
  side: string;
  quantity: number;
  price: number;
  logged_at: number;
  note: string;
}

export interface HealthInfo {
  status: string;
  revision: number;
  tickers: string[];
  poll_hint_s: number;
}

export interface TradeRequest {
  ticker: string;
  side: string;
  quantity: number;
  price: number;
  note?: string;
}

/** Non-2xx responses carry {error, detail}; keep both for inline rendering. */
export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    public readonly detail: unknown,
  ) {
    super(`${code} (${status})`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const code = body && typeof body.error === "string" ? body.error : "http_error";
    throw new ServiceError(response.status, code, body ? body.detail : null);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  health(): Promise<HealthInfo> {
    return request(`${this.baseUrl}/health`);
  }

  submitTickers(symbols: string[]): Promise<{ tickers: string[]; revision: number }> {
    return request(`${this.baseUrl}/tickers`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ symbols }),
    });
  }

  state(ticker: string): Promise<TickerState> {
    return request(`${this.baseUrl}/state/${encodeURIComponent(ticker)}`);
  }

  trades(): Promise<TradeRow[]> {
    return request(`${this.baseUrl}/trades`);
  }

  logTrade(trade: TradeRequest): Promise<TradeRow> {
    return request(`${this.baseUrl}/trades`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(trade),
    });
  }
}
