// Panel rendering and the poll loop. All values come straight from service
// responses; nothing is computed client-side beyond formatting.

import { ApiClient, ServiceError } from "./api.js";
import type { CombinedInfo, SentimentInfo, SignalInfo } from "./api.js";
import { DashboardModel, PanelModel } from "./model.js";
import { sparklineSvg } from "./sparkline.js";

const STRATEGY_ORDER = ["sma_crossover", "rsi", "stochastic"];
const STRATEGY_LABELS: Record<string, string> = {
  sma_crossover: "SMA cross",
  rsi: "RSI",
  stochastic: "Stoch",
};

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function badge(strategy: string, signal: SignalInfo | undefined, combined: CombinedInfo | undefined): string {
  const direction = signal ? signal.direction : "n/a";
  const size = combined && combined.direction !== "hold"
    ? ` @ ${(combined.size_fraction * 100).toFixed(0)}%`
    : "";
  const title = combined ? escapeHtml(combined.rationale) : "";
  return (
    `<span class="badge badge-${direction}" data-strategy="${strategy}" title="${title}">` +
    `${STRATEGY_LABELS[strategy] ?? strategy}: ${direction}${size}</span>`
  );
}

function sentimentHtml(sentiment: SentimentInfo | null): string {
  if (sentiment === null) {
    return `<div class="sentiment sentiment-none" data-role="sentiment">no sentiment yet</div>`;
  }
  const staleFlag = sentiment.stale ? ` <span class="stale-flag">STALE</span>` : "";
  const pct = (sentiment.confidence * 100).toFixed(0);
  return (
    `<div class="sentiment sentiment-${sentiment.label}" data-role="sentiment">` +
    `${sentiment.label} ${pct}%${staleFlag}` +
    `<div class="summary">${escapeHtml(sentiment.summary)}</div></div>`
  );
}

function panelHtml(panel: PanelModel): string {
  const state = panel.state;
  const bar = state?.bar ?? null;
  const vwapText = bar ? bar.vwap.toFixed(4) : "no bar yet";
  const barTime = bar ? new Date(bar.minute_start).toISOString().slice(11, 16) : "-";
  const badges = STRATEGY_ORDER.map((strategy) =>
    badge(strategy, state?.signals[strategy], state?.combined[strategy]),
  ).join(" ");
  const scrollback = panel.signalLog
    .slice()
    .reverse()
    .map(
      (event) =>
        `<li>${new Date(event.barTime).toISOString().slice(11, 16)} ` +
        `${STRATEGY_LABELS[event.strategy] ?? event.strategy} ${event.direction}</li>`,
    )
    .join("");
  const counters = state
    ? `in ${state.counters.ingested} / dropped ${state.counters.dropped}`
    : "";
  return `
    <h3>${panel.ticker}</h3>
    ${sparklineSvg(panel.vwapHistory)}
    <div class="vwap" data-role="vwap">${vwapText}</div>
    <div class="bar-time">${barTime} &middot; ${counters}</div>
    <div class="signals" data-role="signals">${badges}</div>
    ${sentimentHtml(state?.sentiment ?? null)}
    <ul class="scrollback" data-role="scrollback">${scrollback}</ul>`;
}

export class Dashboard {
  readonly model: DashboardModel;
  private readonly inFlight = new Set<string>();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    model?: DashboardModel,
  ) {
    this.model = model ?? new DashboardModel();
  }

  /** Pull tickers and the journal, then render; a reload rebuilds everything. */
  async init(): Promise<void> {
    try {
      const health = await this.api.health();
      this.model.setTickers(health.tickers);
      this.model.setJournal(await this.api.trades());
      this.model.connected = true;
    } catch {
      this.model.connected = false;
    }
    this.renderAll();
  }

  start(intervalMs: number): void {
    this.stop();
    this.timer = setInterval(() => {
      void this.pollOnce();
    }, intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** One sweep over the watchlist; at most one request in flight per ticker. */
  async pollOnce(): Promise<void> {
    const sweeps = this.model.tickers
      .filter((ticker) => !this.inFlight.has(ticker))
      .map(async (ticker) => {
        this.inFlight.add(ticker);
        try {
          const state = await this.api.state(ticker);
          this.model.applyState(ticker, state);
          this.model.connected = true;
        } catch (error) {
          if (error instanceof ServiceError && error.status === 404) {
            // removed server-side; drop the panel on this poll
            this.model.setTickers(this.model.tickers.filter((t) => t !== ticker));
          } else {
            this.model.connected = false;
          }
        } finally {
          this.inFlight.delete(ticker);
        }
      });
    await Promise.all(sweeps);
    this.renderAll();
  }

  renderAll(): void {
    this.renderBanner();
    this.renderPanels();
    this.renderJournal();
  }

  private renderBanner(): void {
    const banner = this.root.querySelector<HTMLElement>("#connection-banner");
    if (!banner) return;
    banner.hidden = this.model.connected;
    banner.textContent = this.model.connected
      ? ""
      : "service unreachable - showing last known data";
  }

  private renderPanels(): void {
    const host = this.root.querySelector<HTMLElement>("#panels");
    if (!host) return;
    const wanted = new Set(this.model.tickers);
    for (const el of [...host.querySelectorAll<HTMLElement>(".panel")]) {
      if (!wanted.has(el.dataset.ticker ?? "")) el.remove();
    }
    for (const ticker of this.model.tickers) {
      const panel = this.model.panels.get(ticker);
      if (!panel) continue;
      let el = host.querySelector<HTMLElement>(`.panel[data-ticker="${ticker}"]`);
      if (!el) {
        el = document.createElement("article");
        el.className = "panel";
        el.dataset.ticker = ticker;
        host.appendChild(el);
      }
      el.innerHTML = panelHtml(panel);
    }
  }

  private renderJournal(): void {
    const body = this.root.querySelector<HTMLElement>("#journal-body");
    if (!body) return;
    body.innerHTML = this.model.journal
      .map(
        (trade) =>
          `<tr data-trade-id="${trade.id}"><td>${trade.id}</td><td>${trade.ticker}</td>` +
          `<td>${trade.side}</td><td>${trade.quantity}</td><td>${trade.price}</td>` +
          `<td>${new Date(trade.logged_at).toISOString()}</td>` +
          `<td>${escapeHtml(trade.note)}</td></tr>`,
      )
      .join("");
  }
}
