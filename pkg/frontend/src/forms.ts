// Ticker submission and trade logging forms. Errors render inline and are
// never swallowed; client checks mirror what the service rejects with 422.

import { ApiClient, ServiceError } from "./api.js";
import { Dashboard } from "./dashboard.js";

function showError(el: HTMLElement | null, message: string): void {
  if (!el) return;
  el.textContent = message;
  el.hidden = message === "";
}

export function parseSymbols(input: string): string[] {
  return input
    .split(/[\s,]+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

export function wireTickerForm(
  form: HTMLFormElement,
  api: ApiClient,
  dashboard: Dashboard,
  confirmFn: (message: string) => boolean = (m) => window.confirm(m),
): void {
  const input = form.querySelector<HTMLInputElement>("input[name=symbols]")!;
  const errorEl = form.querySelector<HTMLElement>(".form-error");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      const symbols = parseSymbols(input.value);
      if (symbols.length === 0 && !confirmFn("Stop tracking all tickers?")) {
        return;
      }
      try {
        const accepted = await api.submitTickers(symbols);
        dashboard.model.setTickers(accepted.tickers);
        showError(errorEl, "");
        dashboard.renderAll();
        await dashboard.pollOnce();
      } catch (error) {
        if (error instanceof ServiceError && error.code === "invalid_ticker") {
          const rejected = Array.isArray(error.detail) ? error.detail.join(", ") : "?";
          showError(errorEl, `rejected symbols: ${rejected}`);
        } else {
          showError(errorEl, `submission failed: ${String(error)}`);
        }
      }
    })();
  });
}

export function wireTradeForm(form: HTMLFormElement, api: ApiClient, dashboard: Dashboard): void {
  const errorEl = form.querySelector<HTMLElement>(".form-error");
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void (async () => {
      const data = new FormData(form);
      const quantity = Number(data.get("quantity"));
      const price = Number(data.get("price"));
      if (!(quantity > 0) || !(price > 0)) {
        showError(errorEl, "quantity and price must be positive");
        return;
      }
      try {
        const trade = await api.logTrade({
          ticker: String(data.get("ticker") ?? "").trim().toUpperCase(),
          side: String(data.get("side") ?? "long"),
          quantity,
          price,
          note: String(data.get("note") ?? ""),
        });
        dashboard.model.appendTrade(trade);
        showError(errorEl, "");
        form.reset();
        dashboard.renderAll();
      } catch (error) {
        if (error instanceof ServiceError) {
          showError(errorEl, `rejected: ${JSON.stringify(error.detail)}`);
        } else {
          showError(errorEl, `logging failed: ${String(error)}`);
        }
      }
    })();
  });
}
