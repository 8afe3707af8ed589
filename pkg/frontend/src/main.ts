import { ApiClient } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { wireTickerForm, wireTradeForm } from "./forms.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app")!;
  const api = new ApiClient("");
  const dashboard = new Dashboard(root, api);

  wireTickerForm(root.querySelector<HTMLFormElement>("#ticker-form")!, api, dashboard);
  wireTradeForm(root.querySelector<HTMLFormElement>("#trade-form")!, api, dashboard);

  await dashboard.init();
  let pollSeconds = 5;
  try {
    pollSeconds = (await api.health()).poll_hint_s || 5;
  } catch {
    // init already flagged the connection; keep the default cadence
  }
  await dashboard.pollOnce();
  dashboard.start(pollSeconds * 1000);
}

void boot();
