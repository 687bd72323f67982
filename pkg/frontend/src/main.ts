/**
 * Bootstrap: wires the client, the poller, and the document together.
 * All rendering goes through the pure functions in render.ts.
 */

import { ThrottleError, WalletClient } from "./api.js";
import { Poller } from "./poll.js";
import {
  CardNotice,
  renderConnectionBanner,
  renderHistory,
  renderInbox,
} from "./render.js";

const client = new WalletClient("");

const bannerHost = document.getElementById("banner")!;
const inboxHost = document.getElementById("inbox")!;
const historyHost = document.getElementById("history")!;

let notice: CardNotice | undefined;
let offline = false;

async function refresh(): Promise<void> {
  try {
    const [pending, history] = await Promise.all([client.pending(), client.history()]);
    offline = false;
    if (notice && !pending.some((view) => view.id === notice!.id)) {
      notice = undefined;
    }
    inboxHost.innerHTML = renderInbox(pending, notice);
    historyHost.innerHTML = renderHistory(history);
  } catch {
    offline = true;
  }
  bannerHost.innerHTML = renderConnectionBanner(offline);
}

inboxHost.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const id = target.dataset.id;
  const act = target.dataset.act;
  if (!id || (act !== "approve" && act !== "deny")) {
    return;
  }
  target.setAttribute("disabled", "disabled");
  void (async () => {
    try {
      await client.act(id, act);
      notice = undefined;
    } catch (error) {
      if (error instanceof ThrottleError) {
        notice = { id, message: `Not yet: ${error.message}` };
      } else {
        notice = { id, message: error instanceof Error ? error.message : String(error) };
      }
    }
    await refresh();
  })();
});

const poller = new Poller({ tick: refresh });
poller.start();
