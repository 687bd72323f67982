/**
 * Pure view -> HTML string rendering. No DOM access here, which keeps every
 * branch testable without a browser; main.ts owns the live document.
 */

import { PendingRequestView, capPurpose, escapeHtml } from "./model.js";

export interface CardNotice {
  id: string;
  message: string;
}

export function renderCard(view: PendingRequestView, notice?: CardNotice): string {
  const warning = view.rpChainValid
    ? ""
    : `<div class="badge badge-warning" role="alert">⚠ certificate did not validate — treat this request with suspicion</div>`;
  const labels = view.attributeLabels
    .map((label) => `<li>${escapeHtml(label)}</li>`)
    .join("");
  // Party-supplied prose is visibly quoted and capped; labels above come
  // from the wallet's own schema registry.
  const purpose = view.purpose
    ? `<p class="purpose">states as its purpose: <q>${escapeHtml(capPurpose(view.purpose))}</q></p>`
    : `<p class="purpose purpose-none">gave no purpose</p>`;
  const inline = notice && notice.id === view.id
    ? `<div class="badge badge-inline-error" role="alert">${escapeHtml(notice.message)}</div>`
    : "";
  return `<article class="card" data-id="${escapeHtml(view.id)}">
  ${warning}
  <h3>${escapeHtml(view.rpCommonName)}</h3>
  <p>asks you to disclose:</p>
  <ul class="labels">${labels}</ul>
  ${purpose}
  <p class="meta">received ${escapeHtml(view.receivedAt)}</p>
  ${inline}
  <div class="actions">
    <button class="approve" data-id="${escapeHtml(view.id)}" data-act="approve">Approve</button>
    <button class="deny" data-id="${escapeHtml(view.id)}" data-act="deny">Deny</button>
  </div>
</article>`;
}

export function renderInbox(views: PendingRequestView[], notice?: CardNotice): string {
  if (views.length === 0) {
    return `<p class="empty">No pending requests. When a party asks for your attributes, it shows up here.</p>`;
  }
  return views.map((view) => renderCard(view, notice)).join("\n");
}

const STATE_LABELS: Record<string, string> = {
  completed: "completed",
  denied: "denied",
  failed: "failed",
  approved: "in flight",
  pending: "pending",
};

export function renderHistoryRow(view: PendingRequestView): string {
  const outcome =
    view.state === "completed" && view.rpAccepted === false
      ? "completed (party rejected the claim)"
      : STATE_LABELS[view.state] ?? view.state;
  const error = view.error ? ` — ${escapeHtml(view.error)}` : "";
  return `<li class="history-${escapeHtml(view.state)}">
  <span class="who">${escapeHtml(view.rpCommonName)}</span>
  <span class="what">${view.attributeLabels.map(escapeHtml).join(", ")}</span>
  <span class="when">${escapeHtml(view.receivedAt)}</span>
  <span class="state">${escapeHtml(outcome)}${error}</span>
</li>`;
}

export function renderHistory(views: PendingRequestView[]): string {
  if (views.length === 0) {
    return `<p class="empty">Nothing decided yet.</p>`;
  }
  return `<ul class="history">${views.map(renderHistoryRow).join("\n")}</ul>`;
}

export function renderConnectionBanner(visible: boolean): string {
  return visible
    ? `<div class="banner banner-offline" role="alert">Wallet unreachable — retrying…</div>`
    : "";
}
