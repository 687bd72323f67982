/**
 * View models for the wallet control API.
 *
 * Everything arriving over the wire is treated as untrusted: unknown shapes
 * are rejected, attribute labels come from the wallet's schema registry
 * (never from party-supplied text), and the purpose string is the one piece
 * of party-supplied prose we display, so it is length-capped and always
 * rendered visibly quoted.
 */

export type RequestState = "pending" | "approved" | "denied" | "completed" | "failed";

export interface PendingRequestView {
  id: string;
  rpCommonName: string;
  attributeLabels: string[];
  purpose: string | null;
  receivedAt: string;
  rpChainValid: boolean;
  state: RequestState;
  humanText: string;
  error: string | null;
  rpAccepted: boolean | null;
}

export const PURPOSE_DISPLAY_LIMIT = 200;

const STATES: ReadonlySet<string> = new Set([
  "pending",
  "approved",
  "denied",
  "completed",
  "failed",
]);

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((item) => typeof item === "string");
}

/** Parse one wire object into a view, or explain why it is unusable. */
export function parseView(raw: unknown): PendingRequestView {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("pending entry is not an object");
  }
  const record = raw as Record<string, unknown>;
  const { id, rp_common_name, attribute_labels, received_at, rp_chain_valid, state } = record;
  if (typeof id !== "string" || id.length === 0) {
    throw new Error("pending entry lacks an id");
  }
  if (typeof rp_common_name !== "string" || rp_common_name.length === 0) {
    throw new Error(`entry ${id}: missing relying party name`);
  }
  if (!isStringArray(attribute_labels) || attribute_labels.length === 0) {
    throw new Error(`entry ${id}: missing attribute labels`);
  }
  if (typeof received_at !== "string") {
    throw new Error(`entry ${id}: missing received_at`);
  }
  if (typeof rp_chain_valid !== "boolean") {
    throw new Error(`entry ${id}: missing rp_chain_valid`);
  }
  if (typeof state !== "string" || !STATES.has(state)) {
    throw new Error(`entry ${id}: unknown state ${String(state)}`);
  }
  return {
    id,
    rpCommonName: rp_common_name,
    attributeLabels: attribute_labels,
    purpose: typeof record.purpose === "string" ? record.purpose : null,
    receivedAt: received_at,
    rpChainValid: rp_chain_valid,
    state: state as RequestState,
    humanText: typeof record.human_text === "string" ? record.human_text : "",
    error: typeof record.error === "string" ? record.error : null,
    rpAccepted: typeof record.rp_accepted === "boolean" ? record.rp_accepted : null,
  };
}

export function parseViewList(raw: unknown): PendingRequestView[] {
  if (!Array.isArray(raw)) {
    throw new Error("expected an array of pending entries");
  }
  return raw.map(parseView);
}

/** Cap party-supplied purpose text for display; marks truncation visibly. */
export function capPurpose(purpose: string): string {
  if (purpose.length <= PURPOSE_DISPLAY_LIMIT) {
    return purpose;
  }
  return purpose.slice(0, PURPOSE_DISPLAY_LIMIT) + "…";
}

/** Minimal HTML escaping; applied to every dynamic string we render. */
export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}
