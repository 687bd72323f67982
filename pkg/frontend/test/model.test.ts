import { describe, expect, it } from "vitest";

import {
  PURPOSE_DISPLAY_LIMIT,
  capPurpose,
  escapeHtml,
  parseView,
  parseViewList,
} from "../src/model.js";

const wireEntry = {
  id: "req-000001",
  rp_common_name: "lender.example",
  attribute_labels: ["Name", "Credit score"],
  purpose: "loan application",
  received_at: "2020-01-01T00:00:00Z",
  rp_chain_valid: true,
  state: "pending",
  human_text: "lender.example asks you to disclose: Name, Credit score.",
};

describe("parseView", () => {
  it("maps a wire entry one-to-one", () => {
    const view = parseView(wireEntry);
    expect(view.id).toBe("req-000001");
    expect(view.rpCommonName).toBe("lender.example");
    expect(view.attributeLabels).toEqual(["Name", "Credit score"]);
    expect(view.purpose).toBe("loan application");
    expect(view.rpChainValid).toBe(true);
    expect(view.state).toBe("pending");
    expect(view.error).toBeNull();
    expect(view.rpAccepted).toBeNull();
  });

  it("treats purpose as optional", () => {
    const { purpose, ...rest } = wireEntry;
    expect(parseView(rest).purpose).toBeNull();
  });

  it("keeps the flagged-chain bit", () => {
    expect(parseView({ ...wireEntry, rp_chain_valid: false }).rpChainValid).toBe(false);
  });

  it("carries error and party verdict when present", () => {
    const view = parseView({
      ...wireEntry,
      state: "failed",
      error: "authority refused",
      rp_accepted: false,
    });
    expect(view.error).toBe("authority refused");
    expect(view.rpAccepted).toBe(false);
  });

  it.each([
    [null],
    ["string"],
    [{}],
    [{ ...wireEntry, id: 7 }],
    [{ ...wireEntry, attribute_labels: [] }],
    [{ ...wireEntry, attribute_labels: ["ok", 3] }],
    [{ ...wireEntry, state: "exploded" }],
    [{ ...wireEntry, rp_chain_valid: "yes" }],
  ])("rejects malformed wire data %#", (raw) => {
    expect(() => parseView(raw)).toThrow();
  });

  it("rejects non-array lists", () => {
    expect(() => parseViewList({})).toThrow();
    expect(parseViewList([wireEntry])).toHaveLength(1);
  });
});

describe("capPurpose", () => {
  it("leaves short text alone", () => {
    expect(capPurpose("buy a kettle")).toBe("buy a kettle");
  });

  it("caps long party-supplied text visibly", () => {
    const long = "x".repeat(PURPOSE_DISPLAY_LIMIT + 50);
    const capped = capPurpose(long);
    expect(capped.length).toBe(PURPOSE_DISPLAY_LIMIT + 1);
    expect(capped.endsWith("…")).toBe(true);
  });
});

describe("escapeHtml", () => {
  it("neutralizes markup", () => {
    expect(escapeHtml(`<script>alert("x")</script>`)).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
    expect(escapeHtml("a & 'b'")).toBe("a &amp; &#39;b&#39;");
  });
});
