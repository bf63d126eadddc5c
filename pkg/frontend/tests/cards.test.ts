import { describe, expect, it } from "vitest";

import {
  guidedTestCard,
  renderGuidedCardHtml,
  renderSuggestionCardHtml,
  suggestionCard,
  suggestionFields,
} from "../src/cards.js";
import type { SuggestionRecordWire, SuggestionWire, TestCaseWire } from "../src/types.js";

const SUGGESTIONS: Record<number, SuggestionWire> = {
  1: { type: 1, message: "I would add a wind gauge.", label: "Wind Gauge" },
  2: { type: 2, message: "I would connect the slider.", source: "slider-weight", target: "balloon", label: "controls" },
  3: { type: 3, message: "I would widen the range.", node: "slider-weight", assumptions: ["range 5-105 kg", "step 5 kg"] },
  4: { type: 4, message: "I would redraw the envelope.", box: [10, 20, 100, 80], svg: "<svg><circle r='40'/></svg>" },
  5: { type: 5, message: "I would rename the slider.", node: "slider-weight", oldLabel: "Weight", newLabel: "Basket Weight" },
  6: { type: 6, message: "I would clarify the edge.", source: "slider-weight", target: "balloon", oldLabel: "changes", newLabel: "sets" },
  7: { type: 7, message: "I would remove the gauge.", node: "gauge-unused" },
  8: { type: 8, message: "I would drop the link.", source: "balloon", target: "gauge-unused", label: "reports to" },
};

const EXPECTED_FIELDS: Record<number, string[]> = {
  1: ["label"],
  2: ["source", "target", "label"],
  3: ["node", "assumptions"],
  4: ["box", "svg"],
  5: ["node", "oldLabel", "newLabel"],
  6: ["source", "target", "oldLabel", "newLabel"],
  7: ["node"],
  8: ["source", "target", "label"],
};

function record(suggestion: SuggestionWire, valid = true): SuggestionRecordWire {
  return { suggestion, valid, reasons: valid ? [] : ["unknown node"], complaintText: "c", status: "pending" };
}

describe("suggestion cards", () => {
  for (const code of [1, 2, 3, 4, 5, 6, 7, 8] as const) {
    it(`type ${code} renders exactly its field set`, () => {
      const fields = suggestionFields(SUGGESTIONS[code]);
      expect(fields.map((f) => f.name)).toEqual(EXPECTED_FIELDS[code]);
      expect(renderSuggestionCardHtml(record(SUGGESTIONS[code]))).toMatchSnapshot();
    });
  }

  it("cards for all eight types expose accept and reject controls", () => {
    for (const code of [1, 2, 3, 4, 5, 6, 7, 8] as const) {
      const model = suggestionCard(record(SUGGESTIONS[code]));
      expect(model.controls).toEqual(["accept", "edit", "reject"]);
      expect(model.actionable).toBe(true);
    }
  });

  it("invalid suggestions render greyed with a reason and no live controls", () => {
    const html = renderSuggestionCardHtml(record(SUGGESTIONS[7], false));
    expect(html).toContain("invalid");
    expect(html).toContain("disabled");
    expect(html).toContain("unknown node");
    const model = suggestionCard(record(SUGGESTIONS[7], false));
    expect(model.actionable).toBe(false);
    expect(model.disabledReason).toBe("unknown node");
  });

  it("type 3 exposes the assumption list as editable before accept", () => {
    const fields = suggestionFields(SUGGESTIONS[3]);
    const assumptions = fields.find((f) => f.name === "assumptions")!;
    expect(assumptions.editable).toBe(true);
    expect(assumptions.value.split("\n")).toEqual(["range 5-105 kg", "step 5 kg"]);
  });

  it("escapes markup in model-controlled text", () => {
    const nasty = record({ type: 1, message: "<script>alert(1)</script>", label: "<b>x</b>" });
    const html = renderSuggestionCardHtml(nasty);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("guided test cards", () => {
  const testCase: TestCaseWire = {
    uiElementId: "slider-weight",
    actionType: "set_value",
    actionValue: 20,
    description: "Lighten the basket visually",
    expectedOutcome: "Balloon floats higher",
    isUIVerification: true,
  };

  it("renders play / pass / fail controls", () => {
    const model = guidedTestCard(testCase);
    expect(model.controls).toEqual(["play", "pass", "fail"]);
    expect(model.action).toBe("set_value slider-weight = 20");
    expect(renderGuidedCardHtml(testCase)).toMatchSnapshot();
  });
});
