import { describe, expect, it } from "vitest";

import { extractRefs, filterMentions, mentionCandidates, reduceChat, type ChatItem } from "../src/chat.js";
import type { SuggestionRecordWire } from "../src/types.js";

const UI_GRAPH_TEXT = [
  "graph LR",
  "    Object[Hot Air Balloon]",
  "    Weight[Basket Weight]",
  "    slider-weight[Basket Weight Slider]",
  "    button-release[Release Button]",
  "    Object -->|has| Weight",
  "    slider-weight -->|sets| Weight",
].join("\n");

describe("@ mention autocomplete", () => {
  it("lists every UI-graph node plus every annotation label", () => {
    const candidates = mentionCandidates(UI_GRAPH_TEXT, ["A1", "A2"]);
    const values = candidates.map((c) => c.value);
    expect(values).toEqual(["Object", "Weight", "slider-weight", "button-release", "A1", "A2"]);
    expect(candidates.filter((c) => c.kind === "annotation")).toHaveLength(2);
    const slider = candidates.find((c) => c.value === "slider-weight")!;
    expect(slider.display).toBe("Basket Weight Slider (slider-weight)");
  });

  it("filters by typed text against id and label", () => {
    const candidates = mentionCandidates(UI_GRAPH_TEXT, ["A1"]);
    expect(filterMentions(candidates, "slider").map((c) => c.value)).toEqual(["slider-weight"]);
    expect(filterMentions(candidates, "basket").map((c) => c.value)).toEqual([
      "Weight",
      "slider-weight",
    ]);
    expect(filterMentions(candidates, "a1").map((c) => c.value)).toEqual(["A1"]);
    expect(filterMentions(candidates, "")).toHaveLength(5);
  });

  it("extracts node and annotation refs from a draft complaint", () => {
    const candidates = mentionCandidates(UI_GRAPH_TEXT, ["A1", "A2"]);
    const refs = extractRefs("the @slider-weight near @A2 does nothing, see @slider-weight", candidates);
    expect(refs.mentionRefs).toEqual(["slider-weight"]);
    expect(refs.annotationRefs).toEqual(["A2"]);
    expect(extractRefs("no mentions here", candidates)).toEqual({ mentionRefs: [], annotationRefs: [] });
  });
});

describe("chat stream reducer", () => {
  const suggestionRecord: SuggestionRecordWire = {
    suggestion: { type: 7, message: "I would remove it.", node: "button-release" },
    valid: true,
    reasons: [],
    complaintText: "c",
    status: "pending",
  };

  it("appends items and settles cards in place", () => {
    let items: ChatItem[] = [];
    items = reduceChat(items, { type: "user", text: "the button is useless" });
    items = reduceChat(items, { type: "suggestion", index: 0, record: suggestionRecord });
    items = reduceChat(items, {
      type: "guided",
      index: 0,
      testCase: {
        uiElementId: "button-release",
        actionType: "click",
        description: "press it",
        expectedOutcome: "launches",
        isUIVerification: true,
      },
    });
    expect(items.map((i) => i.kind)).toEqual(["userText", "suggestionCard", "guidedTestCard"]);

    items = reduceChat(items, { type: "suggestionSettled", index: 0, outcome: "accepted" });
    items = reduceChat(items, { type: "guidedVerdict", index: 0, outcome: "failed" });
    expect(items[1]).toMatchObject({ kind: "suggestionCard", state: "accepted" });
    expect(items[2]).toMatchObject({ kind: "guidedTestCard", state: "failed" });
    expect(items).toHaveLength(3); // settles update, never append
  });
});
