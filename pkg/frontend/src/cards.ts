/** Chat cards: typed suggestion cards (one exact field set per type code)
 * and guided-test cards with play / pass / fail controls. */

import type { SuggestionRecordWire, SuggestionWire, TestCaseWire } from "./types.js";

export const SUGGESTION_TITLES: Record<SuggestionWire["type"], string> = {
  1: "Add Node",
  2: "Add Edge",
  3: "Edit Assumptions",
  4: "Redraw",
  5: "Edit Node",
  6: "Edit Edge",
  7: "Remove Node",
  8: "Remove Edge",
};

export interface CardField {
  name: string;
  value: string;
  editable: boolean;
}

export interface SuggestionCardModel {
  kind: "suggestion";
  typeCode: SuggestionWire["type"];
  title: string;
  message: string;
  fields: CardField[];
  actionable: boolean;
  disabledReason: string | null;
  controls: ["accept", "edit", "reject"];
}

/** Exactly the payload fields of the suggestion's shape, in wire order. */
export function suggestionFields(suggestion: SuggestionWire): CardField[] {
  switch (suggestion.type) {
    case 1:
      return [field("label", suggestion.label, true)];
    case 2:
      return [
        field("source", suggestion.source, false),
        field("target", suggestion.target, false),
        field("label", suggestion.label, true),
      ];
    case 3:
      return [
        field("node", suggestion.node, false),
        field("assumptions", suggestion.assumptions.join("\n"), true),
      ];
    case 4:
      return [
        field("box", `[${suggestion.box.join(", ")}]`, false),
        field("svg", suggestion.svg, true),
      ];
    case 5:
      return [
        field("node", suggestion.node, false),
        field("oldLabel", suggestion.oldLabel, false),
        field("newLabel", suggestion.newLabel, true),
      ];
    case 6:
      return [
        field("source", suggestion.source, false),
        field("target", suggestion.target, false),
        field("oldLabel", suggestion.oldLabel, false),
        field("newLabel", suggestion.newLabel, true),
      ];
    case 7:
      return [field("node", suggestion.node, false)];
    case 8:
      return [
        field("source", suggestion.source, false),
        field("target", suggestion.target, false),
        field("label", suggestion.label, false),
      ];
  }
}

function field(name: string, value: string, editable: boolean): CardField {
  return { name, value, editable };
}

export function suggestionCard(record: SuggestionRecordWire): SuggestionCardModel {
  const suggestion = record.suggestion;
  return {
    kind: "suggestion",
    typeCode: suggestion.type,
    title: SUGGESTION_TITLES[suggestion.type],
    message: suggestion.message,
    fields: suggestionFields(suggestion),
    actionable: record.valid && record.status === "pending",
    disabledReason: record.valid ? null : record.reasons.join("; "),
    controls: ["accept", "edit", "reject"],
  };
}

export interface GuidedCardModel {
  kind: "guided-test";
  title: string;
  description: string;
  expectedOutcome: string;
  action: string;
  controls: ["play", "pass", "fail"];
}

export function guidedTestCard(testCase: TestCaseWire): GuidedCardModel {
  const value = testCase.actionValue !== undefined ? ` = ${String(testCase.actionValue)}` : "";
  return {
    kind: "guided-test",
    title: "Try it and judge the result",
    description: testCase.description,
    expectedOutcome: testCase.expectedOutcome,
    action: `${testCase.actionType} ${testCase.uiElementId}${value}`,
    controls: ["play", "pass", "fail"],
  };
}

const HTML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"]/g, (c) => HTML_ESCAPES[c]);
}

export function renderSuggestionCardHtml(record: SuggestionRecordWire): string {
  const model = suggestionCard(record);
  const rows = model.fields
    .map(
      (f) =>
        `    <div class="card-field" data-field="${f.name}">` +
        `<span class="field-name">${escapeHtml(f.name)}</span>` +
        (f.editable
          ? `<textarea class="field-value">${escapeHtml(f.value)}</textarea>`
          : `<span class="field-value">${escapeHtml(f.value)}</span>`) +
        `</div>`,
    )
    .join("\n");
  const disabled = model.actionable ? "" : ` disabled title="${escapeHtml(model.disabledReason ?? "settled")}"`;
  return [
    `<div class="card suggestion-card type-${model.typeCode}${model.actionable ? "" : " invalid"}">`,
    `  <h4>${escapeHtml(model.title)}</h4>`,
    `  <p class="message">${escapeHtml(model.message)}</p>`,
    `  <div class="fields">`,
    rows,
    `  </div>`,
    `  <div class="controls">`,
    `    <button class="accept"${disabled}>Accept</button>`,
    `    <button class="reject"${disabled}>Reject</button>`,
    `  </div>`,
    `</div>`,
  ].join("\n");
}

export function renderGuidedCardHtml(testCase: TestCaseWire): string {
  const model = guidedTestCard(testCase);
  return [
    `<div class="card guided-card">`,
    `  <h4>${escapeHtml(model.title)}</h4>`,
    `  <p class="description">${escapeHtml(model.description)}</p>`,
    `  <p class="action"><code>${escapeHtml(model.action)}</code></p>`,
    `  <p class="expected">Expected: ${escapeHtml(model.expectedOutcome)}</p>`,
    `  <div class="controls">`,
    `    <button class="play">Play</button>`,
    `    <button class="pass">Pass</button>`,
    `    <button class="fail">Fail</button>`,
    `  </div>`,
    `</div>`,
  ].join("\n");
}
