/** Chat stream state and the "@" mention autocomplete. */

import type { SuggestionRecordWire, TestCaseWire } from "./types.js";
import { parseGraphText } from "./graphText.js";

export type ChatItem =
  | { kind: "userText"; text: string }
  | { kind: "systemNote"; text: string }
  | { kind: "suggestionCard"; index: number; record: SuggestionRecordWire; state: "pending" | "accepted" | "rejected" }
  | { kind: "guidedTestCard"; index: number; testCase: TestCaseWire; state: "pending" | "passed" | "failed" };

export type ChatEvent =
  | { type: "user"; text: string }
  | { type: "note"; text: string }
  | { type: "suggestion"; index: number; record: SuggestionRecordWire }
  | { type: "guided"; index: number; testCase: TestCaseWire }
  | { type: "suggestionSettled"; index: number; outcome: "accepted" | "rejected" }
  | { type: "guidedVerdict"; index: number; outcome: "passed" | "failed" };

export function reduceChat(items: ChatItem[], event: ChatEvent): ChatItem[] {
  switch (event.type) {
    case "user":
      return [...items, { kind: "userText", text: event.text }];
    case "note":
      return [...items, { kind: "systemNote", text: event.text }];
    case "suggestion":
      return [...items, { kind: "suggestionCard", index: event.index, record: event.record, state: "pending" }];
    case "guided":
      return [...items, { kind: "guidedTestCard", index: event.index, testCase: event.testCase, state: "pending" }];
    case "suggestionSettled":
      return items.map((item) =>
        item.kind === "suggestionCard" && item.index === event.index
          ? { ...item, state: event.outcome }
          : item,
      );
    case "guidedVerdict":
      return items.map((item) =>
        item.kind === "guidedTestCard" && item.index === event.index
          ? { ...item, state: event.outcome }
          : item,
      );
  }
}

export interface MentionCandidate {
  value: string;
  display: string;
  kind: "node" | "annotation";
}

/** Everything "@" can reference: every UI-graph node plus every annotation label. */
export function mentionCandidates(uiGraphText: string, annotationLabels: string[]): MentionCandidate[] {
  const view = parseGraphText(uiGraphText);
  const nodes: MentionCandidate[] = view.nodes.map((n) => ({
    value: n.id,
    display: `${n.label} (${n.id})`,
    kind: "node",
  }));
  const annotations: MentionCandidate[] = annotationLabels.map((label) => ({
    value: label,
    display: label,
    kind: "annotation",
  }));
  return [...nodes, ...annotations];
}

/** Candidates filtered by the text typed after "@" (case-insensitive). */
export function filterMentions(candidates: MentionCandidate[], typed: string): MentionCandidate[] {
  const needle = typed.toLowerCase();
  return candidates.filter(
    (c) => c.value.toLowerCase().includes(needle) || c.display.toLowerCase().includes(needle),
  );
}

/** Split a draft complaint into text plus the refs it mentions with "@". */
export function extractRefs(
  text: string,
  candidates: MentionCandidate[],
): { mentionRefs: string[]; annotationRefs: string[] } {
  const mentionRefs: string[] = [];
  const annotationRefs: string[] = [];
  for (const match of text.matchAll(/@([\w()-]+)/g)) {
    const token = match[1];
    const candidate = candidates.find((c) => c.value === token);
    if (!candidate) continue;
    if (candidate.kind === "node" && !mentionRefs.includes(token)) mentionRefs.push(token);
    if (candidate.kind === "annotation" && !annotationRefs.includes(token)) annotationRefs.push(token);
  }
  return { mentionRefs, annotationRefs };
}
