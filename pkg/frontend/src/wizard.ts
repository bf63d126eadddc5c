/** Wizard page gating derived from the server's stage statuses.
 * The rules mirror the server's committed-prefix discipline: a page opens
 * only when everything before it is committed, and a stale stage gets a
 * badge instead of silently showing old content. */

import type { SessionEnvelope, StageName, StageStatus } from "./types.js";

export type PageId = "learning-content" | "scenario" | "learning-goals" | "interactivity";

export const PAGES: PageId[] = ["learning-content", "scenario", "learning-goals", "interactivity"];

/** Stages each page needs committed before it is reachable. */
const PREREQUISITES: Record<PageId, StageName[]> = {
  "learning-content": [],
  scenario: ["concept"],
  "learning-goals": ["concept", "scenario"],
  interactivity: ["concept", "scenario", "learning_goal"],
};

/** Stages whose content a page presents (staleness badges come from these). */
const PRESENTS: Record<PageId, StageName[]> = {
  "learning-content": ["concept"],
  scenario: ["scenario"],
  "learning-goals": ["learning_goal"],
  interactivity: ["ui_graph", "code"],
};

export interface PageState {
  page: PageId;
  enabled: boolean;
  staleBadge: boolean;
  disabledReason: string | null;
}

export function wizardState(envelope: SessionEnvelope): PageState[] {
  const statuses = envelope.stageStatuses;
  return PAGES.map((page) => {
    const missing = PREREQUISITES[page].filter((stage) => statuses[stage] !== "committed");
    const stale = PRESENTS[page].some((stage) => statuses[stage] === "stale");
    return {
      page,
      enabled: missing.length === 0,
      staleBadge: stale,
      disabledReason:
        missing.length === 0 ? null : `commit ${missing.map(stageLabel).join(", ")} first`,
    };
  });
}

export function enabledPages(envelope: SessionEnvelope): PageId[] {
  return wizardState(envelope)
    .filter((p) => p.enabled)
    .map((p) => p.page);
}

/** The page the wizard should land on, given server state. */
export function activePage(envelope: SessionEnvelope): PageId {
  const states = wizardState(envelope);
  let candidate: PageId = "learning-content";
  for (const state of states) {
    if (state.enabled) candidate = state.page;
  }
  return candidate;
}

export function stageLabel(stage: StageName): string {
  switch (stage) {
    case "concept":
      return "Concept Graph";
    case "scenario":
      return "Scenario Graph";
    case "learning_goal":
      return "Learning Goal Graph";
    case "ui_graph":
      return "UI Interaction Graph";
    case "code":
      return "Simulation";
  }
}

export function statusLabel(status: StageStatus): string {
  return status.charAt(0).toUpperCase() + status.slice(1);
}
