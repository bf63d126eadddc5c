import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient } from "../src/api.js";
import type { SessionEnvelope, StageName, StageStatus } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function serverInfo(): { baseUrl: string; learningContent: string } {
  return JSON.parse(readFileSync(join(here, ".server-info.json"), "utf-8"));
}

export function client(): ApiClient {
  return new ApiClient(serverInfo().baseUrl);
}

export function fakeEnvelope(statuses: Partial<Record<StageName, StageStatus>>): SessionEnvelope {
  const all: Record<StageName, StageStatus> = {
    concept: "empty",
    scenario: "empty",
    learning_goal: "empty",
    ui_graph: "empty",
    code: "empty",
    ...statuses,
  };
  return {
    sessionId: "fixture",
    stageStatuses: all,
    currentStage: "concept",
    links: {
      concept: "/sessions/fixture/stages/concept",
      scenario: "/sessions/fixture/stages/scenario",
      learning_goal: "/sessions/fixture/stages/learning_goal",
      ui_graph: "/sessions/fixture/stages/ui_graph",
      code: "/sessions/fixture/stages/code",
    },
  };
}

/** Drive a fresh server session up to a committed concept graph. */
export async function sessionWithCommittedConcept(api: ApiClient): Promise<string> {
  const { learningContent } = serverInfo();
  const { sessionId } = await api.createSession();
  await api.submitContent(sessionId, learningContent);
  await api.commitStage(sessionId, "concept");
  return sessionId;
}
