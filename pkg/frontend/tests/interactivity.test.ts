/** Interactivity page flows against the live service: automated tests,
 * chat suggestion, accept, and share. */

import { describe, expect, it } from "vitest";

import { parseGraphText } from "../src/graphText.js";
import { client, serverInfo } from "./helpers.js";

async function driveToCommittedCode() {
  const api = client();
  const { learningContent } = serverInfo();
  let envelope = await api.createSession();
  const sid = envelope.sessionId;
  await api.submitContent(sid, learningContent);
  await api.commitStage(sid, "concept");
  const { options } = await api.listScenarios(sid);
  await api.chooseScenario(sid, options.find((o) => o.title.includes("Hot Air Balloon"))!);
  await api.commitStage(sid, "scenario");
  const goals = await api.listGoals(sid);
  await api.chooseGoal(sid, goals.options.find((g) => g.goalCategory === "descriptive")!);
  await api.commitStage(sid, "learning_goal");
  await api.generate(sid);
  envelope = await api.commitStage(sid, "code");
  return { api, sid, envelope };
}

describe("interactivity page against the live service", () => {
  it("runs automated tests and partitions guided cases", async () => {
    const { api, sid } = await driveToCommittedCode();
    const run = await api.runTests(sid);
    expect(run.records).toHaveLength(2);
    expect(run.guided).toHaveLength(1);
    expect(run.guided[0].isUIVerification).toBe(true);
    expect(run.records.every((r) => !r.case.isUIVerification)).toBe(true);
  });

  it("chat complaint yields a typed suggestion; accepting drafts graph and code", async () => {
    const { api, sid } = await driveToCommittedCode();
    await api.runTests(sid); // same order as the recorded flow
    const { canonicalComplaint } = serverInfo() as unknown as { canonicalComplaint: string };
    const { suggestionIndex, record } = await api.chat(sid, canonicalComplaint);
    expect(record.suggestion.type).toBe(7);
    expect(record.valid).toBe(true);

    const envelope = await api.acceptSuggestion(sid, suggestionIndex);
    expect(envelope.stageStatuses.ui_graph).toBe("draft");
    expect(envelope.stageStatuses.code).toBe("draft");

    const ui = await api.getStage(sid, "ui_graph");
    const ids = parseGraphText(ui.content!).nodes.map((n) => n.id);
    expect(ids).not.toContain("display-altitude");
  });

  it("shares an immutable simulation document", async () => {
    const { api, sid } = await driveToCommittedCode();
    const code = await api.getStage(sid, "code");
    const { simulationId } = await api.share(sid);
    const shared = await api.fetchSharedSimulation(simulationId);
    expect(shared).toBe(code.content);
    await api.postWidget(sid, "concept", { kind: "add_node", label: "Wind" });
    expect(await api.fetchSharedSimulation(simulationId)).toBe(shared);
  });
});
