/** Client-side session store.
 *
 * The server owns all graph state: every mutation posts to the API and then
 * re-fetches the envelope plus any stage the page shows, so the view can
 * never disagree with the server after a settled request. At most one
 * mutating request is in flight per session; stage mutations are never
 * applied optimistically.
 */

import { ApiClient } from "./api.js";
import type {
  SessionEnvelope,
  StageName,
  StageView,
  SuggestionRecordWire,
  TestCaseWire,
  WidgetActionWire,
} from "./types.js";
import type { ChatItem } from "./chat.js";
import { reduceChat, type ChatEvent } from "./chat.js";

export interface Selection {
  nodeId: string | null;
  edge: { source: string; target: string; label: string } | null;
}

export class ViewSession {
  envelope: SessionEnvelope | null = null;
  stages = new Map<StageName, StageView>();
  selection: Selection = { nodeId: null, edge: null };
  openWidget: string | null = null;
  chatItems: ChatItem[] = [];
  annotationLabels: string[] = [];
  guided: TestCaseWire[] = [];
  private mutationInFlight = false;
  private listeners: Array<() => void> = [];

  constructor(readonly api: ApiClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private get sessionId(): string {
    if (!this.envelope) throw new Error("no session yet");
    return this.envelope.sessionId;
  }

  pushChat(event: ChatEvent): void {
    this.chatItems = reduceChat(this.chatItems, event);
    this.notify();
  }

  /** Run one mutation, then resynchronize from the server. */
  private async mutate<T>(op: () => Promise<T>, refreshStages: StageName[]): Promise<T> {
    if (this.mutationInFlight) {
      throw new Error("another change is still being applied");
    }
    this.mutationInFlight = true;
    try {
      const result = await op();
      await this.refresh(refreshStages);
      return result;
    } finally {
      this.mutationInFlight = false;
    }
  }

  async refresh(stages: StageName[] = []): Promise<void> {
    this.envelope = await this.api.getSession(this.sessionId);
    for (const stage of stages) {
      this.stages.set(stage, await this.api.getStage(this.sessionId, stage));
    }
    this.notify();
  }

  async start(): Promise<void> {
    this.envelope = await this.api.createSession();
    this.notify();
  }

  async submitContent(text: string): Promise<void> {
    await this.mutate(() => this.api.submitContent(this.sessionId, text), ["concept"]);
  }

  async applyWidget(stage: StageName, action: WidgetActionWire): Promise<void> {
    await this.mutate(() => this.api.postWidget(this.sessionId, stage, action), [stage]);
  }

  async commit(stage: StageName): Promise<void> {
    await this.mutate(() => this.api.commitStage(this.sessionId, stage), [stage]);
  }

  async discard(stage: StageName): Promise<void> {
    await this.mutate(() => this.api.discardStage(this.sessionId, stage), [stage]);
  }

  async chooseScenario(choice: Parameters<ApiClient["chooseScenario"]>[1]): Promise<void> {
    await this.mutate(() => this.api.chooseScenario(this.sessionId, choice), ["scenario"]);
  }

  async chooseGoal(choice: Parameters<ApiClient["chooseGoal"]>[1]): Promise<void> {
    await this.mutate(() => this.api.chooseGoal(this.sessionId, choice), ["learning_goal"]);
  }

  async generate(): Promise<void> {
    await this.mutate(() => this.api.generate(this.sessionId), ["ui_graph", "code"]);
  }

  async sendComplaint(text: string, refs: { mentionRefs: string[]; annotationRefs: string[] }): Promise<void> {
    this.pushChat({ type: "user", text });
    const { suggestionIndex, record } = await this.mutate(
      () => this.api.chat(this.sessionId, text, refs),
      [],
    );
    this.pushChat({ type: "suggestion", index: suggestionIndex, record });
  }

  async settleSuggestion(index: number, record: SuggestionRecordWire, accept: boolean): Promise<void> {
    if (accept) {
      await this.mutate(() => this.api.acceptSuggestion(this.sessionId, index), ["ui_graph", "code"]);
    } else {
      await this.mutate(() => this.api.rejectSuggestion(this.sessionId, index), []);
    }
    void record;
    this.pushChat({ type: "suggestionSettled", index, outcome: accept ? "accepted" : "rejected" });
  }

  async runTests(): Promise<void> {
    const { records, guided } = await this.mutate(() => this.api.runTests(this.sessionId), ["code"]);
    this.guided = guided;
    this.pushChat({ type: "note", text: `ran ${records.length} automated checks` });
    guided.forEach((testCase, index) => this.pushChat({ type: "guided", index, testCase }));
  }

  async giveVerdict(index: number, verdict: "pass" | "fail", note?: string): Promise<void> {
    const result = await this.mutate(() => this.api.verdict(this.sessionId, index, verdict, note), []);
    this.pushChat({ type: "guidedVerdict", index, outcome: verdict === "pass" ? "passed" : "failed" });
    if (result.record !== undefined && result.suggestionIndex !== undefined) {
      this.pushChat({ type: "suggestion", index: result.suggestionIndex, record: result.record });
    }
  }

  async annotate(box: { x: number; y: number; width: number; height: number }): Promise<string> {
    const { label } = await this.mutate(() => this.api.addAnnotation(this.sessionId, box), []);
    this.annotationLabels.push(label);
    this.notify();
    return label;
  }
}
