/** Typed client for the authoring service. All graph edits round-trip here;
 * the client never mutates a graph locally. */

import type {
  ApiErrorBody,
  OptionWire,
  SessionEnvelope,
  StageName,
  StageView,
  SuggestionRecordWire,
  TestCaseWire,
  TestRecordWire,
  WidgetActionWire,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.detail}`);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody = { code: "UNKNOWN", detail: response.statusText, journalRef: null };
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; keep the fallback
  }
  throw new ApiError(response.status, body);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<SessionEnvelope> {
    return this.request("POST", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionEnvelope> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  submitContent(sessionId: string, text: string): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/content`, { text });
  }

  getStage(sessionId: string, stage: StageName): Promise<StageView> {
    return this.request("GET", `/sessions/${sessionId}/stages/${stage}`);
  }

  postWidget(sessionId: string, stage: StageName, action: WidgetActionWire): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/stages/${stage}/widget`, action);
  }

  commitStage(sessionId: string, stage: StageName): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/stages/${stage}/commit`);
  }

  discardStage(sessionId: string, stage: StageName): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/stages/${stage}/discard`);
  }

  listScenarios(sessionId: string): Promise<{ options: OptionWire[]; warnings: string[] }> {
    return this.request("GET", `/sessions/${sessionId}/scenarios`);
  }

  chooseScenario(sessionId: string, choice: OptionWire | { freeText: string }): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/scenario`, choice);
  }

  listGoals(sessionId: string): Promise<{ options: OptionWire[]; warnings: string[] }> {
    return this.request("GET", `/sessions/${sessionId}/goals`);
  }

  chooseGoal(sessionId: string, choice: OptionWire): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/goal`, choice);
  }

  generate(sessionId: string): Promise<SessionEnvelope & { document: string; issues: string[] }> {
    return this.request("POST", `/sessions/${sessionId}/generate`);
  }

  chat(
    sessionId: string,
    text: string,
    refs?: { mentionRefs?: string[]; annotationRefs?: string[]; screenshotB64?: string },
  ): Promise<{ suggestionIndex: number; record: SuggestionRecordWire }> {
    return this.request("POST", `/sessions/${sessionId}/chat`, { text, ...refs });
  }

  acceptSuggestion(sessionId: string, index: number): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/suggestions/${index}/accept`);
  }

  rejectSuggestion(sessionId: string, index: number): Promise<SessionEnvelope> {
    return this.request("POST", `/sessions/${sessionId}/suggestions/${index}/reject`);
  }

  runTests(sessionId: string): Promise<{ records: TestRecordWire[]; guided: TestCaseWire[] }> {
    return this.request("POST", `/sessions/${sessionId}/tests/run`);
  }

  verdict(
    sessionId: string,
    index: number,
    verdict: "pass" | "fail",
    note?: string,
  ): Promise<{ status: string; suggestionIndex?: number; record?: SuggestionRecordWire }> {
    return this.request("POST", `/sessions/${sessionId}/tests/${index}/verdict`, { verdict, note });
  }

  addAnnotation(
    sessionId: string,
    box: { x: number; y: number; width: number; height: number },
  ): Promise<{ label: string }> {
    return this.request("POST", `/sessions/${sessionId}/annotations`, box);
  }

  share(sessionId: string): Promise<{ simulationId: string }> {
    return this.request("POST", `/sessions/${sessionId}/share`);
  }

  async fetchSharedSimulation(simulationId: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/simulations/${simulationId}`);
    if (!response.ok) {
      await parseError(response);
    }
    return response.text();
  }
}
