/** Wire types mirroring the authoring API's JSON schemas. */

export type StageName = "concept" | "scenario" | "learning_goal" | "ui_graph" | "code";

export type StageStatus = "empty" | "draft" | "committed" | "stale";

export interface SessionEnvelope {
  sessionId: string;
  stageStatuses: Record<StageName, StageStatus>;
  currentStage: StageName;
  links: Record<StageName, string>;
}

export interface StageView {
  stage: StageName;
  status: StageStatus;
  content: string | null;
  committed: string | null;
  issues: string[];
}

export interface OptionWire {
  title: string;
  description: string;
  goalCategory: "descriptive" | "explanatory" | "procedural" | null;
}

/** The six manual edit operations posted to the widget route. */
export type WidgetActionWire =
  | { kind: "add_node"; label: string }
  | { kind: "add_link"; source: string; target: string; label: string }
  | { kind: "remove_node"; id: string }
  | { kind: "remove_link"; source: string; target: string; label: string }
  | { kind: "edit_node_label"; id: string; new_label: string }
  | { kind: "edit_link_label"; source: string; target: string; old_label: string; new_label: string };

/** The eight model-proposed typed fixes, discriminated by type code. */
export type SuggestionWire =
  | { type: 1; message: string; label: string }
  | { type: 2; message: string; source: string; target: string; label: string }
  | { type: 3; message: string; node: string; assumptions: string[] }
  | { type: 4; message: string; box: [number, number, number, number]; svg: string }
  | { type: 5; message: string; node: string; oldLabel: string; newLabel: string }
  | { type: 6; message: string; source: string; target: string; oldLabel: string; newLabel: string }
  | { type: 7; message: string; node: string }
  | { type: 8; message: string; source: string; target: string; label: string };

export interface SuggestionRecordWire {
  suggestion: SuggestionWire;
  valid: boolean;
  reasons: string[];
  complaintText: string;
  status: "pending" | "accepted" | "rejected";
}

export interface TestCaseWire {
  uiElementId: string;
  actionType: "click" | "set_value" | "toggle" | "verify_content";
  actionValue?: string | number | boolean;
  description: string;
  expectedOutcome: string;
  isUIVerification: boolean;
}

export interface TestRecordWire {
  case: TestCaseWire;
  logs: string[];
  errors: string[];
  content: string | null;
  failure: string | null;
}

export interface AnnotationBoxWire {
  x: number;
  y: number;
  width: number;
  height: number;
  label: string;
}

export interface ApiErrorBody {
  code: string;
  detail: string;
  journalRef: number | null;
}
