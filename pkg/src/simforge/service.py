"""HTTP facade over sessions, stage operations, chat resolution, testing,
annotations, and shareable simulations.

Every mutating route funnels through the owning session's lock and flushes
freshly appended journal events to storage before responding, so persisted
state always equals what the client saw. Unknown sessions are rebuilt from
their journal on demand.
"""
from __future__ import annotations

import base64
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse

from . import errors as E
from .drivers import BrowserDriver, FakeDriver
from .gateway import Gateway, ImageAttachment
from .graph import Graph, action_from_dict, serialize_graph
from .harness import TestCase, TestHarness, complaint_text_from_verdict
from .pipeline import Pipeline
from .registry import GoalCategory, OptionItem, PromptRegistry
from .replay import rebuild_session
from .resolution import AnnotationBox, Complaint, ResolutionEngine
from .session import Actor, JournalOp, Session, StageId, StageStatus
from .storage import Storage, StorageBlobAdapter

STAGE_NAMES = {s.value: s for s in StageId}


@dataclass
class ServiceConfig:
    storage: Storage
    gateway: Gateway
    registry: PromptRegistry = field(default_factory=PromptRegistry)
    driver_factory: Callable[[], BrowserDriver] = lambda: FakeDriver([{"match": "*", "elements": {}}])
    settle_delay_s: float = 0.0


class SessionManager:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.blobs = StorageBlobAdapter(config.storage)
        self.pipeline = Pipeline(config.registry, config.gateway, self.blobs)
        self.engine = ResolutionEngine(config.registry, config.gateway, self.pipeline)
        self._sessions: dict[str, Session] = {}
        self._persisted: dict[str, int] = {}
        self._idempotent: dict[tuple[str, str, str], dict] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        session = Session.create()
        with self._lock:
            self._sessions[session.id] = session
            self._persisted[session.id] = 0
        self.flush(session)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        events = self.config.storage.load_events(session_id)
        if not events:
            raise ApiError(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        from .session import JournalEvent

        session = rebuild_session(
            (JournalEvent.from_dict(e) for e in events), self.pipeline, self.engine
        )
        with self._lock:
            self._sessions[session_id] = session
            # rebuilt journals regenerate by-product events; persist none of them again
            self._persisted[session_id] = len(session.journal)
        return session

    def flush(self, session: Session) -> None:
        start = self._persisted.get(session.id, 0)
        for event in session.journal[start:]:
            self.config.storage.append_event(session.id, event.to_dict())
        self._persisted[session.id] = len(session.journal)

    def idempotent(self, session_id: str, route: str, key: Optional[str]):
        if not key:
            return None
        return self._idempotent.get((session_id, route, key))

    def remember(self, session_id: str, route: str, key: Optional[str], response: dict) -> None:
        if key:
            self._idempotent[(session_id, route, key)] = response


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str, journal_ref: Optional[int] = None):
        self.status = status
        self.code = code
        self.detail = detail
        self.journal_ref = journal_ref
        super().__init__(detail)


_ERROR_MAP: list[tuple[type, int, str]] = [
    (E.StageOrderViolationError, 409, "STAGE_ORDER_VIOLATION"),
    (E.NotADraftError, 409, "NOT_A_DRAFT"),
    (E.GraphSyntaxError, 422, "GRAPH_SYNTAX"),
    (E.DanglingEdgeError, 422, "DANGLING_EDGE"),
    (E.UnknownNodeError, 422, "UNKNOWN_NODE"),
    (E.UnknownLinkError, 422, "UNKNOWN_LINK"),
    (E.DuplicateLinkError, 422, "DUPLICATE_LINK"),
    (E.NoGraphFoundError, 422, "NO_GRAPH_FOUND"),
    (E.MalformedOptionError, 422, "MALFORMED_OPTION"),
    (E.EmptyListError, 422, "EMPTY_OPTION_LIST"),
    (E.UnbalancedTagsError, 422, "UNBALANCED_TAGS"),
    (E.NoPayloadError, 422, "NO_PAYLOAD"),
    (E.SchemaMismatchError, 422, "SCHEMA_MISMATCH"),
    (E.BadTypeCodeError, 422, "BAD_TYPE_CODE"),
    (E.IdDriftError, 422, "ID_DRIFT"),
    (E.EmptyGoalGraphError, 422, "EMPTY_GOAL_GRAPH"),
    (E.MissingInstrumentationError, 422, "MISSING_INSTRUMENTATION"),
    (E.EmptySelectionError, 422, "EMPTY_SELECTION"),
    (E.InvalidBoxError, 422, "INVALID_BOX"),
    (E.NoSvgFoundError, 422, "NO_SVG_FOUND"),
    (E.UnresolvedError, 422, "UNRESOLVED_ERRORS"),
    (E.VerifyLoopExceededError, 422, "VERIFY_LOOP_EXCEEDED"),
    (E.ElementNotFoundError, 422, "ELEMENT_NOT_FOUND"),
    (E.DriverCrashError, 503, "DRIVER_CRASH"),
    (E.ReplayMissError, 503, "GATEWAY_UNAVAILABLE"),
    (E.ProviderError, 503, "GATEWAY_UNAVAILABLE"),
    (E.GatewayTimeoutError, 503, "GATEWAY_UNAVAILABLE"),
]


def _map_error(exc: Exception, journal_ref: Optional[int]) -> ApiError:
    for cls, status, code in _ERROR_MAP:
        if isinstance(exc, cls):
            return ApiError(status, code, str(exc), journal_ref)
    raise exc


def envelope(session: Session) -> dict:
    statuses = {stage.value: slot.status.value for stage, slot in session.stages.items()}
    current = next(
        (stage.value for stage in StageId if session.stages[stage].status is not StageStatus.COMMITTED),
        StageId.CODE.value,
    )
    return {
        "sessionId": session.id,
        "stageStatuses": statuses,
        "currentStage": current,
        "links": {
            stage.value: f"/sessions/{session.id}/stages/{stage.value}" for stage in StageId
        },
    }


def _option_wire(o: OptionItem) -> dict:
    return {
        "title": o.title,
        "description": o.description,
        "goalCategory": o.goal_category.value if o.goal_category else None,
    }


def _stage_or_422(name: str) -> StageId:
    if name not in STAGE_NAMES:
        raise ApiError(404, "UNKNOWN_STAGE", f"no stage {name!r}")
    return STAGE_NAMES[name]


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="simforge", docs_url=None, redoc_url=None)
    manager = SessionManager(config)
    app.state.manager = manager

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "detail": exc.detail, "journalRef": exc.journal_ref},
        )

    def run(session: Session, op):
        """Serialize one mutating operation on a session, then persist it."""
        with session.lock:
            try:
                result = op()
            except Exception as exc:
                manager.flush(session)  # keep aborted-partial events
                raise _map_error(exc, len(session.journal) - 1)
            manager.flush(session)
            return result

    # -- sessions ------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session():
        session = manager.create()
        return envelope(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return envelope(manager.get(sid))

    @app.post("/sessions/{sid}/content")
    def submit_content(sid: str, body: dict):
        session = manager.get(sid)
        text = (body or {}).get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(422, "EMPTY_CONTENT", "body must carry non-empty text")
        run(session, lambda: manager.pipeline.submit_learning_content(session, text))
        return envelope(session)

    # -- stages ---------------------------------------------------------------

    @app.get("/sessions/{sid}/stages/{stage_name}")
    def get_stage(sid: str, stage_name: str):
        session = manager.get(sid)
        stage = _stage_or_422(stage_name)
        slot = session.stages[stage]
        committed = slot.committed_content
        return {
            "stage": stage.value,
            "status": slot.status.value,
            "content": slot.content_text(),
            "committed": serialize_graph(committed) if isinstance(committed, Graph) else committed,
            "issues": list(slot.issues),
        }

    @app.post("/sessions/{sid}/stages/{stage_name}/widget")
    def widget(sid: str, stage_name: str, body: dict):
        session = manager.get(sid)
        stage = _stage_or_422(stage_name)
        try:
            action = action_from_dict(body)
        except (TypeError, ValueError) as exc:
            raise ApiError(422, "BAD_WIDGET_ACTION", str(exc))
        run(session, lambda: manager.pipeline.refine_stage(session, stage, action))
        return envelope(session)

    @app.post("/sessions/{sid}/stages/{stage_name}/commit")
    def commit(sid: str, stage_name: str):
        session = manager.get(sid)
        stage = _stage_or_422(stage_name)
        run(session, lambda: manager.pipeline.commit_stage(session, stage))
        return envelope(session)

    @app.post("/sessions/{sid}/stages/{stage_name}/discard")
    def discard(sid: str, stage_name: str):
        session = manager.get(sid)
        stage = _stage_or_422(stage_name)
        run(session, lambda: manager.pipeline.discard_stage(session, stage))
        return envelope(session)

    # -- scenario / goal choices -------------------------------------------------

    @app.get("/sessions/{sid}/scenarios")
    def scenarios(sid: str):
        session = manager.get(sid)
        result = run(session, lambda: manager.pipeline.list_scenarios(session))
        return {"options": [_option_wire(o) for o in result.items], "warnings": result.warnings}

    @app.post("/sessions/{sid}/scenario")
    def choose_scenario(sid: str, body: dict):
        session = manager.get(sid)
        if "freeText" in body:
            choice = body["freeText"]
            if not isinstance(choice, str) or not choice.strip():
                raise ApiError(422, "BAD_CHOICE", "freeText must be non-empty")
        elif "title" in body:
            choice = OptionItem(body["title"], body.get("description", ""))
        else:
            raise ApiError(422, "BAD_CHOICE", "body needs title or freeText")
        run(session, lambda: manager.pipeline.select_scenario(session, choice))
        return envelope(session)

    @app.get("/sessions/{sid}/goals")
    def goals(sid: str):
        session = manager.get(sid)
        result = run(session, lambda: manager.pipeline.list_goals(session))
        return {"options": [_option_wire(o) for o in result.items], "warnings": result.warnings}

    @app.post("/sessions/{sid}/goal")
    def choose_goal(sid: str, body: dict):
        session = manager.get(sid)
        category = body.get("goalCategory")
        if category not in {c.value for c in GoalCategory}:
            raise ApiError(422, "BAD_CHOICE", "goalCategory must be descriptive, explanatory, or procedural")
        goal = OptionItem(body.get("title", ""), body.get("description", ""), GoalCategory(category))
        if not goal.title:
            raise ApiError(422, "BAD_CHOICE", "goal title must be non-empty")
        run(session, lambda: manager.pipeline.select_goal(session, goal))
        return envelope(session)

    # -- generation -----------------------------------------------------------------

    @app.post("/sessions/{sid}/generate")
    def generate(sid: str, request: Request):
        session = manager.get(sid)
        key = request.headers.get("Idempotency-Key")
        cached = manager.idempotent(sid, "generate", key)
        if cached is not None:
            return cached

        def op():
            manager.pipeline.derive_procedure(session)
            manager.pipeline.generate_ui_graph(session)
            manager.pipeline.commit_stage(session, StageId.UI_GRAPH)
            manager.pipeline.generate_code(session)
            return None

        run(session, op)
        slot = session.stages[StageId.CODE]
        response = {
            **envelope(session),
            "document": slot.content,
            "issues": list(slot.issues),
        }
        manager.remember(sid, "generate", key, response)
        return response

    # -- chat / suggestions --------------------------------------------------------------

    def _current_code_and_graph(session: Session) -> tuple[str, Graph]:
        code_slot = session.stages[StageId.CODE]
        ui_slot = session.stages[StageId.UI_GRAPH]
        if not isinstance(code_slot.content, str) or not isinstance(ui_slot.content, Graph):
            raise ApiError(409, "STAGE_ORDER_VIOLATION", "simulation has not been generated yet")
        return code_slot.content, ui_slot.content

    def _resolve_complaint(session: Session, complaint: Complaint) -> dict:
        code, ui_graph = _current_code_and_graph(session)

        def op():
            type_code = manager.engine.classify_change(complaint, code, ui_graph)
            record = manager.engine.populate_suggestion(type_code, complaint, code, ui_graph)
            session.suggestions.append(record)
            session.append_event(
                Actor.MODEL,
                JournalOp.TRANSFORM,
                "suggestion_populated",
                payload={"index": len(session.suggestions) - 1, "record": record.to_wire()},
            )
            return record

        record = run(session, op)
        return {
            "suggestionIndex": len(session.suggestions) - 1,
            "record": record.to_wire(),
        }

    @app.post("/sessions/{sid}/chat")
    def chat(sid: str, body: dict, request: Request):
        session = manager.get(sid)
        key = request.headers.get("Idempotency-Key")
        cached = manager.idempotent(sid, "chat", key)
        if cached is not None:
            return cached
        text = (body or {}).get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(422, "EMPTY_COMPLAINT", "chat body needs text")
        _, ui_graph = _current_code_and_graph(session)
        mention_refs = tuple(body.get("mentionRefs", ()))
        unknown = [m for m in mention_refs if not ui_graph.has_node(m)]
        if unknown:
            raise ApiError(422, "UNKNOWN_MENTION", f"mentions outside the UI graph: {', '.join(unknown)}")
        screenshot = None
        if body.get("screenshotB64"):
            screenshot = ImageAttachment("image/png", base64.b64decode(body["screenshotB64"]))
        complaint = Complaint(
            text=text,
            annotation_refs=tuple(body.get("annotationRefs", ())),
            mention_refs=mention_refs,
            screenshot=screenshot,
        )
        response = _resolve_complaint(session, complaint)
        manager.remember(sid, "chat", key, response)
        return response

    @app.post("/sessions/{sid}/suggestions/{index}/accept")
    def accept_suggestion(sid: str, index: int):
        session = manager.get(sid)
        if index < 0 or index >= len(session.suggestions):
            raise ApiError(404, "UNKNOWN_SUGGESTION", f"no suggestion {index}")
        record = session.suggestions[index]
        if record.status != "pending":
            raise ApiError(409, "SUGGESTION_SETTLED", f"suggestion {index} is already {record.status}")
        run(session, lambda: manager.engine.apply_suggestion(session, record))
        return envelope(session)

    @app.post("/sessions/{sid}/suggestions/{index}/reject")
    def reject_suggestion(sid: str, index: int):
        session = manager.get(sid)
        if index < 0 or index >= len(session.suggestions):
            raise ApiError(404, "UNKNOWN_SUGGESTION", f"no suggestion {index}")
        record = session.suggestions[index]
        if record.status != "pending":
            raise ApiError(409, "SUGGESTION_SETTLED", f"suggestion {index} is already {record.status}")
        run(session, lambda: manager.engine.reject_suggestion(session, record))
        return envelope(session)

    # -- automated testing -----------------------------------------------------------------

    def _harness_for(session: Session) -> TestHarness:
        code, ui_graph = _current_code_and_graph(session)
        goal = session.goal_choice
        return TestHarness(
            config.driver_factory(),
            config.registry,
            config.gateway,
            ui_graph_text=serialize_graph(ui_graph),
            goal_title=goal.title if goal else "",
            settle_delay_s=config.settle_delay_s,
        )

    @app.post("/sessions/{sid}/tests/run")
    def run_tests(sid: str):
        from simforge.registry import PassSentinel

        session = manager.get(sid)
        harness = _harness_for(session)
        code_slot = session.stages[StageId.CODE]

        def op():
            document, fixes = harness.resolve_js_errors(code_slot.content)
            if document != code_slot.content:
                manager.pipeline.set_code_draft(session, document, origin="js_fix")
            cases = harness.generate_test_cases(document).cases
            result = harness.execute_tests(document, cases)
            session.guided_cases = list(result.guided)
            verification = None
            if result.records:
                outcome = harness.verify_and_repair(document, result.records, result.initial_screenshot)
                if isinstance(outcome, PassSentinel):
                    verification = "pass"
                else:
                    manager.pipeline.set_code_draft(session, outcome, origin="verification")
                    verification = "repaired"
            session.append_event(
                Actor.MODEL,
                JournalOp.TRANSFORM,
                "tests_executed",
                payload={
                    "auto": len(result.records),
                    "guided": len(result.guided),
                    "fixes": fixes,
                    "verification": verification,
                },
            )
            return result, verification

        result, verification = run(session, op)
        return {
            "records": [
                {
                    "case": r.case.to_wire(),
                    "logs": [f"DEBUG [{l.timestamp}]: {l.message}" for l in r.logs_delta],
                    "errors": r.errors_delta,
                    "content": r.driver_result,
                    "failure": r.failure,
                }
                for r in result.records
            ],
            "guided": [c.to_wire() for c in result.guided],
            "verification": verification,
        }

    @app.post("/sessions/{sid}/tests/{index}/verdict")
    def verdict(sid: str, index: int, body: dict):
        session = manager.get(sid)
        if index < 0 or index >= len(session.guided_cases):
            raise ApiError(404, "UNKNOWN_TEST", f"no guided case {index}")
        value = (body or {}).get("verdict")
        if value not in ("pass", "fail"):
            raise ApiError(422, "BAD_VERDICT", "verdict must be pass or fail")
        case: TestCase = session.guided_cases[index]
        note = (body or {}).get("note", "")

        if value == "pass":
            def op():
                session.append_event(
                    Actor.HUMAN, JournalOp.VALIDATE, "guided_pass", payload={"index": index}
                )
            run(session, op)
            return {"status": "pass"}

        session.append_event(
            Actor.HUMAN, JournalOp.VALIDATE, "guided_fail", payload={"index": index, "note": note}
        )
        manager.flush(session)
        complaint = Complaint(text=complaint_text_from_verdict(case, note))
        return {"status": "fail", **_resolve_complaint(session, complaint)}

    # -- subgraph selector -------------------------------------------------------------------

    @app.post("/sessions/{sid}/subgraph")
    def subgraph(sid: str, body: dict):
        session = manager.get(sid)
        code, ui_graph = _current_code_and_graph(session)
        if not session.annotations:
            raise ApiError(422, "EMPTY_SELECTION", "annotate the simulation before selecting a subgraph")
        if not body.get("screenshotB64"):
            raise ApiError(422, "MISSING_SCREENSHOT", "body needs screenshotB64 of the annotated simulation")
        screenshot = ImageAttachment("image/png", base64.b64decode(body["screenshotB64"]))

        def op():
            result, warnings = manager.engine.select_subgraph(
                screenshot, code, ui_graph, tuple(session.annotations)
            )
            session.append_event(
                Actor.MODEL,
                JournalOp.INSPECT,
                "subgraph_selected",
                payload={"nodes": list(result.node_ids), "warnings": warnings},
            )
            return result, warnings

        result, warnings = run(session, op)
        return {"subgraph": serialize_graph(result), "warnings": warnings}

    # -- annotations ------------------------------------------------------------------------

    @app.post("/sessions/{sid}/annotations")
    def add_annotation(sid: str, body: dict):
        session = manager.get(sid)
        try:
            x, y = float(body["x"]), float(body["y"])
            width, height = float(body["width"]), float(body["height"])
        except (KeyError, TypeError, ValueError):
            raise ApiError(422, "INVALID_BOX", "body needs numeric x, y, width, height")

        def op():
            label = f"A{len(session.annotations) + 1}"
            box = AnnotationBox(x, y, width, height, label)
            session.annotations.append(box)
            session.append_event(
                Actor.HUMAN, JournalOp.DIRECT, "annotation_added", payload={"box": box.to_dict()}
            )
            return box

        box = run(session, op)
        return {"label": box.label}

    # -- sharing -----------------------------------------------------------------------------

    @app.post("/sessions/{sid}/share")
    def share(sid: str):
        session = manager.get(sid)
        slot = session.stages[StageId.CODE]
        if not isinstance(slot.content, str):
            raise ApiError(409, "STAGE_ORDER_VIOLATION", "no simulation document to share")
        simulation_id = uuid.uuid4().hex

        def op():
            config.storage.put_share(
                {
                    "simulationId": simulation_id,
                    "document": slot.content,
                    "createdAt": time.time(),
                    "sourceSessionId": session.id,
                }
            )
            session.append_event(
                Actor.HUMAN, JournalOp.DIRECT, "shared", payload={"simulationId": simulation_id}
            )

        run(session, op)
        return {"simulationId": simulation_id}

    @app.get("/simulations/{simulation_id}")
    def get_simulation(simulation_id: str):
        record = config.storage.get_share(simulation_id)
        if record is None:
            raise ApiError(404, "UNKNOWN_SIMULATION", f"no shared simulation {simulation_id!r}")
        return HTMLResponse(record["document"])

    return app
