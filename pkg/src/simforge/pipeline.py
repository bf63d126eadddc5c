"""Forward transformations: content -> concept -> scenario -> goal -> UI -> code.

Each operation validates its stage precondition, runs the model through the
gateway, validates or repairs the reply, and only then swaps the stage slot,
so a failing transform leaves the session exactly as it was. Model drift
(renamed ids, invented nodes, dropped elements) is repaired or flagged here
rather than trusted downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import EmptyGoalGraphError, IdDriftError, StageOrderViolationError, NotADraftError
from .document import missing_markers
from .gateway import Gateway, text_request
from .graph import (
    Edge,
    Graph,
    Node,
    WidgetAction,
    apply_widget,
    parse_graph,
    serialize_graph,
)
from .registry import (
    GoalCategory,
    OptionItem,
    OptionKind,
    PromptRegistry,
    extract_document,
    extract_graph,
    parse_options,
)
from .session import (
    Actor,
    BlobStore,
    JournalOp,
    ProcedureDerivation,
    Session,
    StageId,
    StageStatus,
    stages_before,
)

CONTROL_WORDS = ("slider", "button", "toggle", "input", "control")


@dataclass
class OptionsResult:
    items: list[OptionItem]
    warnings: list[str] = field(default_factory=list)


def _require_committed_prefix(session: Session, stage: StageId) -> None:
    for earlier in stages_before(stage):
        if session.stages[earlier].status is not StageStatus.COMMITTED:
            raise StageOrderViolationError(
                stage.value, f"requires {earlier.value} to be committed first"
            )


def choice_text(choice: Union[OptionItem, str]) -> str:
    if isinstance(choice, str):
        return choice
    if choice.description:
        return f"{choice.title}: {choice.description}"
    return choice.title


def _choice_payload(choice: Union[OptionItem, str]) -> dict:
    if isinstance(choice, str):
        return {"freeText": choice}
    return {
        "title": choice.title,
        "description": choice.description,
        "goalCategory": choice.goal_category.value if choice.goal_category else None,
    }


def choice_from_payload(payload: dict) -> Union[OptionItem, str]:
    if "freeText" in payload:
        return payload["freeText"]
    category = payload.get("goalCategory")
    return OptionItem(
        payload["title"],
        payload.get("description", ""),
        GoalCategory(category) if category else None,
    )


class Pipeline:
    """Stateless orchestrator; all state lives on the session it is handed."""

    def __init__(self, registry: PromptRegistry, gateway: Gateway, blobs: Optional[BlobStore] = None):
        self.registry = registry
        self.gateway = gateway
        self.blobs = blobs if blobs is not None else BlobStore()

    # -- helpers -------------------------------------------------------------

    def _complete(self, tag: str, prompt: str, *, context: tuple[str, ...] = ()) -> str:
        return self.gateway.complete(text_request(tag, prompt, context=context))

    def _set_draft(self, session: Session, stage: StageId, content, event_seq: int, issues=()) -> None:
        slot = session.stages[stage]
        slot.content = content
        slot.status = StageStatus.DRAFT
        slot.provenance.append(event_seq)
        slot.issues = list(issues)
        session.mark_later_stages_stale(stage)

    # -- session lifecycle ------------------------------------------------------

    def create_session(self) -> Session:
        return Session.create()

    # -- concept stage -----------------------------------------------------------

    def submit_learning_content(self, session: Session, text: str) -> Session:
        slot = session.stages[StageId.CONCEPT]
        if slot.status not in (StageStatus.EMPTY, StageStatus.STALE):
            raise StageOrderViolationError(
                StageId.CONCEPT.value, f"content already {slot.status.value}; discard or refine instead"
            )
        prompt = self.registry.render("concept_graph", {"learningContent": text})
        reply = self._complete("concept_graph", prompt)
        graph = parse_graph(extract_graph(reply))
        digest = self.blobs.put_text(text)
        session.learning_content = text
        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "content_submitted",
            stage=StageId.CONCEPT,
            payload={"contentDigest": digest},
        )
        self._set_draft(session, StageId.CONCEPT, graph, event.seq)
        return session

    # -- draft lifecycle ------------------------------------------------------------

    def refine_stage(self, session: Session, stage: StageId, action: WidgetAction) -> Session:
        from .graph import action_to_dict

        if stage is StageId.CODE:
            raise StageOrderViolationError(stage.value, "code is not refined through graph widgets")
        slot = session.stages[stage]
        if slot.status not in (StageStatus.DRAFT, StageStatus.COMMITTED):
            raise StageOrderViolationError(stage.value, f"cannot refine a {slot.status.value} stage")
        assert isinstance(slot.content, Graph)
        new_graph = apply_widget(slot.content, action)
        event = session.append_event(
            Actor.HUMAN,
            JournalOp.REFINE,
            "stage_refined",
            stage=stage,
            payload={"action": action_to_dict(action)},
        )
        self._set_draft(session, stage, new_graph, event.seq)
        return session

    def commit_stage(self, session: Session, stage: StageId) -> Session:
        slot = session.stages[stage]
        if slot.status is not StageStatus.DRAFT:
            raise NotADraftError(stage.value, slot.status.value)
        slot.status = StageStatus.COMMITTED
        slot.committed_content = slot.content
        digest = self.blobs.put_text(slot.content_text() or "")
        session.append_event(
            Actor.HUMAN, JournalOp.VALIDATE, "committed", stage=stage, payload={"contentDigest": digest}
        )
        return session

    def discard_stage(self, session: Session, stage: StageId) -> Session:
        slot = session.stages[stage]
        if slot.status is not StageStatus.DRAFT:
            raise NotADraftError(stage.value, slot.status.value)
        if slot.committed_content is not None:
            slot.content = slot.committed_content
            slot.status = StageStatus.COMMITTED
        else:
            slot.content = None
            slot.status = StageStatus.EMPTY
        slot.issues = []
        session.append_event(Actor.HUMAN, JournalOp.VALIDATE, "discarded", stage=stage)
        return session

    # -- scenario stage ----------------------------------------------------------------

    def list_scenarios(self, session: Session) -> OptionsResult:
        _require_committed_prefix(session, StageId.SCENARIO)
        concept_text = serialize_graph(session.committed_graph(StageId.CONCEPT))
        prompt = self.registry.render("scenario_options", {"graph": concept_text})
        reply = self._complete("scenario_options", prompt)
        items = parse_options(reply, OptionKind.SCENARIO)
        warnings = []
        if len(items) != 8:
            warnings.append(f"CountMismatch: expected 8 scenario options, got {len(items)}")
        session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "scenarios_listed",
            payload={"count": len(items), "warnings": warnings},
        )
        return OptionsResult(items, warnings)

    def select_scenario(self, session: Session, choice: Union[OptionItem, str]) -> Session:
        _require_committed_prefix(session, StageId.SCENARIO)
        concept = session.committed_graph(StageId.CONCEPT)
        concept_text = serialize_graph(concept)
        prompt = self.registry.render(
            "scenario_graph", {"graph": concept_text, "scenario": choice_text(choice)}
        )
        reply = self._complete("scenario_graph", prompt)
        raw = parse_graph(extract_graph(reply))

        graph, repairs = _reconcile_scenario_graph(concept, raw)
        session.scenario_choice = choice
        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "scenario_selected",
            stage=StageId.SCENARIO,
            payload={"choice": _choice_payload(choice)},
        )
        for repair in repairs:
            session.append_event(
                Actor.MODEL, JournalOp.TRANSFORM, "model_repair", stage=StageId.SCENARIO, payload={"detail": repair}
            )
        self._set_draft(session, StageId.SCENARIO, graph, event.seq)
        return session

    # -- learning goal stage ---------------------------------------------------------------

    def list_goals(self, session: Session) -> OptionsResult:
        _require_committed_prefix(session, StageId.LEARNING_GOAL)
        scenario_text = serialize_graph(session.committed_graph(StageId.SCENARIO))
        prompt = self.registry.render("learning_goal_options", {"graph": scenario_text})
        reply = self._complete("learning_goal_options", prompt)
        items = parse_options(reply, OptionKind.GOAL)
        warnings = []
        if len(items) != 6:
            warnings.append(f"CountMismatch: expected 6 goal options, got {len(items)}")
        session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "goals_listed",
            payload={"count": len(items), "warnings": warnings},
        )
        return OptionsResult(items, warnings)

    def select_goal(self, session: Session, goal: OptionItem) -> Session:
        _require_committed_prefix(session, StageId.LEARNING_GOAL)
        if goal.goal_category is None:
            raise ValueError("goal choice must carry a goal category")
        scenario = session.committed_graph(StageId.SCENARIO)
        prompt = self.registry.render(
            "learning_goal_graph",
            {"graph": serialize_graph(scenario), "hypothesis": goal.title},
        )
        reply = self._complete("learning_goal_graph", prompt)
        raw = parse_graph(extract_graph(reply))

        graph, warnings = _prune_to_subgraph(scenario, raw)
        if not graph.nodes:
            raise EmptyGoalGraphError()
        session.goal_choice = goal
        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "goal_selected",
            stage=StageId.LEARNING_GOAL,
            payload={"choice": _choice_payload(goal)},
        )
        for w in warnings:
            session.append_event(
                Actor.MODEL, JournalOp.TRANSFORM, "warning", stage=StageId.LEARNING_GOAL, payload={"detail": w}
            )
        self._set_draft(session, StageId.LEARNING_GOAL, graph, event.seq)
        return session

    # -- procedure derivation ------------------------------------------------------------------

    def derive_procedure(self, session: Session) -> ProcedureDerivation:
        _require_committed_prefix(session, StageId.UI_GRAPH)
        goal = session.goal_choice
        if goal is None or goal.goal_category is None:
            raise StageOrderViolationError(StageId.UI_GRAPH.value, "goal with category must be selected first")
        graph_text = serialize_graph(session.committed_graph(StageId.LEARNING_GOAL))
        hypothesis = goal.title
        category = goal.goal_category

        def ask(template_id: str, vars: dict) -> str:
            return self._complete(template_id, self.registry.render(template_id, vars)).strip()

        partial: dict = {"category": category.value}
        try:
            if category in (GoalCategory.DESCRIPTIVE, GoalCategory.EXPLANATORY):
                indep = ask("independent_variable", {"graph": graph_text, "hypothesis": hypothesis})
                partial["independentVar"] = indep
                dep = ask("dependent_variable", {"graph": graph_text, "hypothesis": hypothesis})
                partial["dependentVar"] = dep
                if category is GoalCategory.DESCRIPTIVE:
                    proc_text = ask(
                        "procedure_descriptive",
                        {"indep": indep, "dep": dep, "graph": graph_text, "hypothesis": hypothesis},
                    )
                    derivation = ProcedureDerivation(
                        category, independent_var=indep, dependent_var=dep, procedure_text=proc_text
                    )
                else:
                    explanation = ask(
                        "explanatory_process", {"indep": indep, "dep": dep, "graph": graph_text}
                    )
                    partial["explanatoryProcess"] = explanation
                    proc_text = ask(
                        "procedure_explanatory",
                        {"exp": explanation, "graph": graph_text, "hypothesis": hypothesis},
                    )
                    derivation = ProcedureDerivation(
                        category,
                        independent_var=indep,
                        dependent_var=dep,
                        explanatory_process=explanation,
                        procedure_text=proc_text,
                    )
            else:
                obj = ask("experimental_object", {"graph": graph_text, "hypothesis": hypothesis})
                partial["experimentalObject"] = obj
                process = ask(
                    "procedural_process", {"obj": obj, "graph": graph_text, "hypothesis": hypothesis}
                )
                partial["underlyingProcess"] = process
                proc_text = ask(
                    "procedure_procedural",
                    {"obj": obj, "proc": process, "graph": graph_text, "hypothesis": hypothesis},
                )
                derivation = ProcedureDerivation(
                    category, experimental_object=obj, underlying_process=process, procedure_text=proc_text
                )
        except Exception:
            session.append_event(
                Actor.MODEL, JournalOp.TRANSFORM, "procedure_aborted", payload={"partial": partial}
            )
            raise

        session.procedure = derivation
        session.append_event(
            Actor.MODEL, JournalOp.TRANSFORM, "procedure_derived", payload=derivation.to_dict()
        )
        return derivation

    # -- UI graph stage -----------------------------------------------------------------------

    def generate_ui_graph(self, session: Session) -> Session:
        _require_committed_prefix(session, StageId.UI_GRAPH)
        if session.procedure is None:
            raise StageOrderViolationError(StageId.UI_GRAPH.value, "procedure must be derived first")
        goal = session.goal_choice
        assert goal is not None
        goal_graph = session.committed_graph(StageId.LEARNING_GOAL)
        prompt = self.registry.render(
            "ui_graph",
            {
                "graph": serialize_graph(goal_graph),
                "proc": session.procedure.procedure_text,
                "hypothesis": goal.title,
            },
        )
        reply = self._complete("ui_graph", prompt)
        raw = parse_graph(extract_graph(reply))

        graph, warnings = _ensure_superset_of(goal_graph, raw)
        if not any(any(w in n.label.lower() for w in CONTROL_WORDS) for n in graph.nodes):
            warnings.append("NoControls: no node label suggests an interactive control")

        event = session.append_event(
            Actor.MODEL, JournalOp.TRANSFORM, "ui_graph_generated", stage=StageId.UI_GRAPH
        )
        for w in warnings:
            session.append_event(
                Actor.MODEL, JournalOp.TRANSFORM, "warning", stage=StageId.UI_GRAPH, payload={"detail": w}
            )
        self._set_draft(session, StageId.UI_GRAPH, graph, event.seq, issues=warnings)
        return session

    # -- code stage ------------------------------------------------------------------------------

    def generate_code(self, session: Session) -> Session:
        _require_committed_prefix(session, StageId.CODE)
        goal = session.goal_choice
        assert goal is not None
        ui_graph = session.committed_graph(StageId.UI_GRAPH)
        prompt = self.registry.render(
            "simulation_code",
            {"graph": serialize_graph(ui_graph), "hypothesis": goal.title},
        )
        reply = self._complete("simulation_code", prompt)
        document = extract_document(reply)
        absent = missing_markers(document)
        issues = [f"MissingInstrumentation: {m}" for m in absent]
        digest = self.blobs.put_text(document)
        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "code_generated",
            stage=StageId.CODE,
            payload={"documentDigest": digest, "missingMarkers": list(absent)},
        )
        self._set_draft(session, StageId.CODE, document, event.seq, issues=issues)
        return session

    # -- code drafts from the inverse-correction side ----------------------------------------------

    def set_code_draft(self, session: Session, document: str, origin: str) -> Session:
        digest = self.blobs.put_text(document)
        absent = missing_markers(document)
        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "code_updated",
            stage=StageId.CODE,
            payload={"documentDigest": digest, "origin": origin, "missingMarkers": list(absent)},
        )
        slot = session.stages[StageId.CODE]
        slot.content = document
        slot.status = StageStatus.DRAFT
        slot.provenance.append(event.seq)
        slot.issues = [f"MissingInstrumentation: {m}" for m in absent]
        return session


# --- reply reconciliation helpers -----------------------------------------------


def _reconcile_scenario_graph(concept: Graph, reply: Graph) -> tuple[Graph, list[str]]:
    """Force id-set and edge-set preservation, realigning drifted ids.

    Lost ids are matched to invented ids by edge-structure signature; an
    unmatched or ambiguous drift raises :class:`IdDriftError`.
    """
    repairs: list[str] = []
    concept_ids = set(concept.node_ids)
    reply_ids = set(reply.node_ids)

    if concept_ids != reply_ids:
        missing = sorted(concept_ids - reply_ids)
        extra = sorted(reply_ids - concept_ids)
        if len(missing) != len(extra) or not missing:
            raise IdDriftError(tuple(concept.node_ids), tuple(reply.node_ids))
        mapping = _match_by_signature(concept, reply, missing, extra)
        if mapping is None:
            raise IdDriftError(tuple(concept.node_ids), tuple(reply.node_ids))
        rename = {drifted: original for original, drifted in mapping.items()}
        reply = Graph(
            reply.direction,
            tuple(Node(rename.get(n.id, n.id), n.label) for n in reply.nodes),
            tuple(
                Edge(rename.get(e.source, e.source), rename.get(e.target, e.target), e.label)
                for e in reply.edges
            ),
        )
        repairs.append(
            "IdDrift: realigned drifted node ids "
            + ", ".join(f"{d}->{o}" for o, d in mapping.items())
        )

    if set(reply.edge_triples) != set(concept.edge_triples):
        reply = Graph(reply.direction, reply.nodes, concept.edges)
        repairs.append("EdgeDrift: restored the upstream link set verbatim")

    return reply, repairs


def _match_by_signature(concept: Graph, reply: Graph, missing: list[str], extra: list[str]):
    """original id -> drifted id, or None when any pairing is ambiguous."""
    if len(missing) == 1:
        return {missing[0]: extra[0]}

    shared = set(concept.node_ids) & set(reply.node_ids)

    def signature(g: Graph, node_id: str) -> tuple:
        sig = []
        for e in g.edges:
            if e.source == node_id:
                sig.append(("out", e.target if e.target in shared else "?", e.label))
            if e.target == node_id:
                sig.append(("in", e.source if e.source in shared else "?", e.label))
        return tuple(sorted(sig))

    concept_sigs = {m: signature(concept, m) for m in missing}
    reply_sigs = {x: signature(reply, x) for x in extra}
    mapping = {}
    used = set()
    for m, sig in concept_sigs.items():
        candidates = [x for x, s in reply_sigs.items() if s == sig and x not in used]
        if len(candidates) != 1:
            return None
        mapping[m] = candidates[0]
        used.add(candidates[0])
    return mapping


def _prune_to_subgraph(parent: Graph, reply: Graph) -> tuple[Graph, list[str]]:
    """Clamp a reply to elements of the parent graph, flagging what was dropped."""
    warnings: list[str] = []
    parent_labels = {n.id: n.label for n in parent.nodes}
    nodes = []
    for n in reply.nodes:
        if n.id not in parent_labels:
            warnings.append(f"DroppedNode: invented node {n.id!r} removed")
            continue
        if n.label != parent_labels[n.id]:
            warnings.append(f"LabelDrift: node {n.id!r} label restored")
            nodes.append(Node(n.id, parent_labels[n.id]))
        else:
            nodes.append(n)
    kept_ids = {n.id for n in nodes}
    parent_triples = set(parent.edge_triples)
    edges = []
    for e in reply.edges:
        if e.source not in kept_ids or e.target not in kept_ids:
            warnings.append(f"DroppedEdge: edge {e.triple} lost an endpoint")
            continue
        if e.triple not in parent_triples:
            warnings.append(f"DroppedEdge: invented edge {e.triple} removed")
            continue
        edges.append(e)
    return Graph(reply.direction, tuple(nodes), tuple(edges)), warnings


def _ensure_superset_of(required: Graph, reply: Graph) -> tuple[Graph, list[str]]:
    """Inject any required nodes the reply lost; labels win over drifted copies."""
    warnings: list[str] = []
    reply_ids = set(reply.node_ids)
    injected = []
    for n in required.nodes:
        if n.id not in reply_ids:
            injected.append(n)
            warnings.append(f"RestoredNode: required node {n.id!r} re-added")
    graph = reply if not injected else Graph(reply.direction, reply.nodes + tuple(injected), reply.edges)
    return graph, warnings
