"""Inverse correction: from a complaint to a typed, pre-filled fix.

A chat complaint is classified into one of eight change types, the matching
populate prompt fills a widget suggestion, and accepting it edits the UI
graph and/or the simulation document. Everything the engine produces is a
draft; nothing touches a committed slot until the author commits it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .document import missing_markers, svg_element
from .errors import (
    BadTypeCodeError,
    EmptySelectionError,
    InvalidBoxError,
    MissingInstrumentationError,
    NoSvgFoundError,
    SchemaMismatchError,
    StageOrderViolationError,
)
from .gateway import Gateway, ImageAttachment, text_request
from .graph import (
    AddLink,
    AddNode,
    EditLinkLabel,
    EditNodeLabel,
    Graph,
    Node,
    RemoveLink,
    RemoveNode,
    WidgetAction,
    apply_widget,
    serialize_graph,
)
from .pipeline import Pipeline
from .registry import (
    PromptRegistry,
    WidgetSuggestion,
    extract_document,
    extract_graph,
    extract_tagged_html,
    parse_tolerant_json,
    parse_widget_json,
    PassSentinel,
)
from .session import Actor, JournalOp, Session, StageId, StageStatus

import re as _re

_INT_RE = _re.compile(r"\d+")

REPAIR_NUMBER_NUDGE = "Respond with only the number of the change type, 1 through 8. Nothing else."
REPAIR_JSON_NUDGE = "Respond with only the JSON object in the requested format. Nothing else."

POPULATE_TEMPLATES = {
    1: "populate_add_node",
    2: "populate_add_edge",
    3: "populate_edit_assumptions",
    4: "populate_redraw",
    5: "populate_edit_node",
    6: "populate_edit_edge",
    7: "populate_remove_node",
    8: "populate_remove_edge",
}


@dataclass(frozen=True)
class Complaint:
    text: str
    annotation_refs: tuple[str, ...] = ()
    mention_refs: tuple[str, ...] = ()
    screenshot: Optional[ImageAttachment] = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("complaint text must be non-empty")


@dataclass(frozen=True)
class AnnotationBox:
    x: float
    y: float
    width: float
    height: float
    label: str

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise InvalidBoxError(f"annotation box needs positive extent, got {self.width}x{self.height}")

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height, "label": self.label}


@dataclass
class AssumptionSheet:
    entries: dict[str, tuple[str, ...]]
    warnings: list[str] = field(default_factory=list)


@dataclass
class SuggestionRecord:
    suggestion: WidgetSuggestion
    valid: bool
    reasons: tuple[str, ...] = ()
    complaint_text: str = ""
    status: str = "pending"  # pending | accepted | rejected

    def to_wire(self) -> dict:
        return {
            "suggestion": self.suggestion.to_wire(),
            "valid": self.valid,
            "reasons": list(self.reasons),
            "complaintText": self.complaint_text,
            "status": self.status,
        }


def label_index(graph: Graph) -> dict[str, str]:
    """label -> node id; duplicate labels get ' (2)', ' (3)', ... suffixes."""
    index: dict[str, str] = {}
    counts: dict[str, int] = {}
    for n in graph.nodes:
        counts[n.label] = counts.get(n.label, 0) + 1
        key = n.label if counts[n.label] == 1 else f"{n.label} ({counts[n.label]})"
        index[key] = n.id
    return index


class ResolutionEngine:
    def __init__(self, registry: PromptRegistry, gateway: Gateway, pipeline: Pipeline):
        self.registry = registry
        self.gateway = gateway
        self.pipeline = pipeline

    # -- prompt plumbing ------------------------------------------------------

    def _context_messages(self, complaint: Complaint, code: str, ui_graph: Graph) -> tuple[str, ...]:
        context = [f"HTML Code: {code}", f"UI Map: {serialize_graph(ui_graph)}"]
        if complaint.mention_refs:
            context.append("Referenced nodes: " + ", ".join(complaint.mention_refs))
        if complaint.annotation_refs:
            context.append("Referenced annotations: " + ", ".join(complaint.annotation_refs))
        return tuple(context)

    def _complete(self, tag: str, prompt: str, *, context=(), images=()) -> str:
        return self.gateway.complete(text_request(tag, prompt, context=context, images=images))

    # -- classify -------------------------------------------------------------

    def classify_change(self, complaint: Complaint, code: str, ui_graph: Graph) -> int:
        if not code:
            raise StageOrderViolationError(StageId.CODE.value, "no simulation document to correct")
        prompt = self.registry.render("suggest_change_type", {"prompt": complaint.text})
        context = self._context_messages(complaint, code, ui_graph)
        images = (complaint.screenshot,) if complaint.screenshot else ()
        reply = self._complete("suggest_change_type", prompt, context=context, images=images)
        code_num = _scan_type_code(reply)
        if code_num is None:
            reply = self._complete(
                "suggest_change_type", prompt, context=context + (REPAIR_NUMBER_NUDGE,), images=images
            )
            code_num = _scan_type_code(reply)
            if code_num is None:
                raise BadTypeCodeError(reply.strip()[:40])
        return code_num

    # -- populate -------------------------------------------------------------

    def populate_suggestion(
        self, type_code: int, complaint: Complaint, code: str, ui_graph: Graph
    ) -> SuggestionRecord:
        if type_code not in POPULATE_TEMPLATES:
            raise BadTypeCodeError(type_code)
        template_id = POPULATE_TEMPLATES[type_code]
        prompt = self.registry.render(template_id, {"prompt": complaint.text})
        context = self._context_messages(complaint, code, ui_graph)
        images = (complaint.screenshot,) if complaint.screenshot else ()
        reply = self._complete(template_id, prompt, context=context, images=images)
        try:
            suggestion = parse_widget_json(reply)
        except (SchemaMismatchError, BadTypeCodeError):
            reply = self._complete(
                template_id, prompt, context=context + (REPAIR_JSON_NUDGE,), images=images
            )
            suggestion = parse_widget_json(reply)
        if suggestion.type_code != type_code:
            raise SchemaMismatchError(
                reason=f"populate reply carries type {suggestion.type_code}, expected {type_code}"
            )
        reasons = _referent_problems(suggestion, ui_graph)
        return SuggestionRecord(
            suggestion, valid=not reasons, reasons=tuple(reasons), complaint_text=complaint.text
        )

    # -- apply ------------------------------------------------------------------

    def apply_suggestion(
        self,
        session: Session,
        record: SuggestionRecord,
        screenshot: Optional[ImageAttachment] = None,
    ) -> Session:
        if not record.valid:
            raise SchemaMismatchError(reason="; ".join(record.reasons) or "suggestion is not applicable")
        code_slot = session.stages[StageId.CODE]
        if code_slot.status is StageStatus.EMPTY or code_slot.content is None:
            raise StageOrderViolationError(StageId.CODE.value, "no simulation document to correct")
        suggestion = record.suggestion
        session.append_event(
            Actor.HUMAN,
            JournalOp.VALIDATE,
            "suggestion_accepted",
            payload={"record": record.to_wire()},
        )
        record.status = "accepted"

        if suggestion.type_code == 3:
            ui = self._current_ui_graph(session)
            label = self._node_label(ui, suggestion.payload.node)
            return self.apply_assumptions(session, label, list(suggestion.payload.assumptions))
        if suggestion.type_code == 4:
            return self.substitute_svg(
                session,
                screenshot,
                _box_from_payload(suggestion.payload.box),
                suggestion.payload.svg,
            )

        ui = self._current_ui_graph(session)
        action = _suggestion_to_action(suggestion)
        new_graph = apply_widget(ui, action)
        warnings: list[str] = []
        if suggestion.type_code == 1:
            new_label = suggestion.payload.label
            new_graph, warnings = self.auto_add_edges(session, new_graph, new_label)

        event = session.append_event(
            Actor.MODEL,
            JournalOp.TRANSFORM,
            "ui_graph_updated",
            stage=StageId.UI_GRAPH,
            payload={"action": type(action).__name__},
        )
        slot = session.stages[StageId.UI_GRAPH]
        slot.content = new_graph
        slot.status = StageStatus.DRAFT
        slot.provenance.append(event.seq)
        session.mark_later_stages_stale(StageId.UI_GRAPH)
        for w in warnings:
            session.append_event(
                Actor.MODEL, JournalOp.TRANSFORM, "warning", stage=StageId.UI_GRAPH, payload={"detail": w}
            )

        self._patch_code(session, new_graph, suggestion, action)
        return session

    def reject_suggestion(self, session: Session, record: SuggestionRecord) -> Session:
        record.status = "rejected"
        session.append_event(
            Actor.HUMAN, JournalOp.VALIDATE, "suggestion_rejected", payload={"record": record.to_wire()}
        )
        return session

    def _current_ui_graph(self, session: Session) -> Graph:
        slot = session.stages[StageId.UI_GRAPH]
        if not isinstance(slot.content, Graph):
            raise StageOrderViolationError(StageId.UI_GRAPH.value, "no UI graph available")
        return slot.content

    def _node_label(self, graph: Graph, node_id: str) -> str:
        return graph.node(node_id).label

    def _patch_code(
        self, session: Session, new_graph: Graph, suggestion: WidgetSuggestion, action: WidgetAction
    ) -> None:
        document = session.stages[StageId.CODE].content
        assert isinstance(document, str)
        involved = _involved_node_ids(action, new_graph)
        changed = Graph(
            new_graph.direction,
            tuple(n for n in new_graph.nodes if n.id in involved),
            tuple(e for e in new_graph.edges if e.source in involved and e.target in involved),
        )
        prompt = self.registry.render(
            "code_patch",
            {
                "htmlCode": document,
                "changedGraph": serialize_graph(changed),
                "changeSummary": suggestion.message,
            },
        )
        reply = self._complete("code_patch", prompt)
        try:
            patched = extract_tagged_html(reply)
            if isinstance(patched, PassSentinel):
                raise SchemaMismatchError(reason="patch reply returned the pass sentinel")
            if missing_markers(patched):
                raise MissingInstrumentationError(missing_markers(patched))
        except Exception:
            # Scoped patch failed its checks; fall back to full regeneration.
            goal = session.goal_choice
            prompt = self.registry.render(
                "simulation_code",
                {"graph": serialize_graph(new_graph), "hypothesis": goal.title if goal else ""},
            )
            reply = self._complete("simulation_code", prompt)
            patched = extract_document(reply)
            session.append_event(
                Actor.MODEL,
                JournalOp.TRANSFORM,
                "warning",
                stage=StageId.CODE,
                payload={"detail": "PatchFallback: scoped patch failed validation; regenerated in full"},
            )
        self.pipeline.set_code_draft(session, patched, origin="suggestion")

    # -- assumptions --------------------------------------------------------------

    def get_assumptions(self, code: str, ui_graph: Graph) -> AssumptionSheet:
        prompt = self.registry.render(
            "code_assumptions", {"htmlCode": code, "UIMap": serialize_graph(ui_graph)}
        )
        reply = self._complete("code_assumptions", prompt)
        data = parse_tolerant_json(reply)
        if not isinstance(data, dict):
            raise SchemaMismatchError(reason="assumptions reply is not a JSON object")

        labels = label_index(ui_graph)
        id_to_label = {node_id: label for label, node_id in labels.items()}
        entries: dict[str, tuple[str, ...]] = {}
        warnings: list[str] = []
        for key, value in data.items():
            label = key if key in labels else id_to_label.get(key)
            if label is None:
                warnings.append(f"UnknownKey: {key!r} matches no node label")
                continue
            if label != key:
                warnings.append(f"KeyedById: entry {key!r} matched via node id")
            if not isinstance(value, list) or not value or not all(isinstance(v, str) and v.strip() for v in value):
                raise SchemaMismatchError(reason=f"assumptions for {label!r} must be a non-empty list of text")
            entries[label] = tuple(value)
        absent = [label for label in labels if label not in entries]
        if absent:
            warnings.append("MissingNodes: " + ", ".join(sorted(absent)))
        return AssumptionSheet(entries, warnings)

    def apply_assumptions(self, session: Session, node_label: str, edited: list[str]) -> Session:
        document = session.stages[StageId.CODE].content
        if not isinstance(document, str):
            raise StageOrderViolationError(StageId.CODE.value, "no simulation document to correct")
        ui = self._current_ui_graph(session)
        prompt = self.registry.render(
            "assumptions_update",
            {
                "node": node_label,
                "graph": serialize_graph(ui),
                "htmlCode": document,
                "newAssumptions": json.dumps(edited),
            },
        )
        reply = self._complete("assumptions_update", prompt)
        updated = extract_document(reply)
        absent = missing_markers(updated)
        if absent:
            raise MissingInstrumentationError(absent)
        return self.pipeline.set_code_draft(session, updated, origin="assumptions")

    # -- redraw ----------------------------------------------------------------------

    def sketch_to_svg(self, sketch: ImageAttachment) -> str:
        if not sketch.data:
            raise ValueError("sketch image is empty")
        prompt = self.registry.render("sketch_to_svg", {})
        reply = self._complete("sketch_to_svg", prompt, images=(sketch,))
        svg = svg_element(reply)
        if svg is None:
            raise NoSvgFoundError()
        return svg

    def substitute_svg(
        self,
        session: Session,
        screenshot: Optional[ImageAttachment],
        box: AnnotationBox,
        svg: str,
    ) -> Session:
        document = session.stages[StageId.CODE].content
        if not isinstance(document, str):
            raise StageOrderViolationError(StageId.CODE.value, "no simulation document to correct")
        if box.width <= 0 or box.height <= 0:
            raise InvalidBoxError("redraw box must have positive extent")
        prompt = self.registry.render("svg_substitute", {})
        context = (
            f"Html Code: {document}",
            f"Circled box [start_x, start_y, width, height]: [{box.x}, {box.y}, {box.width}, {box.height}]",
            f"New SVG: {svg}",
        )
        images = (screenshot,) if screenshot else ()
        reply = self._complete("svg_substitute", prompt, context=context, images=images)
        updated = extract_document(reply)
        return self.pipeline.set_code_draft(session, updated, origin="redraw")

    # -- auto edges ---------------------------------------------------------------------

    def auto_add_edges(
        self, session: Optional[Session], graph_with_node: Graph, new_node_label: str
    ) -> tuple[Graph, list[str]]:
        """Let the model propose edges for a just-added node; additions only."""
        prompt = self.registry.render(
            "auto_add_edges",
            {"UIMap": serialize_graph(graph_with_node), "newNodeName": new_node_label},
        )
        reply = self._complete("auto_add_edges", prompt)
        warnings: list[str] = []
        try:
            proposed = self.pipeline_parse(reply)
        except Exception as exc:
            warnings.append(f"AutoEdgeSkipped: reply unusable ({exc})")
            return graph_with_node, warnings

        known = set(graph_with_node.node_ids)
        existing = set(graph_with_node.edge_triples)
        additions = []
        for e in proposed.edges:
            if e.triple in existing:
                continue
            if e.source in known and e.target in known:
                additions.append(e)
                existing.add(e.triple)
            else:
                warnings.append(f"AutoEdgeDropped: {e.triple} references an unknown node")
        for n in proposed.nodes:
            if n.id not in known:
                warnings.append(f"AutoNodeIgnored: model invented node {n.id!r}")
        lost_nodes = known - set(proposed.node_ids)
        lost_edges = set(graph_with_node.edge_triples) - set(proposed.edge_triples)
        if lost_nodes or lost_edges:
            warnings.append("AutoEdgeRestore: model dropped existing elements; originals kept")
        result = Graph(
            graph_with_node.direction, graph_with_node.nodes, graph_with_node.edges + tuple(additions)
        )
        return result, warnings

    @staticmethod
    def pipeline_parse(reply: str) -> Graph:
        from .graph import parse_graph

        return parse_graph(extract_graph(reply))

    # -- subgraph selector ------------------------------------------------------------------

    def select_subgraph(
        self,
        screenshot: ImageAttachment,
        code: str,
        ui_graph: Graph,
        annotations: tuple[AnnotationBox, ...],
    ) -> tuple[Graph, list[str]]:
        if not annotations:
            raise ValueError("the screenshot carries no annotations to resolve")
        prompt = self.registry.render("subgraph_selector", {})
        context = (
            f"Code: {code}",
            f"Graph: {serialize_graph(ui_graph)}",
            "Annotations: " + ", ".join(a.label for a in annotations),
        )
        reply = self._complete("subgraph_selector", prompt, context=context, images=(screenshot,))
        proposed = self.pipeline_parse(reply)

        warnings: list[str] = []
        labels = {n.id: n.label for n in ui_graph.nodes}
        nodes = []
        for n in proposed.nodes:
            if n.id not in labels:
                warnings.append(f"StrippedNode: {n.id!r} is not in the UI graph")
                continue
            if n.label != labels[n.id]:
                warnings.append(f"LabelDrift: node {n.id!r} label restored")
            nodes.append(Node(n.id, labels[n.id]))
        kept = {n.id for n in nodes}
        triples = set(ui_graph.edge_triples)
        edges = []
        for e in proposed.edges:
            if e.source in kept and e.target in kept and e.triple in triples:
                edges.append(e)
            else:
                warnings.append(f"StrippedEdge: {e.triple} is not in the UI graph")
        if not nodes:
            raise EmptySelectionError()
        return Graph(ui_graph.direction, tuple(nodes), tuple(edges)), warnings


# --- helpers -------------------------------------------------------------------


def _scan_type_code(reply: str) -> Optional[int]:
    m = _INT_RE.search(reply)
    if not m:
        return None
    value = int(m.group(0))
    return value if 1 <= value <= 8 else None


def _referent_problems(suggestion: WidgetSuggestion, ui_graph: Graph) -> list[str]:
    ids = set(ui_graph.node_ids)
    triples = set(ui_graph.edge_triples)
    p = suggestion.payload
    problems: list[str] = []
    code = suggestion.type_code
    if code == 2:
        for endpoint in (p.source, p.target):
            if endpoint not in ids:
                problems.append(f"unknown node {endpoint!r}")
    elif code in (3, 7):
        if p.node not in ids:
            problems.append(f"unknown node {p.node!r}")
    elif code == 5:
        if p.node not in ids:
            problems.append(f"unknown node {p.node!r}")
        elif ui_graph.node(p.node).label != p.old_label:
            problems.append(f"node {p.node!r} is labeled {ui_graph.node(p.node).label!r}, not {p.old_label!r}")
    elif code == 6:
        if (p.source, p.target, p.old_label) not in triples:
            problems.append(f"unknown edge {(p.source, p.target, p.old_label)}")
    elif code == 8:
        if (p.source, p.target, p.label) not in triples:
            problems.append(f"unknown edge {(p.source, p.target, p.label)}")
    return problems


def _suggestion_to_action(suggestion: WidgetSuggestion) -> WidgetAction:
    p = suggestion.payload
    code = suggestion.type_code
    if code == 1:
        return AddNode(p.label)
    if code == 2:
        return AddLink(p.source, p.target, p.label)
    if code == 5:
        return EditNodeLabel(p.node, p.new_label)
    if code == 6:
        return EditLinkLabel(p.source, p.target, p.old_label, p.new_label)
    if code == 7:
        return RemoveNode(p.node)
    if code == 8:
        return RemoveLink(p.source, p.target, p.label)
    raise BadTypeCodeError(code)


def _involved_node_ids(action: WidgetAction, new_graph: Graph) -> set[str]:
    if isinstance(action, AddNode):
        return {new_graph.nodes[-1].id} if new_graph.nodes else set()
    if isinstance(action, (AddLink, RemoveLink)):
        return {action.source, action.target} & set(new_graph.node_ids)
    if isinstance(action, EditLinkLabel):
        return {action.source, action.target}
    if isinstance(action, EditNodeLabel):
        return {action.id}
    if isinstance(action, RemoveNode):
        return set()
    return set()


def _box_from_payload(box: tuple[float, float, float, float]) -> AnnotationBox:
    return AnnotationBox(box[0], box[1], box[2], box[3], label="redraw")
