"""Directed labeled node-link graphs and their text format.

One graph value backs every abstraction stage. The text format is a small
flowchart dialect: a ``graph LR`` / ``graph TD`` header, node lines like
``NodeID[Node Label]`` and edge lines like ``SourceID -->|Edge Label| TargetID``,
one per line. Serialization is canonical (4-space indent, nodes before
edges, no styling); parsing is lenient (1-4 leading spaces, code fences
tolerated) so model output can be ingested defensively.

All values are immutable; every operation returns a new graph.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable, Union

from .errors import (
    DanglingEdgeError,
    DuplicateLinkError,
    GraphSyntaxError,
    UnknownLinkError,
    UnknownNodeError,
)

DIRECTIONS = ("LR", "TD")

_ID_RE = re.compile(r"^[^\s\[\]|]+$")
_NODE_LINE_RE = re.compile(r"^([^\s\[\]|]+)\[(.+)\]$")
_EDGE_LINE_RE = re.compile(r"^([^\s\[\]|]+)\s*-->\s*\|([^|]+)\|\s*([^\s\[\]|]+)$")
_FENCE_RE = re.compile(r"^```[\w-]*\s*$")


@dataclass(frozen=True)
class Node:
    """A labeled graph node. The id is the stable handle; the label is shown."""

    id: str
    label: str

    def __post_init__(self) -> None:
        if not _ID_RE.match(self.id):
            raise ValueError(f"invalid node id: {self.id!r}")
        if not self.label or "\n" in self.label:
            raise ValueError(f"invalid node label: {self.label!r}")


@dataclass(frozen=True)
class Edge:
    """A directed labeled link. Identity is the full (source, target, label) triple."""

    source: str
    target: str
    label: str

    def __post_init__(self) -> None:
        if not self.label or "|" in self.label or "\n" in self.label:
            raise ValueError(f"invalid edge label: {self.label!r}")

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.label)


@dataclass(frozen=True)
class Graph:
    """An ordered node-link graph with a layout direction."""

    direction: str
    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be LR or TD, got {self.direction!r}")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be pairwise distinct")
        id_set = set(ids)
        triples = set()
        for e in self.edges:
            if e.source not in id_set or e.target not in id_set:
                raise ValueError(f"dangling edge: {e.triple}")
            if e.triple in triples:
                raise ValueError(f"duplicate edge: {e.triple}")
            triples.add(e.triple)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def edge_triples(self) -> tuple[tuple[str, str, str], ...]:
        return tuple(e.triple for e in self.edges)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise UnknownNodeError(node_id)

    def has_node(self, node_id: str) -> bool:
        return any(n.id == node_id for n in self.nodes)

    def has_edge(self, source: str, target: str, label: str) -> bool:
        return (source, target, label) in set(self.edge_triples)


# --- widget actions -------------------------------------------------------


@dataclass(frozen=True)
class AddNode:
    label: str


@dataclass(frozen=True)
class AddLink:
    source: str
    target: str
    label: str


@dataclass(frozen=True)
class RemoveNode:
    id: str


@dataclass(frozen=True)
class RemoveLink:
    source: str
    target: str
    label: str


@dataclass(frozen=True)
class EditNodeLabel:
    id: str
    new_label: str


@dataclass(frozen=True)
class EditLinkLabel:
    source: str
    target: str
    old_label: str
    new_label: str


WidgetAction = Union[AddNode, AddLink, RemoveNode, RemoveLink, EditNodeLabel, EditLinkLabel]

_ACTION_NAMES = {
    AddNode: "add_node",
    AddLink: "add_link",
    RemoveNode: "remove_node",
    RemoveLink: "remove_link",
    EditNodeLabel: "edit_node_label",
    EditLinkLabel: "edit_link_label",
}
_NAME_ACTIONS = {v: k for k, v in _ACTION_NAMES.items()}


def action_to_dict(action: WidgetAction) -> dict:
    d = {"kind": _ACTION_NAMES[type(action)]}
    d.update(action.__dict__)
    return d


def action_from_dict(data: dict) -> WidgetAction:
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _NAME_ACTIONS:
        raise ValueError(f"unknown widget action kind: {kind!r}")
    return _NAME_ACTIONS[kind](**data)


# --- parsing and serialization --------------------------------------------


def strip_code_fences(text: str) -> str:
    """Drop a surrounding Markdown fence pair if the model emitted one."""
    lines = text.split("\n")
    content = [i for i, ln in enumerate(lines) if ln.strip()]
    if len(content) >= 2:
        first, last = content[0], content[-1]
        if _FENCE_RE.match(lines[first].strip()) and _FENCE_RE.match(lines[last].strip()):
            lines = lines[first + 1 : last]
    return "\n".join(lines)


def parse_graph(text: str) -> Graph:
    """Parse graph-format text, tolerating fences and 1-4 space indents.

    Raises :class:`GraphSyntaxError` with the 1-based line number for any
    line matching neither the node nor the edge form, and
    :class:`DanglingEdgeError` naming every id an edge references but no
    node line declares.
    """
    if not isinstance(text, str):
        raise GraphSyntaxError(1, "", "input is not text")
    if not text.strip():
        raise GraphSyntaxError(1, "", "empty input")

    stripped = strip_code_fences(text)
    lines = stripped.split("\n")

    direction: str | None = None
    nodes: list[Node] = []
    edges: list[Edge] = []
    node_ids: set[str] = set()
    triples: set[tuple[str, str, str]] = set()

    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip()
        if not line.strip():
            continue
        if direction is None:
            header = line.strip()
            if header == "graph LR":
                direction = "LR"
            elif header == "graph TD":
                direction = "TD"
            else:
                raise GraphSyntaxError(lineno, line.strip(), "expected 'graph LR' or 'graph TD' header")
            continue

        indent = len(line) - len(line.lstrip(" "))
        if indent < 1 or indent > 4:
            raise GraphSyntaxError(lineno, line.strip(), "expected 1-4 leading spaces")
        body = line.lstrip(" ")

        m = _NODE_LINE_RE.match(body)
        if m:
            node_id, label = m.group(1), m.group(2)
            if node_id in node_ids:
                raise GraphSyntaxError(lineno, body, f"duplicate node id {node_id!r}")
            nodes.append(Node(node_id, label))
            node_ids.add(node_id)
            continue

        m = _EDGE_LINE_RE.match(body)
        if m:
            source, label, target = m.group(1), m.group(2), m.group(3)
            triple = (source, target, label)
            if triple in triples:
                raise GraphSyntaxError(lineno, body, "duplicate edge")
            edges.append(Edge(source, target, label))
            triples.add(triple)
            continue

        raise GraphSyntaxError(lineno, body, "matches neither node nor edge form")

    if direction is None:
        raise GraphSyntaxError(1, "", "expected 'graph LR' or 'graph TD' header")

    missing: list[str] = []
    for e in edges:
        for endpoint in (e.source, e.target):
            if endpoint not in node_ids and endpoint not in missing:
                missing.append(endpoint)
    if missing:
        raise DanglingEdgeError(tuple(missing))

    return Graph(direction, tuple(nodes), tuple(edges))


def serialize_graph(g: Graph) -> str:
    """Emit canonical graph text: header, node lines, edge lines, 4-space indent."""
    lines = [f"graph {g.direction}"]
    lines.extend(f"    {n.id}[{n.label}]" for n in g.nodes)
    lines.extend(f"    {e.source} -->|{e.label}| {e.target}" for e in g.edges)
    return "\n".join(lines)


# --- widget application ---------------------------------------------------


def slugify_label(label: str) -> str:
    """CamelCase id base for a node label ('Thermal Energy' -> 'ThermalEnergy')."""
    words = re.split(r"[^0-9A-Za-z]+", label)
    slug = "".join(w[:1].upper() + w[1:] for w in words if w)
    return slug or "Node"


def mint_node_id(existing_ids: Iterable[str], label: str) -> str:
    """First free id in the sequence slug, slug_2, slug_3, ..."""
    taken = set(existing_ids)
    slug = slugify_label(label)
    if slug not in taken:
        return slug
    k = 2
    while f"{slug}_{k}" in taken:
        k += 1
    return f"{slug}_{k}"


def apply_widget(g: Graph, action: WidgetAction) -> Graph:
    """Apply one refinement action, returning a new graph.

    Illegal actions raise without touching the input: unknown referents raise
    :class:`UnknownNodeError` / :class:`UnknownLinkError`, and an AddLink that
    would repeat a triple raises :class:`DuplicateLinkError`.
    """
    if isinstance(action, AddNode):
        if not action.label:
            raise ValueError("node label must be non-empty")
        new_id = mint_node_id(g.node_ids, action.label)
        return replace(g, nodes=g.nodes + (Node(new_id, action.label),))

    if isinstance(action, AddLink):
        for endpoint in (action.source, action.target):
            if not g.has_node(endpoint):
                raise UnknownNodeError(endpoint)
        if g.has_edge(action.source, action.target, action.label):
            raise DuplicateLinkError(action.source, action.target, action.label)
        return replace(g, edges=g.edges + (Edge(action.source, action.target, action.label),))

    if isinstance(action, RemoveNode):
        if not g.has_node(action.id):
            raise UnknownNodeError(action.id)
        nodes = tuple(n for n in g.nodes if n.id != action.id)
        edges = tuple(e for e in g.edges if action.id not in (e.source, e.target))
        return replace(g, nodes=nodes, edges=edges)

    if isinstance(action, RemoveLink):
        triple = (action.source, action.target, action.label)
        if triple not in set(g.edge_triples):
            raise UnknownLinkError(*triple)
        return replace(g, edges=tuple(e for e in g.edges if e.triple != triple))

    if isinstance(action, EditNodeLabel):
        if not g.has_node(action.id):
            raise UnknownNodeError(action.id)
        if not action.new_label:
            raise ValueError("node label must be non-empty")
        nodes = tuple(Node(n.id, action.new_label) if n.id == action.id else n for n in g.nodes)
        return replace(g, nodes=nodes)

    if isinstance(action, EditLinkLabel):
        old = (action.source, action.target, action.old_label)
        if old not in set(g.edge_triples):
            raise UnknownLinkError(*old)
        new = (action.source, action.target, action.new_label)
        if new != old and new in set(g.edge_triples):
            raise DuplicateLinkError(*new)
        edges = tuple(
            Edge(action.source, action.target, action.new_label) if e.triple == old else e
            for e in g.edges
        )
        return replace(g, edges=edges)

    raise TypeError(f"not a widget action: {action!r}")


def apply_widgets(g: Graph, actions: Iterable[WidgetAction]) -> Graph:
    for a in actions:
        g = apply_widget(g, a)
    return g


# --- diff -----------------------------------------------------------------


_SUFFIX_RE = re.compile(r"^(.*)_(\d+)$")


def _mint_candidate_index(slug: str, node_id: str) -> int | None:
    """Position of node_id in the mint sequence for slug, or None."""
    if node_id == slug:
        return 1
    m = _SUFFIX_RE.match(node_id)
    if m and m.group(1) == slug and int(m.group(2)) >= 2:
        return int(m.group(2))
    return None


def _plan_recreate(target: Node) -> tuple[str, bool]:
    """Choose the AddNode label used to mint the target id.

    Returns (label, needs_relabel). When the target's own label cannot mint
    its id, fall back to the id's base token when that token is mint-stable.
    """
    if _mint_candidate_index(slugify_label(target.label), target.id) is not None:
        return target.label, False
    m = _SUFFIX_RE.match(target.id)
    base = m.group(1) if m else target.id
    if slugify_label(base) == base:
        return base, True
    # Unreachable id; best effort keeps replay well-formed even if ids drift.
    return target.label, False


def diff_graphs(before: Graph, after: Graph) -> list[WidgetAction]:
    """A minimal action list whose replay on `before` yields `after`.

    Matches nodes by id first, then reconciles labels; id minting is
    simulated so re-created nodes land on their target ids (padding
    additions are inserted and removed when suffixed ids must be hit).
    """
    actions: list[WidgetAction] = []

    before_pos = {n.id: i for i, n in enumerate(before.nodes)}
    before_label = {n.id: n.label for n in before.nodes}

    # Longest after-prefix whose ids appear in before at increasing positions;
    # everything past it is (re)created by appends, mirroring widget reachability.
    kept_count = 0
    last_pos = -1
    for n in after.nodes:
        pos = before_pos.get(n.id)
        if pos is None or pos <= last_pos:
            break
        last_pos = pos
        kept_count += 1
    kept_ids = {n.id for n in after.nodes[:kept_count]}
    recreate = after.nodes[kept_count:]

    for n in before.nodes:
        if n.id not in kept_ids:
            actions.append(RemoveNode(n.id))

    for n in after.nodes[:kept_count]:
        if before_label[n.id] != n.label:
            actions.append(EditNodeLabel(n.id, n.label))

    current_ids = [n.id for n in before.nodes if n.id in kept_ids]
    pads: list[str] = []
    for target in recreate:
        add_label, needs_relabel = _plan_recreate(target)
        if target.id in pads:
            actions.append(RemoveNode(target.id))
            current_ids.remove(target.id)
            pads.remove(target.id)
        target_idx = _mint_candidate_index(slugify_label(add_label), target.id)
        while target_idx is not None:
            minted = mint_node_id(current_ids, add_label)
            if minted == target.id:
                break
            minted_idx = _mint_candidate_index(slugify_label(add_label), minted)
            if minted_idx is None or minted_idx > target_idx:
                break
            actions.append(AddNode(add_label))
            current_ids.append(minted)
            pads.append(minted)
        actions.append(AddNode(add_label))
        current_ids.append(target.id)
        if needs_relabel or (target_idx is None):
            if add_label != target.label:
                actions.append(EditNodeLabel(target.id, target.label))

    for pad in pads:
        actions.append(RemoveNode(pad))

    # Edge phase runs on the survivors: edges whose endpoints were both kept.
    work_edges = [e for e in before.edges if e.source in kept_ids and e.target in kept_ids]
    matched = [False] * len(work_edges)
    relabels: list[EditLinkLabel] = []
    pointer = 0
    add_from = 0
    for e in after.edges:
        hit = None
        for q in range(pointer, len(work_edges)):
            if work_edges[q].triple == e.triple:
                hit = (q, None)
                break
        if hit is None:
            for q in range(pointer, len(work_edges)):
                w = work_edges[q]
                if (w.source, w.target) == (e.source, e.target):
                    hit = (q, w.label)
                    break
        if hit is None:
            break
        q, old_label = hit
        matched[q] = True
        pointer = q + 1
        if old_label is not None:
            relabels.append(EditLinkLabel(e.source, e.target, old_label, e.label))
        add_from += 1

    for q, w in enumerate(work_edges):
        if not matched[q]:
            actions.append(RemoveLink(w.source, w.target, w.label))
    actions.extend(relabels)
    for e in after.edges[add_from:]:
        actions.append(AddLink(e.source, e.target, e.label))

    return actions


# --- subgraph extraction ---------------------------------------------------


def extract_subgraph(g: Graph, keep_node_ids: Iterable[str]) -> Graph:
    """Induced subgraph over the kept ids; declaration order and labels survive."""
    keep = set(keep_node_ids)
    unknown = keep - set(g.node_ids)
    if unknown:
        raise UnknownNodeError(sorted(unknown)[0])
    nodes = tuple(n for n in g.nodes if n.id in keep)
    edges = tuple(e for e in g.edges if e.source in keep and e.target in keep)
    return Graph(g.direction, nodes, edges)
