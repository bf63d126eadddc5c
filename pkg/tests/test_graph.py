"""Graph IR: parser/serializer round-trip, widget edits, diff, subgraphs."""
from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from simforge.errors import (
    DanglingEdgeError,
    DuplicateLinkError,
    GraphSyntaxError,
    UnknownLinkError,
    UnknownNodeError,
)
from simforge.graph import (
    AddLink,
    AddNode,
    EditLinkLabel,
    EditNodeLabel,
    Edge,
    Graph,
    Node,
    RemoveLink,
    RemoveNode,
    apply_widget,
    apply_widgets,
    diff_graphs,
    extract_subgraph,
    mint_node_id,
    parse_graph,
    serialize_graph,
    slugify_label,
)

SOLID_LIQUID = "graph LR\n    Solid[Solid]\n    Liquid[Liquid]\n    Solid -->|melting| Liquid"


def make_graph(direction="LR", nodes=(), edges=()):
    return Graph(direction, tuple(Node(*n) for n in nodes), tuple(Edge(*e) for e in edges))


# --- parse ------------------------------------------------------------------


def test_parse_solid_liquid():
    g = parse_graph(SOLID_LIQUID)
    assert g.direction == "LR"
    assert g.node_ids == ("Solid", "Liquid")
    assert g.nodes[0].label == "Solid"
    assert g.edge_triples == (("Solid", "Liquid", "melting"),)


def test_parse_header_only():
    g = parse_graph("graph TD")
    assert g.direction == "TD"
    assert g.nodes == () and g.edges == ()


def test_parse_dangling_edge_names_missing_id():
    with pytest.raises(DanglingEdgeError) as exc:
        parse_graph("graph LR\n    A -->|x| B")
    assert "B" in exc.value.missing_ids


def test_parse_reports_line_number_and_fragment():
    with pytest.raises(GraphSyntaxError) as exc:
        parse_graph("graph LR\n    Solid[Solid]\n    what is this")
    assert exc.value.line_number == 3
    assert "what is this" in exc.value.fragment


def test_parse_lenient_indent_one_to_four_spaces():
    for n in (1, 2, 3, 4):
        g = parse_graph(f"graph LR\n{' ' * n}A[Alpha]")
        assert g.node_ids == ("A",)
    with pytest.raises(GraphSyntaxError):
        parse_graph("graph LR\n     A[Alpha]")  # five spaces
    with pytest.raises(GraphSyntaxError):
        parse_graph("graph LR\nA[Alpha]")  # zero spaces


def test_parse_strips_code_fences():
    fenced = "```mermaid\n" + SOLID_LIQUID + "\n```"
    assert parse_graph(fenced) == parse_graph(SOLID_LIQUID)


def test_parse_rejects_duplicate_node_and_edge():
    with pytest.raises(GraphSyntaxError):
        parse_graph("graph LR\n    A[One]\n    A[Two]")
    with pytest.raises(GraphSyntaxError):
        parse_graph("graph LR\n    A[a]\n    B[b]\n    A -->|x| B\n    A -->|x| B")


def test_parse_empty_input():
    with pytest.raises(GraphSyntaxError):
        parse_graph("")
    with pytest.raises(GraphSyntaxError):
        parse_graph("   \n  ")


# --- serialize --------------------------------------------------------------


def test_serialize_canonical_text():
    g = make_graph(
        nodes=[("Solid", "Solid"), ("Liquid", "Liquid")],
        edges=[("Solid", "Liquid", "melting")],
    )
    assert serialize_graph(g) == SOLID_LIQUID


def test_round_trip_identity_on_canonical_text():
    assert serialize_graph(parse_graph(SOLID_LIQUID)) == SOLID_LIQUID


# --- random graph strategy ---------------------------------------------------

_WORD = st.text(alphabet="abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789", min_size=1, max_size=8)
_LABEL = st.lists(_WORD, min_size=1, max_size=3).map(" ".join)


@st.composite
def graphs(draw, max_nodes=30, max_edges=60):
    direction = draw(st.sampled_from(["LR", "TD"]))
    n = draw(st.integers(min_value=0, max_value=max_nodes))
    ids = draw(st.lists(_WORD, min_size=n, max_size=n, unique=True))
    nodes = tuple(Node(i, draw(_LABEL)) for i in ids)
    edges: list[Edge] = []
    if ids:
        seen = set()
        for _ in range(draw(st.integers(min_value=0, max_value=max_edges))):
            s = draw(st.sampled_from(ids))
            t = draw(st.sampled_from(ids))
            lab = draw(_LABEL)
            if (s, t, lab) not in seen:
                seen.add((s, t, lab))
                edges.append(Edge(s, t, lab))
    return Graph(direction, nodes, tuple(edges))


@settings(max_examples=200, deadline=None)
@given(graphs())
def test_parse_serialize_round_trip_property(g):
    assert parse_graph(serialize_graph(g)) == g


# --- widgets ----------------------------------------------------------------


@pytest.fixture
def two_node():
    return make_graph(nodes=[("Solid", "Solid"), ("Liquid", "Liquid")], edges=[("Solid", "Liquid", "melting")])


def test_add_node_mints_fresh_id(two_node):
    g = apply_widget(two_node, AddNode("Thermal Energy"))
    assert len(g.nodes) == 3
    assert g.nodes[-1].id == "ThermalEnergy"
    assert g.nodes[-1].label == "Thermal Energy"
    assert two_node.node_ids == ("Solid", "Liquid")  # input untouched


def test_add_node_suffixes_on_collision(two_node):
    g = apply_widget(two_node, AddNode("Solid"))
    assert g.nodes[-1].id == "Solid_2"
    g = apply_widget(g, AddNode("Solid"))
    assert g.nodes[-1].id == "Solid_3"


def test_remove_node_cascades_incident_edges():
    g = make_graph(
        nodes=[("A", "a"), ("B", "b"), ("C", "c")],
        edges=[("A", "B", "x"), ("B", "C", "y"), ("C", "B", "z"), ("A", "C", "w")],
    )
    out = apply_widget(g, RemoveNode("B"))
    assert out.node_ids == ("A", "C")
    assert out.edge_triples == (("A", "C", "w"),)


def test_edit_link_label_noop_returns_equal_graph(two_node):
    out = apply_widget(two_node, EditLinkLabel("Solid", "Liquid", "melting", "melting"))
    assert out == two_node


def test_widget_errors(two_node):
    with pytest.raises(UnknownNodeError):
        apply_widget(two_node, RemoveNode("Gas"))
    with pytest.raises(UnknownNodeError):
        apply_widget(two_node, AddLink("Solid", "Gas", "boiling"))
    with pytest.raises(UnknownLinkError):
        apply_widget(two_node, RemoveLink("Solid", "Liquid", "boiling"))
    with pytest.raises(DuplicateLinkError):
        apply_widget(two_node, AddLink("Solid", "Liquid", "melting"))
    with pytest.raises(UnknownLinkError):
        apply_widget(two_node, EditLinkLabel("Solid", "Liquid", "wrong", "x"))
    with pytest.raises(UnknownNodeError):
        apply_widget(two_node, EditNodeLabel("Gas", "Gas Phase"))


def test_slugify():
    assert slugify_label("Thermal Energy") == "ThermalEnergy"
    assert slugify_label("weight slider") == "WeightSlider"
    assert slugify_label("  !! ") == "Node"
    assert mint_node_id(["Node"], "!!") == "Node_2"


# --- random edit sequences ----------------------------------------------------


def _check_valid(g: Graph):
    ids = [n.id for n in g.nodes]
    assert len(set(ids)) == len(ids)
    id_set = set(ids)
    for e in g.edges:
        assert e.source in id_set and e.target in id_set
    triples = [e.triple for e in g.edges]
    assert len(set(triples)) == len(triples)


@st.composite
def random_actions(draw, g: Graph, count: int):
    """A sequence of widget actions, mutating a working copy to stay plausible."""
    actions = []
    work = g
    labels = ["Foo", "Bar", "Heat Source", "Foo"]
    for _ in range(count):
        choices = ["add_node"]
        if work.nodes:
            choices += ["add_link", "remove_node", "edit_node_label"]
        if work.edges:
            choices += ["remove_link", "edit_link_label"]
        kind = draw(st.sampled_from(choices))
        if kind == "add_node":
            a = AddNode(draw(st.sampled_from(labels)))
        elif kind == "add_link":
            s = draw(st.sampled_from(work.node_ids))
            t = draw(st.sampled_from(work.node_ids))
            a = AddLink(s, t, draw(st.sampled_from(["x", "y", "z"])))
            if work.has_edge(a.source, a.target, a.label):
                continue
        elif kind == "remove_node":
            a = RemoveNode(draw(st.sampled_from(work.node_ids)))
        elif kind == "edit_node_label":
            a = EditNodeLabel(draw(st.sampled_from(work.node_ids)), draw(st.sampled_from(labels)))
        elif kind == "remove_link":
            e = draw(st.sampled_from(work.edges))
            a = RemoveLink(e.source, e.target, e.label)
        else:
            e = draw(st.sampled_from(work.edges))
            new = draw(st.sampled_from(["x", "y", "z", e.label]))
            a = EditLinkLabel(e.source, e.target, e.label, new)
            if new != e.label and work.has_edge(e.source, e.target, new):
                continue
        work = apply_widget(work, a)
        actions.append(a)
    return actions


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_fuzzed_edits_never_break_invariants(data):
    g = data.draw(graphs(max_nodes=6, max_edges=8))
    actions = data.draw(random_actions(g, 10))
    out = apply_widgets(g, actions)
    _check_valid(out)


# --- diff -------------------------------------------------------------------


def test_diff_identical_graphs_is_empty(two_node):
    assert diff_graphs(two_node, two_node) == []


def test_diff_single_add_link(two_node):
    after = apply_widget(two_node, AddLink("Liquid", "Solid", "freezing"))
    assert diff_graphs(two_node, after) == [AddLink("Liquid", "Solid", "freezing")]


def test_diff_single_remove_node(two_node):
    after = apply_widget(two_node, RemoveNode("Liquid"))
    assert diff_graphs(two_node, after) == [RemoveNode("Liquid")]


def test_diff_label_edits(two_node):
    after = apply_widgets(
        two_node,
        [EditNodeLabel("Solid", "Ice"), EditLinkLabel("Solid", "Liquid", "melting", "thaws into")],
    )
    d = diff_graphs(two_node, after)
    assert d == [EditNodeLabel("Solid", "Ice"), EditLinkLabel("Solid", "Liquid", "melting", "thaws into")]


def test_diff_recreates_reordered_node():
    before = make_graph(nodes=[("Foo", "Foo"), ("B", "b")])
    after = make_graph(nodes=[("B", "b"), ("Foo", "Foo")])
    d = diff_graphs(before, after)
    assert apply_widgets(before, d) == after


def test_diff_handles_suffix_minting():
    before = make_graph(nodes=[("Foo", "Old")])
    # Reachable: AddNode("Foo") -> Foo_2, AddNode("Foo") -> Foo_3, RemoveNode(Foo_2)
    after = apply_widgets(before, [AddNode("Foo"), AddNode("Foo"), RemoveNode("Foo_2")])
    d = diff_graphs(before, after)
    assert apply_widgets(before, d) == after


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_diff_replay_closure_property(data):
    before = data.draw(graphs(max_nodes=5, max_edges=6))
    actions = data.draw(random_actions(before, data.draw(st.integers(0, 20))))
    after = apply_widgets(before, actions)
    d = diff_graphs(before, after)
    assert apply_widgets(before, d) == after
    assert len(d) <= max(2 * len(actions), len(actions) + 4)


# --- subgraph ----------------------------------------------------------------


def test_subgraph_full_and_empty(two_node):
    assert extract_subgraph(two_node, set(two_node.node_ids)) == two_node
    empty = extract_subgraph(two_node, set())
    assert empty == Graph("LR")


def test_subgraph_induced_edges():
    g = make_graph(nodes=[("A", "a"), ("B", "b"), ("C", "c")], edges=[("A", "B", "x"), ("B", "C", "y")])
    sub = extract_subgraph(g, {"A", "B"})
    assert sub.node_ids == ("A", "B")
    assert sub.edge_triples == (("A", "B", "x"),)


def test_subgraph_unknown_id(two_node):
    with pytest.raises(UnknownNodeError):
        extract_subgraph(two_node, {"Solid", "Gas"})
