import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventtree.core_model import ContentVector, Interaction
from eventtree.errors import NotFoundError, ValidationError
from eventtree.meta_graph import (Edge, EdgeKind, MetaGraph, build, classify_pair, graph_from_dict, graph_to_dict,
                                  is_acyclic, load_graph, save_graph, strip_singletons, time_induced, to_dot)

from conftest import DAY
from golden import FIG1_EDGES, FIG1_HEAVY

MON = 1430092800


def msg(i, sender, recipients, t=0, topic=None):
    return Interaction(i, sender, frozenset(recipients), t, ContentVector(topic=topic))


@pytest.mark.parametrize("i,j,kind", [
    (msg(1, "CEO", {"PM"}), msg(2, "PM", {"TM1", "TM2"}), EdgeKind.RELAY),
    (msg(2, "PM", {"TM1", "TM2"}), msg(4, "PM", {"CEO"}), EdgeKind.BROADCAST),
    (msg(2, "PM", {"TM1", "TM2"}), msg(3, "TM2", {"PM"}), EdgeKind.REPLY),
    (msg(1, "a", {"b"}), msg(2, "c", {"d"}), None),
    # self-addressed: every rule fires, reply wins
    (msg(1, "a", {"a"}), msg(2, "a", {"a"}), EdgeKind.REPLY),
    # reply to the sender and a third party is still a reply
    (msg(1, "a", {"b"}), msg(2, "b", {"a", "c"}), EdgeKind.REPLY),
])
def test_classify_pair(i, j, kind):
    assert classify_pair(i, j) is kind


class TestFig1:
    def test_edges_and_kinds(self, fig1_graph):
        got = {(e.src, e.dst): e.kind.value for e in fig1_graph.edges}
        assert got == FIG1_EDGES

    def test_heavy_edges(self, fig1_graph):
        assert {(e.src, e.dst) for e in fig1_graph.edges if e.weight >= 0.8} == FIG1_HEAVY
        assert all(e.weight == 0.0 for e in fig1_graph.edges if (e.src, e.dst) not in FIG1_HEAVY)

    def test_time_induced_mon_to_thu(self, fig1_graph):
        sub = time_induced(fig1_graph, MON, MON + 3 * DAY)
        assert set(sub.order) == {1, 2, 3, 4, 5, 6}
        assert {(e.src, e.dst) for e in fig1_graph.edges} - {(e.src, e.dst) for e in sub.edges} == {(2, 7), (5, 7)}

    def test_time_induced_edge_cases(self, fig1_graph):
        assert time_induced(fig1_graph, MON, MON + 4 * DAY) == fig1_graph
        assert len(time_induced(fig1_graph, 0, 1)) == 0
        with pytest.raises(ValidationError):
            time_induced(fig1_graph, 2, 1)

    def test_no_singletons(self, fig1_graph):
        assert strip_singletons(fig1_graph) == fig1_graph


def test_single_and_unrelated():
    g = build([msg(0, "a", {"b"})])
    assert (len(g), g.num_edges) == (1, 0)
    g = build([msg(0, "a", {"b"}, 0), msg(1, "c", {"d"}, 1)])
    assert (len(g), g.num_edges) == (2, 0)
    assert len(strip_singletons(g)) == 0
    assert len(strip_singletons(build([]))) == 0


def test_equal_timestamps():
    a, b = msg(0, "a", {"b"}, 5), msg(1, "b", {"a"}, 5)
    assert build([a, b]).num_edges == 0
    g = build([a, b], same_time_edges=True)
    assert [(e.src, e.dst, e.kind) for e in g.edges] == [(0, 1, EdgeKind.REPLY)]


def test_max_weight_prunes(fig1_msgs):
    assert build(fig1_msgs, max_weight=0.5).num_edges == 13 - len(FIG1_HEAVY)


class TestMetaGraphValidation:
    def test_backward_edge(self):
        with pytest.raises(ValidationError):
            MetaGraph.from_weighted_edges(2, [(1, 0, 1.0)])

    def test_parallel_edge(self):
        with pytest.raises(ValidationError):
            MetaGraph.from_weighted_edges(2, [(0, 1, 1.0), (0, 1, 2.0)])

    def test_negative_weight(self):
        with pytest.raises(ValidationError):
            MetaGraph.from_weighted_edges(2, [(0, 1, -1.0)])

    def test_missing_vertex(self):
        with pytest.raises(ValidationError):
            MetaGraph.from_weighted_edges(2, [(0, 5, 1.0)])

    def test_lookups(self):
        g = MetaGraph.from_weighted_edges(3, [(0, 1, 1.0)])
        with pytest.raises(NotFoundError):
            g.interaction(9)
        with pytest.raises(NotFoundError):
            g.edge(1, 2)
        with pytest.raises(NotFoundError):
            g.reachable(9)
        assert g.reachable(0) == {0, 1}


def test_json_round_trip(fig1_graph, tmp_path):
    p = tmp_path / "g.json"
    save_graph(fig1_graph, p)
    assert load_graph(p) == fig1_graph
    assert graph_from_dict(json.loads(json.dumps(graph_to_dict(fig1_graph)))) == fig1_graph


def test_load_graph_errors(tmp_path):
    p = tmp_path / "g.json"
    p.write_text("{")
    with pytest.raises(ValidationError):
        load_graph(p)
    p.write_text('{"vertices": []}')
    with pytest.raises(ValidationError):
        load_graph(p)


def test_dot(fig1_graph):
    text = to_dot(fig1_graph)
    assert text.startswith('digraph "metagraph" {')
    assert 'n1 [label="1|CEO|1430092800"];' in text
    assert 'n1 -> n2 [kind="relay", weight="0.000000"];' in text
    assert 'n1 -> n6 [kind="reply", weight="1.000000", style=dashed];' in text
    sub = to_dot(fig1_graph, [1, 2], [fig1_graph.edge(1, 2)], name="ev")
    assert sub.count("->") == 1 and "n3" not in sub


# ---------------------------------------------------------------------------
# properties

people = st.sampled_from(["a", "b", "c", "d", "e", "f"])


@st.composite
def logs(draw, max_size=14):
    n = draw(st.integers(0, max_size))
    return [msg(i, draw(people), draw(st.sets(people, min_size=1, max_size=3)), draw(st.integers(0, 20)),
                tuple(draw(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=2))))
            for i in range(n)]


@given(logs())
def test_build_is_acyclic_and_rules_are_a_fixpoint(msgs):
    g = build(msgs)
    assert is_acyclic(g)
    n = len(msgs)
    assert g.num_edges <= n * (n - 1) // 2
    for e in g.edges:
        i, j = g.interaction(e.src), g.interaction(e.dst)
        assert i.order_key < j.order_key
        assert classify_pair(i, j) is e.kind
    # every qualifying pair got an edge
    for i in msgs:
        for j in msgs:
            if i.timestamp < j.timestamp and classify_pair(i, j) is not None:
                assert g.has_edge(i.id, j.id)


@given(logs())
def test_disjoint_participants_give_no_edges(msgs):
    renamed = [msg(m.id, f"s{m.id}", {f"r{m.id}"}, m.timestamp) for m in msgs]
    assert build(renamed).num_edges == 0


@settings(max_examples=50)
@given(logs(), st.integers(0, 20), st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
def test_time_induced_composes(msgs, a, b, c, d):
    g = build(msgs)
    s1, f1 = min(a, b), max(a, b)
    s2, f2 = min(c, d), max(c, d)
    if msgs:
        ts = [m.timestamp for m in msgs]
        assert time_induced(g, min(ts), max(ts)) == g
    lo, hi = max(s1, s2), min(f1, f2)
    twice = time_induced(time_induced(g, s1, f1), s2, f2)
    if lo <= hi:
        assert twice == time_induced(g, lo, hi)
    else:
        assert len(twice) == 0
