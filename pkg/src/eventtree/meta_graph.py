"""The interaction meta-graph: a weighted DAG whose vertices are interactions."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

from eventtree.core_model import ContentVector, Interaction, dissimilarity, ingest, serialize
from eventtree.errors import NotFoundError, ValidationError

DASHED_WEIGHT = 0.8


class EdgeKind(str, enum.Enum):
    BROADCAST = "broadcast"
    RELAY = "relay"
    REPLY = "reply"


@dataclass(frozen=True, order=True)
class Edge:
    src: int
    dst: int
    kind: EdgeKind
    weight: float


def classify_pair(i: Interaction, j: Interaction) -> EdgeKind | None:
    """Kind of information flow from ``i`` to a later ``j``, if any.

    Reply beats relay beats broadcast when several rules hold.
    """
    if j.sender in i.recipients:
        if i.sender in j.recipients:
            return EdgeKind.REPLY
        return EdgeKind.RELAY
    if i.sender == j.sender:
        return EdgeKind.BROADCAST
    return None


class MetaGraph:
    """Immutable weighted DAG over interactions.

    Vertices are kept in ``(timestamp, id)`` order, which is a topological
    order since every edge points forward in it.
    """

    def __init__(self, interactions: Iterable[Interaction], edges: Iterable[Edge]):
        msgs = sorted(interactions, key=lambda m: m.order_key)
        self._msgs: dict[int, Interaction] = {}
        for m in msgs:
            if m.id in self._msgs:
                raise ValidationError(f"duplicate interaction id {m.id}")
            self._msgs[m.id] = m
        self._order: tuple[int, ...] = tuple(m.id for m in msgs)
        self._pos = {v: k for k, v in enumerate(self._order)}
        edge_list = sorted(edges, key=lambda e: (e.src, e.dst))
        self._out: dict[int, list[Edge]] = {v: [] for v in self._order}
        self._in: dict[int, list[Edge]] = {v: [] for v in self._order}
        seen = set()
        for e in edge_list:
            if e.src not in self._msgs or e.dst not in self._msgs:
                raise ValidationError(f"edge {e.src}->{e.dst} references a missing vertex")
            if self._pos[e.src] >= self._pos[e.dst]:
                raise ValidationError(f"edge {e.src}->{e.dst} does not point forward in time")
            if (e.src, e.dst) in seen:
                raise ValidationError(f"parallel edge {e.src}->{e.dst}")
            if e.weight < 0:
                raise ValidationError(f"edge {e.src}->{e.dst} has negative weight")
            seen.add((e.src, e.dst))
            self._out[e.src].append(e)
            self._in[e.dst].append(e)
        self._edges = tuple(edge_list)
        self._by_pair = {(e.src, e.dst): e for e in edge_list}

    # -- accessors ---------------------------------------------------------
    @property
    def order(self) -> tuple[int, ...]:
        return self._order

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, v: object) -> bool:
        return v in self._msgs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetaGraph):
            return NotImplemented
        return self._msgs == other._msgs and self._edges == other._edges

    def __repr__(self) -> str:
        return f"MetaGraph({len(self)} vertices, {len(self._edges)} edges)"

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def interaction(self, v: int) -> Interaction:
        try:
            return self._msgs[v]
        except KeyError:
            raise NotFoundError(f"vertex {v} not in graph") from None

    def interactions(self) -> list[Interaction]:
        return [self._msgs[v] for v in self._order]

    def timestamp(self, v: int) -> int:
        return self.interaction(v).timestamp

    def position(self, v: int) -> int:
        return self._pos[v]

    def out_edges(self, v: int) -> list[Edge]:
        return self._out[v]

    def in_edges(self, v: int) -> list[Edge]:
        return self._in[v]

    def edge(self, src: int, dst: int) -> Edge:
        try:
            return self._by_pair[(src, dst)]
        except KeyError:
            raise NotFoundError(f"edge {src}->{dst} not in graph") from None

    def has_edge(self, src: int, dst: int) -> bool:
        return (src, dst) in self._by_pair

    def subgraph(self, vertices: Iterable[int]) -> "MetaGraph":
        keep = set(vertices)
        return MetaGraph((self._msgs[v] for v in self._order if v in keep),
                         (e for e in self._edges if e.src in keep and e.dst in keep))

    def reachable(self, root: int) -> set[int]:
        if root not in self._msgs:
            raise NotFoundError(f"vertex {root} not in graph")
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for e in self._out[u]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return seen

    @classmethod
    def from_weighted_edges(cls, n: int, edges: Iterable[tuple[int, int, float]],
                            kind: EdgeKind = EdgeKind.BROADCAST) -> "MetaGraph":
        """Abstract DAG on vertices ``0..n-1`` with timestamp equal to the vertex id.

        Meant for algorithm tests; senders are synthetic.
        """
        msgs = [Interaction(i, f"v{i}", frozenset({f"v{i}"}), i) for i in range(n)]
        return cls(msgs, (Edge(u, v, kind, float(w)) for u, v, w in edges))


def build(msgs: Sequence[Interaction], *,
          weight: Callable[[ContentVector, ContentVector], float] = dissimilarity,
          same_time_edges: bool = False,
          max_weight: float | None = None) -> MetaGraph:
    """Build the meta-graph over ``msgs``.

    By default only pairs with a strictly earlier timestamp are connected;
    ``same_time_edges=True`` also links equal timestamps in id order. Edges
    heavier than ``max_weight`` are dropped when it is given.
    """
    ordered = sorted(msgs, key=lambda m: m.order_key)
    by_sender: dict[str, list[Interaction]] = {}
    by_recipient: dict[str, list[Interaction]] = {}
    edges = []
    for j in ordered:
        cands: dict[int, Interaction] = {}
        for i in by_sender.get(j.sender, ()):
            cands[i.id] = i
        for i in by_recipient.get(j.sender, ()):
            cands[i.id] = i
        for i in cands.values():
            if i.timestamp == j.timestamp and not same_time_edges:
                continue
            kind = classify_pair(i, j)
            if kind is None:
                continue
            w = weight(i.content, j.content)
            if max_weight is not None and w > max_weight:
                continue
            edges.append(Edge(i.id, j.id, kind, w))
        by_sender.setdefault(j.sender, []).append(j)
        for r in j.recipients:
            by_recipient.setdefault(r, []).append(j)
    return MetaGraph(ordered, edges)


def time_induced(g: MetaGraph, start: int | float, end: int | float) -> MetaGraph:
    """Restrict ``g`` to interactions with ``start <= timestamp <= end``."""
    if start > end:
        raise ValidationError(f"empty interval: start {start} > end {end}")
    return g.subgraph(v for v in g.order if start <= g.timestamp(v) <= end)


def strip_singletons(g: MetaGraph) -> MetaGraph:
    return g.subgraph(v for v in g.order if g.in_edges(v) or g.out_edges(v))


def is_acyclic(g: MetaGraph) -> bool:
    """Kahn's algorithm; independent of the stored vertex order."""
    indeg = {v: len(g.in_edges(v)) for v in g.order}
    queue = [v for v, d in indeg.items() if d == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for e in g.out_edges(u):
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                queue.append(e.dst)
    return seen == len(g)


# ---------------------------------------------------------------------------
# export


def edge_to_dict(e: Edge) -> dict[str, Any]:
    return {"src": e.src, "dst": e.dst, "kind": e.kind.value, "weight": e.weight}


def graph_to_dict(g: MetaGraph) -> dict[str, Any]:
    return {
        "vertices": [serialize(m) for m in g.interactions()],
        "edges": [edge_to_dict(e) for e in g.edges],
    }


def graph_from_dict(data: Mapping[str, Any]) -> MetaGraph:
    try:
        msgs = ingest(data["vertices"])
        edges = [Edge(int(e["src"]), int(e["dst"]), EdgeKind(e["kind"]), float(e["weight"]))
                 for e in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed graph document: {exc}") from None
    return MetaGraph(msgs, edges)


def save_graph(g: MetaGraph, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(graph_to_dict(g), fh, sort_keys=True)
        fh.write("\n")


def load_graph(path: str | Path) -> MetaGraph:
    with Path(path).open("r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    return graph_from_dict(data)


def _dot_id(v: int) -> str:
    return f"n{v}"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(g: MetaGraph, vertices: Iterable[int] | None = None, edges: Iterable[Edge] | None = None,
           name: str = "metagraph") -> str:
    """Graphviz rendering; heavy edges (weight >= 0.8) are dashed."""
    vs = list(g.order) if vertices is None else [v for v in g.order if v in set(vertices)]
    es = list(g.edges) if edges is None else sorted(edges, key=lambda e: (e.src, e.dst))
    lines = [f'digraph "{_dot_escape(name)}" {{']
    for v in vs:
        m = g.interaction(v)
        label = _dot_escape(f"{m.id}|{m.sender}|{m.timestamp}")
        lines.append(f'  {_dot_id(v)} [label="{label}"];')
    for e in es:
        attrs = [f'kind="{e.kind.value}"', f'weight="{e.weight:.6f}"']
        if e.weight >= DASHED_WEIGHT:
            attrs.append("style=dashed")
        lines.append(f"  {_dot_id(e.src)} -> {_dot_id(e.dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
