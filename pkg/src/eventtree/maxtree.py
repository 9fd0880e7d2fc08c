"""Solvers for the budgeted maximum rooted subtree problem on a meta-graph.

All solvers maximise the number of vertices of a tree rooted at ``r`` whose
total edge weight stays within the budget. Only the sub-DAG reachable from
``r`` is ever touched.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from decimal import ROUND_FLOOR, ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from eventtree.errors import NotFoundError, ValidationError
from eventtree.meta_graph import Edge, MetaGraph, time_induced

ALGORITHMS = ("greedy", "random", "dp", "dp_dij", "binary_search")

# absolute slack when comparing float costs against a budget
COST_EPS = 1e-9

BRUTE_FORCE_LIMIT = 20


def fits(cost: float, budget: float) -> bool:
    return cost <= budget + COST_EPS


@dataclass(frozen=True)
class EventTree:
    root: int
    nodes: frozenset[int]
    edges: tuple[Edge, ...]

    @classmethod
    def build(cls, root: int, edges: Iterable[Edge]) -> "EventTree":
        es = tuple(sorted(edges, key=lambda e: (e.src, e.dst)))
        nodes = frozenset([root, *(e.dst for e in es)])
        return cls(root, nodes, es)

    @classmethod
    def singleton(cls, root: int) -> "EventTree":
        return cls(root, frozenset([root]), ())

    @property
    def cost(self) -> float:
        return math.fsum(e.weight for e in self.edges)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {v: [] for v in self.nodes}
        for e in self.edges:
            out[e.src].append(e.dst)
        return out


def check_tree(tree: EventTree, g: MetaGraph, budget: float | None = None,
               window: float | None = None) -> None:
    """Raise ValidationError unless ``tree`` is a valid rooted subtree of ``g``."""
    if tree.root not in tree.nodes:
        raise ValidationError("root not among tree nodes")
    parents: dict[int, int] = {}
    for e in tree.edges:
        if not g.has_edge(e.src, e.dst):
            raise ValidationError(f"edge {e.src}->{e.dst} not in graph")
        if g.edge(e.src, e.dst).weight != e.weight:
            raise ValidationError(f"edge {e.src}->{e.dst} weight differs from graph")
        if e.src not in tree.nodes or e.dst not in tree.nodes:
            raise ValidationError(f"edge {e.src}->{e.dst} leaves the node set")
        if e.dst in parents:
            raise ValidationError(f"vertex {e.dst} has two parents")
        if e.dst == tree.root:
            raise ValidationError("root has a parent")
        parents[e.dst] = e.src
    if set(parents) != set(tree.nodes) - {tree.root}:
        raise ValidationError("some non-root vertex has no parent")
    kids = tree.children()
    seen = {tree.root}
    stack = [tree.root]
    while stack:
        for c in kids[stack.pop()]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    if seen != set(tree.nodes):
        raise ValidationError("tree is not connected from its root")
    if budget is not None and not fits(tree.cost, budget):
        raise ValidationError(f"cost {tree.cost} exceeds budget {budget}")
    if window is not None:
        ts = [g.timestamp(v) for v in tree.nodes]
        if max(ts) - min(ts) > window:
            raise ValidationError(f"time span {max(ts) - min(ts)} exceeds window {window}")


@dataclass(frozen=True)
class SolveParams:
    budget: float
    window: int | None = None
    algorithm: str = "greedy"
    dp_decimals: int = 2
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not self.budget >= 0:
            raise ValidationError(f"budget must be >= 0, got {self.budget}")
        if self.window is not None and self.window < 0:
            raise ValidationError(f"window must be >= 0, got {self.window}")
        if self.algorithm not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if not 0 <= self.dp_decimals <= 6:
            raise ValidationError("dp_decimals must lie in [0, 6]")


def _require_vertex(g: MetaGraph, r: int) -> None:
    if r not in g:
        raise NotFoundError(f"root {r} not in graph")


# ---------------------------------------------------------------------------
# growing heuristics


def greedy_grow(g: MetaGraph, r: int, budget: float) -> EventTree:
    """Repeatedly attach the cheapest cutset edge that still fits the budget."""
    _require_vertex(g, r)
    in_tree = {r}
    chosen: list[Edge] = []
    cost = 0.0
    heap = [(e.weight, e.dst, e.src, e) for e in g.out_edges(r)]
    heapq.heapify(heap)
    while heap:
        w, dst, _, e = heapq.heappop(heap)
        if dst in in_tree:
            continue
        if not fits(cost + w, budget):
            # every remaining cutset edge is at least as heavy
            break
        in_tree.add(dst)
        chosen.append(e)
        cost += w
        for f in g.out_edges(dst):
            if f.dst not in in_tree:
                heapq.heappush(heap, (f.weight, f.dst, f.src, f))
    return EventTree.build(r, chosen)


def random_grow(g: MetaGraph, r: int, budget: float, seed: int = 0) -> EventTree:
    """Like greedy_grow, but picks uniformly among the affordable cutset edges."""
    _require_vertex(g, r)
    rng = random.Random(seed)
    in_tree = {r}
    chosen: list[Edge] = []
    cost = 0.0
    cutset = list(g.out_edges(r))
    while True:
        cutset = [e for e in cutset if e.dst not in in_tree]
        options = [e for e in cutset if fits(cost + e.weight, budget)]
        if not options:
            break
        e = options[rng.randrange(len(options))]
        in_tree.add(e.dst)
        chosen.append(e)
        cost += e.weight
        cutset.extend(f for f in g.out_edges(e.dst) if f.dst not in in_tree)
        cutset.sort(key=lambda f: (f.src, f.dst))
    return EventTree.build(r, chosen)


# ---------------------------------------------------------------------------
# dynamic programming


def discretize(value: float, decimals: int) -> int:
    """``value * 10**decimals`` rounded half-up, computed on the decimal repr."""
    return int(Decimal(repr(float(value))).scaleb(decimals).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _int_budget(budget: float, decimals: int, cap: int) -> int:
    if math.isinf(budget):
        return cap
    b = int(Decimal(repr(float(budget))).scaleb(decimals).quantize(Decimal(1), rounding=ROUND_FLOOR))
    return max(0, min(b, cap))


def _repair(tree: EventTree, budget: float) -> EventTree:
    """Drop the heaviest-entry leaves until the real (undiscretised) cost fits."""
    edges = list(tree.edges)
    while edges and not fits(math.fsum(e.weight for e in edges), budget):
        srcs = {e.src for e in edges}
        leaves = [e for e in edges if e.dst not in srcs]
        worst = max(leaves, key=lambda e: (e.weight, e.dst))
        edges.remove(worst)
    return EventTree.build(tree.root, edges)


def _reachable_order(g: MetaGraph, r: int) -> list[int]:
    reach = g.reachable(r)
    return [v for v in g.order if v in reach]


def dp_tree_exact(tree: MetaGraph, r: int, budget: float, decimals: int = 2) -> EventTree:
    """Optimal budgeted subtree of an out-tree via a knapsack DP over children.

    Weights are scaled by ``10**decimals`` and rounded half-up; the table
    ``f[v][b]`` holds the largest subtree at ``v`` of integer cost ``<= b``.
    """
    _require_vertex(tree, r)
    order = _reachable_order(tree, r)
    members = set(order)
    parent_edge: dict[int, Edge] = {}
    for v in order:
        ins = [e for e in tree.in_edges(v) if e.src in members]
        if v == r:
            continue
        if len(ins) != 1:
            raise ValidationError(f"input is not an out-tree at {r}: vertex {v} has {len(ins)} parents")
        parent_edge[v] = ins[0]
    children: dict[int, list[int]] = {v: [] for v in order}
    for v, e in parent_edge.items():
        children[e.src].append(v)

    wint = {v: discretize(e.weight, decimals) for v, e in parent_edge.items()}
    cap = sum(wint.values())
    bmax = _int_budget(budget, decimals, cap)
    width = bmax + 1

    table: dict[int, np.ndarray] = {}
    choices: dict[int, list[np.ndarray]] = {}
    for v in reversed(order):
        cur = np.ones(width, dtype=np.int64)
        picks = []
        for c in children[v]:
            w = wint[c]
            choice = np.full(width, -1, dtype=np.int64)
            if w <= bmax:
                fc = table[c]
                best = cur.copy()
                # only budgets where the child's table steps up can improve
                steps = np.flatnonzero(np.diff(fc, prepend=0) > 0)
                for x in steps:
                    off = w + int(x)
                    if off > bmax:
                        break
                    cand = cur[: width - off] + fc[x]
                    better = cand > best[off:]
                    if better.any():
                        best[off:] = np.where(better, cand, best[off:])
                        choice[off:][better] = x
                cur = best
            picks.append(choice)
            del table[c]
        table[v] = cur
        choices[v] = picks

    root_tab = table[r]
    b_star = int(np.flatnonzero(root_tab == root_tab[-1])[0])
    chosen: list[Edge] = []
    stack = [(r, b_star)]
    while stack:
        v, b = stack.pop()
        for idx in range(len(children[v]) - 1, -1, -1):
            c = children[v][idx]
            x = int(choices[v][idx][b])
            if x >= 0:
                chosen.append(parent_edge[c])
                stack.append((c, x))
                b -= wint[c] + x
    return _repair(EventTree.build(r, chosen), budget)


@dataclass
class _Partial:
    cost: int
    size: int
    nodes: frozenset[int]
    edges: tuple[Edge, ...]


def _pareto(entries: list[_Partial]) -> list[_Partial]:
    entries = sorted(entries, key=lambda p: (p.cost, -p.size))
    out: list[_Partial] = []
    for p in entries:
        if out and out[-1].size >= p.size:
            continue
        out.append(p)
    return out


def dp_dag_heuristic(g: MetaGraph, r: int, budget: float, decimals: int = 2) -> EventTree:
    """Tree DP applied to a DAG, rejecting child subtrees that overlap.

    Each vertex keeps a Pareto frontier of (integer cost, size) subtrees.
    Children are merged in increasing order of their best cost-per-vertex;
    a combination is discarded when the two subtrees share a vertex, so the
    result is a tree but not necessarily optimal.
    """
    _require_vertex(g, r)
    order = _reachable_order(g, r)
    members = set(order)
    wint = {(e.src, e.dst): discretize(e.weight, decimals)
            for v in order for e in g.out_edges(v) if e.dst in members}
    cap = sum(wint.values())
    bmax = _int_budget(budget, decimals, cap)

    frontier: dict[int, list[_Partial]] = {}
    for v in reversed(order):
        cur = [_Partial(0, 1, frozenset([v]), ())]
        kids = []
        for e in g.out_edges(v):
            w = wint[(e.src, e.dst)]
            if w > bmax:
                continue
            density = min((w + p.cost) / p.size for p in frontier[e.dst])
            kids.append((density, e.dst, e, w))
        kids.sort(key=lambda t: (t[0], t[1]))
        for _, c, e, w in kids:
            new = list(cur)
            for p in cur:
                for q in frontier[c]:
                    total = p.cost + w + q.cost
                    if total > bmax:
                        break
                    if p.nodes.isdisjoint(q.nodes):
                        new.append(_Partial(total, p.size + q.size, p.nodes | q.nodes,
                                            p.edges + (e,) + q.edges))
            cur = _pareto(new)
        frontier[v] = cur

    best = max(frontier[r], key=lambda p: (p.size, -p.cost))
    return _repair(EventTree.build(r, best.edges), budget)


# ---------------------------------------------------------------------------
# shortest paths


def shortest_paths(g: MetaGraph, r: int) -> tuple[dict[int, float], dict[int, Edge]]:
    """Dijkstra from ``r``: distances and, per reached vertex, its predecessor edge.

    Among equally short predecessors the smallest source id wins.
    """
    _require_vertex(g, r)
    dist: dict[int, float] = {r: 0.0}
    done: set[int] = set()
    heap = [(0.0, g.position(r), r)]
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for e in g.out_edges(u):
            nd = d + e.weight
            if e.dst not in dist or nd < dist[e.dst]:
                dist[e.dst] = nd
                heapq.heappush(heap, (nd, g.position(e.dst), e.dst))
    pred: dict[int, Edge] = {}
    for v in dist:
        if v == r:
            continue
        tight = [e for e in g.in_edges(v)
                 if e.src in dist and dist[e.src] + e.weight <= dist[v] + COST_EPS]
        pred[v] = min(tight, key=lambda e: (dist[e.src] + e.weight, e.src))
    return dist, pred


def shortest_path_tree(g: MetaGraph, r: int) -> MetaGraph:
    _, pred = shortest_paths(g, r)
    verts = {r, *pred}
    return MetaGraph((g.interaction(v) for v in g.order if v in verts), pred.values())


def dp_dij(g: MetaGraph, r: int, budget: float, decimals: int = 2) -> EventTree:
    """Exact tree DP on the shortest-path predecessor tree of ``r``."""
    return dp_tree_exact(shortest_path_tree(g, r), r, budget, decimals)


# ---------------------------------------------------------------------------
# directed Steiner tree (level 1) and binary search on the quota


def _nearest_terminals(g: MetaGraph, r: int, terminals: Iterable[int] | None,
                       dist: dict[int, float]) -> list[int]:
    pool = set(dist) if terminals is None else (set(terminals) & set(dist)) | {r}
    # ties fall back to the DAG order, so ancestors always precede descendants
    return sorted(pool, key=lambda v: (dist[v], g.position(v)))


def _union_of_paths(r: int, targets: Iterable[int], pred: dict[int, Edge]) -> EventTree:
    edges: dict[int, Edge] = {}
    for t in targets:
        v = t
        while v != r and v not in edges:
            e = pred[v]
            edges[v] = e
            v = e.src
    return EventTree.build(r, edges.values())


def dst_level1(g: MetaGraph, r: int, quota: int, terminals: Iterable[int] | None = None
               ) -> tuple[EventTree, bool]:
    """Connect ``r`` to its ``quota`` nearest terminals along shortest paths.

    Returns the tree and a shortfall flag set when fewer than ``quota``
    terminals are reachable (the tree then spans all reachable terminals).
    """
    if quota < 1:
        raise ValidationError(f"quota must be >= 1, got {quota}")
    dist, pred = shortest_paths(g, r)
    ranked = _nearest_terminals(g, r, terminals, dist)
    return _union_of_paths(r, ranked[:quota], pred), quota > len(ranked)


def binary_search_dst(g: MetaGraph, r: int, budget: float) -> EventTree:
    """Largest quota whose level-1 Steiner tree fits the budget, by bisection."""
    dist, pred = shortest_paths(g, r)
    ranked = _nearest_terminals(g, r, None, dist)

    def probe(q: int) -> EventTree:
        return _union_of_paths(r, ranked[:q], pred)

    lo, hi = 1, len(ranked)
    top = probe(hi)
    if fits(top.cost, budget):
        return top
    # invariant: probe(lo) fits, probe(hi) does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if fits(probe(mid).cost, budget):
            lo = mid
        else:
            hi = mid
    return probe(lo)


# ---------------------------------------------------------------------------
# exhaustive oracle


def brute_force_opt(g: MetaGraph, r: int, budget: float, limit: int = BRUTE_FORCE_LIMIT) -> EventTree:
    """Exact optimum by enumerating every vertex set that can host a tree at ``r``.

    Vertices are decided in topological order; a vertex may join only if one
    of its in-neighbours already joined, and it then hangs off its cheapest
    such in-neighbour. Ties: larger size, then lower cost, then the
    lexicographically smallest sorted vertex tuple.
    """
    _require_vertex(g, r)
    order = _reachable_order(g, r)
    if len(order) > limit:
        raise ValidationError(f"brute force refused: {len(order)} reachable vertices > {limit}")
    rest = order[1:]
    n = len(rest)
    best_key: list = [None]
    best_edges: list[tuple[Edge, ...]] = [()]

    def visit(idx: int, members: set[int], edges: list[Edge], cost: float) -> None:
        size = len(members)
        if best_key[0] is not None and size + (n - idx) < -best_key[0][0]:
            return
        if idx == n:
            key = (-size, math.fsum(e.weight for e in edges), tuple(sorted(members)))
            if best_key[0] is None or key < best_key[0]:
                best_key[0] = key
                best_edges[0] = tuple(edges)
            return
        v = rest[idx]
        ins = [e for e in g.in_edges(v) if e.src in members]
        if ins:
            e = min(ins, key=lambda f: (f.weight, f.src))
            if fits(cost + e.weight, budget):
                members.add(v)
                edges.append(e)
                visit(idx + 1, members, edges, cost + e.weight)
                edges.pop()
                members.remove(v)
        visit(idx + 1, members, edges, cost)

    visit(0, {r}, [], 0.0)
    return EventTree.build(r, best_edges[0])


# ---------------------------------------------------------------------------
# dispatch


def maxtree_solve(g: MetaGraph, r: int, params: SolveParams) -> EventTree:
    _require_vertex(g, r)
    alg = params.algorithm
    if alg == "greedy":
        return greedy_grow(g, r, params.budget)
    if alg == "random":
        return random_grow(g, r, params.budget, params.rng_seed)
    if alg == "dp":
        return dp_dag_heuristic(g, r, params.budget, params.dp_decimals)
    if alg == "dp_dij":
        return dp_dij(g, r, params.budget, params.dp_decimals)
    if alg == "binary_search":
        return binary_search_dst(g, r, params.budget)
    raise ValidationError(f"unknown algorithm {alg!r}")


def tmaxtree(g: MetaGraph, r: int, params: SolveParams) -> EventTree:
    """Solve on the window ``[t_r, t_r + window]``; without a window, on all of ``g``."""
    _require_vertex(g, r)
    if params.window is None:
        return maxtree_solve(g, r, params)
    t_r = g.timestamp(r)
    return maxtree_solve(time_induced(g, t_r, t_r + params.window), r, params)


def solve_all(g: MetaGraph, r: int, budget: float, decimals: int = 2, seed: int = 0,
              algorithms: Sequence[str] = ALGORITHMS) -> dict[str, EventTree]:
    return {a: maxtree_solve(g, r, SolveParams(budget, None, a, decimals, seed)) for a in algorithms}
