"""Root ranking by event-size upper bound and greedy selection of k disjoint events."""

from __future__ import annotations

import bisect
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from eventtree.errors import NotFoundError, ValidationError
from eventtree.maxtree import EventTree, SolveParams, fits, tmaxtree
from eventtree.meta_graph import Edge, MetaGraph

SAMPLING = ("upperbound", "random")


def min_in_edge(g: MetaGraph, u: int) -> Edge | None:
    """Cheapest edge entering ``u`` (smaller source id on ties), or None."""
    if u not in g:
        raise NotFoundError(f"vertex {u} not in graph")
    ins = g.in_edges(u)
    if not ins:
        return None
    return min(ins, key=lambda e: (e.weight, e.src))


class _Timeline:
    """Vertex timestamps in topological order, for window lookups by bisection."""

    def __init__(self, g: MetaGraph):
        self.g = g
        self.times = [g.timestamp(v) for v in g.order]

    def window(self, r: int, span: float | None) -> list[int]:
        t_r = self.g.timestamp(r)
        lo = bisect.bisect_left(self.times, t_r)
        hi = len(self.times) if span is None or math.isinf(span) else bisect.bisect_right(self.times, t_r + span)
        return list(self.g.order[lo:hi])


def _upper_bound(g: MetaGraph, r: int, budget: float, window: list[int], reachable_only: bool) -> int:
    members = set(window)
    if reachable_only:
        reach = {r}
        for v in window:
            if v in reach:
                reach.update(e.dst for e in g.out_edges(v) if e.dst in members)
        members = reach
    outs = [e.weight for e in g.out_edges(r) if e.dst in members]
    if not outs:
        return 1
    lightest_child = min(outs)
    costs = sorted(
        min(e.weight for e in ins)
        for v in members if v != r
        for ins in [[e for e in g.in_edges(v) if e.src in members]] if ins
    )
    # j non-root vertices cost at least the j cheapest minimum in-edges, and
    # at least the root's lightest out-edge plus the j-1 cheapest of the rest
    count = 0
    prefix = 0.0
    for c in costs:
        nxt = prefix + c
        if not (fits(nxt, budget) and fits(lightest_child + prefix, budget)):
            break
        prefix = nxt
        count += 1
    return 1 + count


def size_upper_bound(g: MetaGraph, r: int, budget: float, window: float | None = None,
                     reachable_only: bool = False) -> int:
    """Upper bound on the size of any budget-feasible tree at ``r`` inside ``[t_r, t_r + window]``.

    Counts how many window vertices can be paid for with their minimum
    in-edge, cheapest first, after charging the root's lightest out-edge.
    Vertices without an in-edge inside the window can never join a tree and
    are not counted. ``reachable_only`` restricts the count to vertices
    reachable from ``r``, which tightens the bound.
    """
    if r not in g:
        raise NotFoundError(f"vertex {r} not in graph")
    return _upper_bound(g, r, budget, _Timeline(g).window(r, window), reachable_only)


@dataclass(frozen=True)
class RootRanking:
    entries: tuple[tuple[int, int], ...]

    @property
    def roots(self) -> list[int]:
        return [r for r, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def rank_roots(g: MetaGraph, budget: float, window: float | None, limit: int | None = None,
               reachable_only: bool = False) -> RootRanking:
    """All vertices ordered by (upper bound desc, id asc), truncated to ``limit``."""
    if limit is not None and limit < 1:
        raise ValidationError("limit must be >= 1")
    tl = _Timeline(g)
    scored = [(v, _upper_bound(g, v, budget, tl.window(v, window), reachable_only)) for v in g.order]
    scored.sort(key=lambda t: (-t[1], t[0]))
    if limit is not None:
        scored = scored[:limit]
    return RootRanking(tuple(scored))


def root_order(g: MetaGraph, params: SolveParams, sampling: str | RootRanking | Sequence[int],
               seed: int = 0) -> list[int]:
    if isinstance(sampling, RootRanking):
        return sampling.roots
    if sampling == "upperbound":
        return rank_roots(g, params.budget, params.window).roots
    if sampling == "random":
        order = list(g.order)
        random.Random(seed).shuffle(order)
        return order
    if isinstance(sampling, str):
        raise ValidationError(f"unknown sampling {sampling!r}; choose from {', '.join(SAMPLING)}")
    return list(sampling)


def generate_candidates(g: MetaGraph, params: SolveParams, roots: Iterable[int], limit: int = 100,
                        skip_covered: bool = True, threads: int = 1) -> list[EventTree]:
    """Solve trees for roots in the given order until ``limit`` candidates exist.

    With ``skip_covered`` a root already contained in an earlier candidate is
    skipped without solving. Threads only speculate ahead; the result is the
    same as the sequential one.
    """
    if limit < 1:
        raise ValidationError("limit must be >= 1")
    roots = list(roots)
    out: list[EventTree] = []
    seen: set[int] = set()
    batch = max(1, threads)
    pool = ThreadPoolExecutor(max_workers=batch) if batch > 1 else None
    try:
        i = 0
        while i < len(roots) and len(out) < limit:
            chunk = [r for r in roots[i:i + batch] if not (skip_covered and r in seen)]
            i += batch
            if pool is not None:
                solved = dict(zip(chunk, pool.map(lambda r: tmaxtree(g, r, params), chunk)))
            else:
                solved = {}
            for r in chunk:
                if len(out) >= limit:
                    break
                if skip_covered and r in seen:
                    continue
                tree = solved[r] if r in solved else tmaxtree(g, r, params)
                out.append(tree)
                seen.update(tree.nodes)
    finally:
        if pool is not None:
            pool.shutdown()
    return out


def prune_covered(tree: EventTree, covered: set[int] | frozenset[int]) -> EventTree | None:
    """Remove covered vertices and everything hanging below them; None if the root is covered."""
    if tree.root in covered:
        return None
    kids: dict[int, list[Edge]] = {}
    for e in tree.edges:
        kids.setdefault(e.src, []).append(e)
    keep: list[Edge] = []
    stack = [tree.root]
    while stack:
        u = stack.pop()
        for e in kids.get(u, ()):
            if e.dst not in covered:
                keep.append(e)
                stack.append(e.dst)
    return EventTree.build(tree.root, keep)


@dataclass(frozen=True)
class EventSet:
    trees: tuple[EventTree, ...]
    covered: frozenset[int]
    shortfall: bool = False

    @property
    def coverage(self) -> int:
        return len(self.covered)


def select_disjoint(candidates: Sequence[EventTree], k: int) -> EventSet:
    """Greedy max-coverage over candidate trees, keeping the picks vertex-disjoint.

    After each pick every remaining candidate loses the covered vertices and
    their subtrees; candidates left with fewer than two vertices are dropped.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    pool = [t for t in candidates if t.size >= 2]
    chosen: list[EventTree] = []
    covered: set[int] = set()
    while len(chosen) < k and pool:
        best = max(pool, key=lambda t: (t.size, -t.root))
        chosen.append(best)
        covered.update(best.nodes)
        pruned = (prune_covered(t, covered) for t in pool if t is not best)
        pool = [t for t in pruned if t is not None and t.size >= 2]
    return EventSet(tuple(chosen), frozenset(covered), shortfall=len(chosen) < k)


def greedy_max_coverage(sets: Sequence[Iterable[int]], k: int) -> list[int]:
    """Classic greedy for maximum k-coverage; returns indices of the chosen sets.

    Ties go to the smaller index; stops early once no set adds anything.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    frozen = [frozenset(s) for s in sets]
    covered: set[int] = set()
    picked: list[int] = []
    for _ in range(k):
        best, gain = -1, 0
        for i, s in enumerate(frozen):
            if i in picked:
                continue
            g = len(s - covered)
            if g > gain:
                best, gain = i, g
        if best < 0:
            break
        picked.append(best)
        covered |= frozen[best]
    return picked


def top_k_events(g: MetaGraph, params: SolveParams, k: int,
                 roots: str | RootRanking | Sequence[int] = "upperbound", seed: int = 0,
                 limit: int = 100, threads: int = 1) -> EventSet:
    """Detect ``k`` vertex-disjoint events: rank roots, solve candidates, select greedily."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    order = root_order(g, params, roots, seed)
    cands = generate_candidates(g, params, order, limit=limit, threads=threads)
    return select_disjoint(cands, k)


def coverage_curve(g: MetaGraph, params: SolveParams, k: int,
                   roots: str | RootRanking | Sequence[int], n_max: int, seed: int = 0) -> list[int]:
    """Coverage of the top-k selection after 1..n_max candidates along a root order."""
    order = root_order(g, params, roots, seed)
    cands = generate_candidates(g, params, order, limit=n_max)
    return [select_disjoint(cands[:n], k).coverage for n in range(1, len(cands) + 1)]
