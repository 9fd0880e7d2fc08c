from __future__ import annotations

import itertools
import math
import random
from pathlib import Path

import pytest

from eventtree.core_model import read_jsonl
from eventtree.maxtree import fits
from eventtree.meta_graph import MetaGraph, build

FIXTURES = Path(__file__).parent / "fixtures"
FIG1 = FIXTURES / "fig1.jsonl"
DAY = 86400
WEEK = 7 * DAY


@pytest.fixture
def fig1_msgs():
    return read_jsonl(FIG1)


@pytest.fixture
def fig1_graph(fig1_msgs):
    return build(fig1_msgs)


def random_dag(rng: random.Random, n: int, p: float, decimals: int | None = None,
               tree: bool = False, connected: bool = False) -> MetaGraph:
    """Random DAG on 0..n-1 (edges go from lower to higher id).

    ``connected`` gives every vertex at least one in-edge, so all of them are
    reachable from 0; ``tree`` gives each exactly one.
    """
    edges = []
    for v in range(1, n):
        if tree:
            srcs = [rng.randrange(v)]
        else:
            srcs = [u for u in range(v) if rng.random() < p]
            if connected and not srcs:
                srcs = [rng.randrange(v)]
        for u in srcs:
            w = rng.random() if decimals is None else round(rng.randint(0, 10 ** decimals) / 10 ** decimals, decimals)
            edges.append((u, v, w))
    return MetaGraph.from_weighted_edges(n, edges)


def exhaustive_max_tree(g: MetaGraph, r: int, budget: float) -> int:
    """Largest vertex set containing r whose cheapest spanning arborescence fits the budget.

    Independent of the library: enumerates subsets of the reachable set by
    decreasing size, and for each picks the cheapest in-edge from inside the
    set for every non-root vertex (optimal on a DAG).
    """
    reach = sorted(g.reachable(r) - {r})
    for size in range(len(reach), -1, -1):
        for combo in itertools.combinations(reach, size):
            members = {r, *combo}
            picked = []
            ok = True
            for v in combo:
                ws = [e.weight for e in g.in_edges(v) if e.src in members]
                if not ws:
                    ok = False
                    break
                picked.append(min(ws))
            if ok and fits(math.fsum(picked), budget):
                return size + 1
    return 1


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
