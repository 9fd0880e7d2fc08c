"""Synthetic interaction networks with planted event trees, and detection scoring."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from eventtree.core_model import ContentVector, Interaction, dissimilarity, write_jsonl
from eventtree.errors import ValidationError
from eventtree.maxtree import ALGORITHMS, EventTree, SolveParams, tmaxtree
from eventtree.meta_graph import build

EPOCH = 1_400_000_000
DAY = 86400


@dataclass(frozen=True)
class SynthParams:
    n_events: int = 1
    event_size: int = 20
    noise_level: float = 0.0
    n_participants: int = 20
    topic_dim: int = 10
    time_span: int = 30 * DAY
    seed: int = 0
    # weight of the per-interaction perturbation mixed into an event's topic centroid
    event_spread: float = 0.3
    # noise must be at least this many times the per-edge bound away from event content
    noise_separation: float = 3.0

    def __post_init__(self) -> None:
        if self.event_size < 1:
            raise ValidationError("event_size must be >= 1")
        if self.noise_level < 0:
            raise ValidationError("noise_level must be >= 0")
        if self.n_events < 0:
            raise ValidationError("n_events must be >= 0")
        if self.n_participants < 4:
            raise ValidationError("n_participants must be >= 4")


@dataclass(frozen=True)
class PlantedEvent:
    root: int
    interactions: tuple[Interaction, ...]
    edges: tuple[tuple[int, int], ...]
    budget: float
    window: int

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(m.id for m in self.interactions)


@dataclass(frozen=True)
class GroundTruth:
    events: tuple[PlantedEvent, ...]
    noise_ids: frozenset[int] = frozenset()

    @property
    def event_ids(self) -> frozenset[int]:
        return frozenset().union(*(e.ids for e in self.events))

    def to_dict(self) -> dict:
        return {
            "events": [
                {"root": e.root, "ids": sorted(e.ids), "edges": [list(p) for p in e.edges],
                 "budget": e.budget, "window": e.window}
                for e in self.events
            ],
            "noise_ids": sorted(self.noise_ids),
        }


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    objective: int = 0
    runtime: float = 0.0


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _participants(n: int) -> list[str]:
    return [f"p{i}" for i in range(n)]


def _pick(rng: np.random.Generator, pool: Sequence[str], exclude: Iterable[str] = (), k: int = 1) -> list[str]:
    ex = set(exclude)
    cands = [p for p in pool if p not in ex]
    k = min(k, len(cands))
    idx = rng.choice(len(cands), size=k, replace=False)
    return [cands[i] for i in sorted(idx)]


def _topic(vec: np.ndarray) -> tuple[float, ...]:
    return tuple(float(x) for x in vec)


def gen_event_tree(size: int, seed: int | np.random.Generator = 0, *, first_id: int = 0,
                   start: int = EPOCH, n_participants: int = 20, topic_dim: int = 10,
                   time_span: int = 30 * DAY, spread: float = 0.3) -> PlantedEvent:
    """Plant one event as a uniform random recursive tree of ``size`` interactions.

    Each child is linked to its parent by a broadcast, relay or reply (chosen
    uniformly), so the parent-child pair always yields a meta-graph edge.
    Topics are a shared centroid plus a small perturbation; the returned
    budget is ``(size - 1)`` times the largest pairwise dissimilarity inside
    the event, so any spanning tree of the event fits it.
    """
    if size < 1:
        raise ValidationError("size must be >= 1")
    rng = _rng(seed)
    people = _participants(n_participants)
    centroid = rng.dirichlet(np.full(topic_dim, 0.3))
    step = max(1, time_span // size)

    senders: list[str] = []
    recips: list[list[str]] = []
    times: list[int] = []
    parents: list[int] = []
    for i in range(size):
        if i == 0:
            s = _pick(rng, people)[0]
            r = _pick(rng, people, [s], int(rng.integers(1, 4)))
            t = start
        else:
            p = int(rng.integers(0, i))
            parents.append(p)
            kind = int(rng.integers(0, 3))
            if kind == 0:  # broadcast
                s = senders[p]
                r = _pick(rng, people, [s], int(rng.integers(1, 4)))
            elif kind == 1:  # relay
                s = _pick(rng, recips[p])[0]
                r = _pick(rng, people, [s, senders[p]], int(rng.integers(1, 4)))
            else:  # reply
                s = _pick(rng, recips[p])[0]
                r = sorted({senders[p], *_pick(rng, people, [s, senders[p]], int(rng.integers(0, 3)))})
            t = times[p] + int(rng.integers(1, step + 1))
        senders.append(s)
        recips.append(r)
        times.append(t)

    topics = (1.0 - spread) * centroid + spread * rng.dirichlet(np.ones(topic_dim), size=size)
    msgs = tuple(
        Interaction(first_id + i, senders[i], frozenset(recips[i]), times[i],
                    ContentVector(topic=_topic(topics[i])))
        for i in range(size)
    )
    worst = 0.0
    for a in range(size):
        for b in range(a + 1, size):
            worst = max(worst, dissimilarity(msgs[a].content, msgs[b].content))
    edges = tuple((first_id + p, first_id + i + 1) for i, p in enumerate(parents))
    return PlantedEvent(
        root=first_id,
        interactions=msgs,
        edges=edges,
        budget=(size - 1) * worst,
        window=max(times) - times[0],
    )


def _cos_dist_rows(x: np.ndarray, rows: np.ndarray) -> np.ndarray:
    num = rows @ x
    den = np.linalg.norm(rows, axis=1) * np.linalg.norm(x)
    return np.clip(1.0 - num / den, 0.0, 1.0)


def inject_noise(truth: GroundTruth, noise_level: float, seed: int | np.random.Generator = 0, *,
                 n_participants: int = 20, topic_dim: int = 10, time_span: int = 30 * DAY,
                 start: int = EPOCH, separation: float = 3.0) -> list[Interaction]:
    """Add ``ceil(noise_level * |event interactions|)`` random interactions.

    Noise has uniformly random participants and timestamps over the span, and
    topics at least ``separation`` times each event's per-edge bound away
    from that event's interactions. Returns events plus noise, shuffled.
    """
    if noise_level < 0:
        raise ValidationError("noise_level must be >= 0")
    rng = _rng(seed)
    people = _participants(n_participants)
    event_msgs = [m for e in truth.events for m in e.interactions]
    n_noise = math.ceil(noise_level * len(event_msgs) - 1e-9)
    next_id = max((m.id for m in event_msgs), default=-1) + 1

    guards = []
    for e in truth.events:
        n = len(e.interactions)
        if n > 1 and e.budget > 0:
            rows = np.array([m.content.topic for m in e.interactions])
            guards.append((rows, separation * e.budget / (n - 1)))

    noise = []
    for k in range(n_noise):
        for attempt in range(10_000):
            # fall back to peaked topic mixtures when uniform draws keep landing too close
            alpha = 1.0 if attempt < 200 else 0.1
            vec = rng.dirichlet(np.full(topic_dim, alpha))
            if all(_cos_dist_rows(vec, rows).min() >= bound for rows, bound in guards):
                break
        else:
            raise ValidationError("could not sample a noise topic far enough from the events")
        s = _pick(rng, people)[0]
        r = _pick(rng, people, [s], int(rng.integers(1, 4)))
        t = start + int(rng.integers(0, time_span + 1))
        noise.append(Interaction(next_id + k, s, frozenset(r), t, ContentVector(topic=_topic(vec))))

    out = event_msgs + noise
    perm = rng.permutation(len(out))
    return [out[i] for i in perm]


def generate(params: SynthParams) -> tuple[list[Interaction], GroundTruth]:
    """Planted events plus noise for one synthetic dataset."""
    rng = np.random.default_rng(params.seed)
    events = []
    next_id = 0
    for _ in range(params.n_events):
        offset = int(rng.integers(0, max(1, params.time_span // 2)))
        ev = gen_event_tree(params.event_size, rng, first_id=next_id, start=EPOCH + offset,
                            n_participants=params.n_participants, topic_dim=params.topic_dim,
                            time_span=params.time_span // 2, spread=params.event_spread)
        events.append(ev)
        next_id += params.event_size
    partial = GroundTruth(tuple(events))
    msgs = inject_noise(partial, params.noise_level, rng, n_participants=params.n_participants,
                        topic_dim=params.topic_dim, time_span=params.time_span,
                        separation=params.noise_separation)
    noise_ids = frozenset(m.id for m in msgs) - partial.event_ids
    return msgs, GroundTruth(tuple(events), noise_ids)


def score(found: Iterable[int] | EventTree, truth: Iterable[int] | GroundTruth) -> EvalReport:
    """Precision/recall/F1 of found interaction ids against the planted ones.

    An empty detection has precision 1 by convention.
    """
    if isinstance(found, EventTree):
        found_ids = set(found.nodes)
    elif hasattr(found, "covered"):
        found_ids = set(found.covered)
    else:
        found_ids = set(found)
    true_ids = set(truth.event_ids) if isinstance(truth, GroundTruth) else set(truth)
    hit = len(found_ids & true_ids)
    precision = hit / len(found_ids) if found_ids else 1.0
    recall = hit / len(true_ids) if true_ids else 1.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(precision, recall, f1, objective=len(found_ids))


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    algorithm: str
    precision: float
    recall: float
    f1: float
    objective: float
    runtime_s: float
    repetitions: int


SWEEP_COLUMNS = ("axis_value", "algorithm", "precision", "recall", "f1", "objective", "runtime_s", "repetitions")


def detect_planted(msgs: Sequence[Interaction], truth: GroundTruth, algorithm: str,
                   seed: int = 0, dp_decimals: int = 2) -> EvalReport:
    """Solve at every planted root with its true (B, I) and score the union of trees."""
    g = build(msgs)
    found: set[int] = set()
    t0 = time.perf_counter()
    for ev in truth.events:
        params = SolveParams(ev.budget, ev.window, algorithm, dp_decimals, seed)
        found |= tmaxtree(g, ev.root, params).nodes
    elapsed = time.perf_counter() - t0
    rep = score(found, truth)
    return replace(rep, runtime=elapsed)


def run_sweep(axis: str, grid: Sequence[float], algorithms: Sequence[str] = ("greedy", "random"),
              repetitions: int = 10, seed: int = 0, base: SynthParams = SynthParams(),
              timing: bool = True, dp_decimals: int = 2) -> list[SweepRow]:
    """Mean scores per (grid value, algorithm) over seeded repetitions.

    ``axis`` is ``"noise"`` (grid of noise levels) or ``"size"`` (grid of event
    sizes). Repetition ``i`` uses seed ``seed + i`` for both generation and the
    random baseline. With ``timing=False`` runtimes are reported as 0 so the
    table is byte-reproducible.
    """
    if axis not in ("noise", "size"):
        raise ValidationError(f"axis must be 'noise' or 'size', got {axis!r}")
    if not grid:
        raise ValidationError("grid must be non-empty")
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        raise ValidationError(f"unknown algorithm(s) {bad}; choose from {', '.join(ALGORITHMS)}")

    rows = []
    for value in grid:
        if axis == "noise":
            point = replace(base, noise_level=float(value))
        else:
            point = replace(base, event_size=int(value))
        acc = {a: [] for a in algorithms}
        for rep in range(repetitions):
            msgs, truth = generate(replace(point, seed=seed + rep))
            for a in algorithms:
                acc[a].append(detect_planted(msgs, truth, a, seed + rep, dp_decimals))
        for a in algorithms:
            reps = acc[a]
            rows.append(SweepRow(
                axis_value=value,
                algorithm=a,
                precision=float(np.mean([r.precision for r in reps])),
                recall=float(np.mean([r.recall for r in reps])),
                f1=float(np.mean([r.f1 for r in reps])),
                objective=float(np.mean([r.objective for r in reps])),
                runtime_s=float(np.mean([r.runtime for r in reps])) if timing else 0.0,
                repetitions=repetitions,
            ))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([f"{d[c]:.6f}" if isinstance(d[c], float) and c != "axis_value" else d[c]
                        for c in SWEEP_COLUMNS])


def dump_dataset(msgs: Sequence[Interaction], truth: GroundTruth, path: str | Path) -> Path:
    """Write the interactions as JSON lines and the ground truth to ``<path>.truth.json``."""
    path = Path(path)
    write_jsonl(path, sorted(msgs, key=lambda m: m.order_key))
    side = path.with_name(path.name + ".truth.json")
    side.write_text(json.dumps(truth.to_dict(), sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return side
