"""Command-line front end: ingest, build, detect, sweep, export, synth."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

from eventtree.core_model import (MergePolicy, attach_tfidf, load_sidecar, merge_similar, read_jsonl,
                                  tfidf_vectors, write_jsonl)
from eventtree.errors import EventTreeError
from eventtree.event_selection import SAMPLING, EventSet, top_k_events
from eventtree.maxtree import ALGORITHMS, EventTree, SolveParams
from eventtree.meta_graph import (MetaGraph, build, edge_to_dict, load_graph, save_graph, strip_singletons,
                                  to_dot)
from eventtree.synth_eval import SynthParams, dump_dataset, generate, run_sweep, write_sweep_csv

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3

_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400, "w": 7 * 86400}


class UsageError(Exception):
    pass


def parse_duration(text: str | int) -> int:
    """Seconds from ``"3600"``, ``"3600s"``, ``"30m"``, ``"2h"``, ``"1d"`` or ``"4w"``."""
    if isinstance(text, int):
        return text
    m = re.fullmatch(r"\s*(\d+)\s*([smhdw]?)\s*", str(text))
    if not m:
        raise UsageError(f"bad duration {text!r} (use e.g. 3600s, 1d, 4w)")
    return int(m.group(1)) * _UNITS[m.group(2) or "s"]


def parse_budget(text: str) -> float:
    try:
        b = float(text)
    except ValueError:
        raise UsageError(f"bad budget {text!r}") from None
    if not b >= 0:
        raise UsageError("budget must be >= 0")
    return b


def read_kv(path: str | Path) -> dict[str, str]:
    """Flat ``key = value`` (or ``key: value``) file; ``#`` starts a comment."""
    out = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"([A-Za-z_][\w-]*)\s*[=:]\s*(.*)", line)
            if not m:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value'")
            out[m.group(1).replace("-", "_")] = m.group(2).strip()
    return out


@dataclass
class DetectionConfig:
    budget: float = 1.0
    window: int = 86400
    top_k: int = 10
    algorithm: str = "greedy"
    sampling: str = "upperbound"
    root_limit: int = 100
    dp_decimals: int = 2
    seed: int = 0
    threads: int = 1
    merge: MergePolicy = field(default_factory=MergePolicy)

    def validate(self) -> None:
        if self.top_k < 1:
            raise UsageError("top-k must be >= 1")
        if not self.budget >= 0:
            raise UsageError("budget must be >= 0")
        if self.window < 0:
            raise UsageError("window must be >= 0")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algorithm!r}; valid: {', '.join(ALGORITHMS)}")
        if self.sampling not in SAMPLING:
            raise UsageError(f"unknown sampling {self.sampling!r}; valid: {', '.join(SAMPLING)}")
        if self.root_limit < 1:
            raise UsageError("root-limit must be >= 1")
        if not 0 <= self.dp_decimals <= 6:
            raise UsageError("dp-decimals must lie in [0, 6]")

    def solve_params(self) -> SolveParams:
        return SolveParams(self.budget, self.window, self.algorithm, self.dp_decimals, self.seed)

    def as_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("threads")
        d["merge"] = asdict(self.merge)
        return d


_CONFIG_PARSERS = {
    "budget": parse_budget,
    "window": parse_duration,
    "top_k": int,
    "algorithm": str,
    "sampling": str,
    "root_limit": int,
    "dp_decimals": int,
    "seed": int,
    "threads": int,
}


def load_config(path: str | Path | None, overrides: dict[str, Any]) -> DetectionConfig:
    cfg = DetectionConfig()
    values: dict[str, Any] = {}
    if path is not None:
        for key, raw in read_kv(path).items():
            if key not in _CONFIG_PARSERS:
                raise UsageError(f"{path}: unknown config key {key!r}")
            try:
                values[key] = _CONFIG_PARSERS[key](raw)
            except ValueError:
                raise UsageError(f"{path}: bad value for {key}: {raw!r}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = replace(cfg, **values)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# outputs


def _span_text(seconds: int) -> str:
    d, rem = divmod(seconds, 86400)
    h, rem = divmod(rem, 3600)
    m = rem // 60
    return f"{d}d {h}h {m}m"


def tree_to_dict(tree: EventTree, g: MetaGraph) -> dict[str, Any]:
    nodes = []
    for v in sorted(tree.nodes, key=g.position):
        m = g.interaction(v)
        nodes.append({"id": v, "timestamp": m.timestamp, "sender": m.sender})
    ts = [n["timestamp"] for n in nodes]
    return {
        "root": tree.root,
        "size": tree.size,
        "cost": tree.cost,
        "span": max(ts) - min(ts),
        "nodes": nodes,
        "edges": [edge_to_dict(g.edge(e.src, e.dst)) for e in tree.edges],
    }


def events_to_dict(es: EventSet, g: MetaGraph, cfg: DetectionConfig) -> dict[str, Any]:
    return {
        "params": cfg.as_dict(),
        "coverage": es.coverage,
        "shortfall": es.shortfall,
        "events": [tree_to_dict(t, g) for t in es.trees],
    }


def top_terms(tree: EventTree, g: MetaGraph, n: int = 5, _cache: dict | None = None) -> list[str]:
    msgs = [g.interaction(v) for v in tree.nodes]
    if any(m.content.tfidf is not None for m in msgs):
        vecs = [m.content.tfidf for m in msgs]
    elif any(m.text is not None for m in msgs):
        if _cache is not None and "tfidf" in _cache:
            lookup = _cache["tfidf"]
        else:
            allm = g.interactions()
            lookup = dict(zip((m.id for m in allm), tfidf_vectors([m.text for m in allm])))
            if _cache is not None:
                _cache["tfidf"] = lookup
        vecs = [lookup[m.id] for m in msgs]
    else:
        return []
    total: dict[str, float] = {}
    for vec in vecs:
        for term, w in (vec or {}).items():
            total[term] = total.get(term, 0.0) + w
    return [t for t, _ in sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))[:n]]


# ---------------------------------------------------------------------------
# commands


def _merge_policy(args: argparse.Namespace) -> MergePolicy:
    return MergePolicy(edit_ratio_max=args.edit_ratio, max_time_gap=parse_duration(args.max_gap))


def _load_msgs(args: argparse.Namespace):
    topic_dim = None
    vocab = None
    if getattr(args, "sidecar", None):
        meta = load_sidecar(args.sidecar)
        topic_dim = meta.get("topic_dim")
        vocab = meta.get("vocabulary")
    return read_jsonl(args.input, topic_dim=topic_dim), vocab


def cmd_ingest(args: argparse.Namespace) -> int:
    msgs, _ = _load_msgs(args)
    if args.merge:
        msgs = merge_similar(msgs, _merge_policy(args))
    write_jsonl(args.output, msgs)
    print(f"{len(msgs)} interactions")
    return EXIT_OK


def cmd_build(args: argparse.Namespace) -> int:
    msgs, vocab = _load_msgs(args)
    if not args.no_merge:
        msgs = merge_similar(msgs, _merge_policy(args))
    if args.tfidf:
        msgs = attach_tfidf(msgs, vocab)
    g = build(msgs, same_time_edges=args.same_time_edges, max_weight=args.max_weight)
    if not args.keep_singletons:
        g = strip_singletons(g)
    save_graph(g, args.output)
    print(f"{len(g)} vertices, {g.num_edges} edges")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, {
        "budget": parse_budget(args.budget) if args.budget is not None else None,
        "window": parse_duration(args.window) if args.window is not None else None,
        "top_k": args.top_k,
        "algorithm": args.algorithm,
        "sampling": args.sampling,
        "root_limit": args.root_limit,
        "dp_decimals": args.dp_decimals,
        "seed": args.seed,
        "threads": args.threads,
    })
    g = load_graph(args.graph)
    es = top_k_events(g, cfg.solve_params(), cfg.top_k, roots=cfg.sampling, seed=cfg.seed,
                      limit=cfg.root_limit, threads=cfg.threads)
    doc = events_to_dict(es, g, cfg)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    if args.dot_dir:
        out = Path(args.dot_dir)
        out.mkdir(parents=True, exist_ok=True)
        for i, t in enumerate(es.trees, start=1):
            (out / f"event_{i:03d}.dot").write_text(
                to_dot(g, t.nodes, t.edges, name=f"event_{i}"), encoding="utf-8")

    print(f"coverage: {es.coverage}/{len(g)} interactions in {len(es.trees)} events")
    if es.shortfall:
        print(f"shortfall: only {len(es.trees)} of {cfg.top_k} requested events found")
    cache: dict = {}
    for i, t in enumerate(es.trees, start=1):
        ts = [g.timestamp(v) for v in t.nodes]
        terms = top_terms(t, g, _cache=cache)
        line = f"event {i}: root={t.root} size={t.size} cost={t.cost:.6f} span={_span_text(max(ts) - min(ts))}"
        if terms:
            line += " terms=" + ",".join(terms)
        print(line)
    if not args.output:
        sys.stdout.write(text)
    return EXIT_OK


def _parse_grid(raw: str) -> list[float]:
    raw = raw.strip()
    if not raw:
        return []
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid range {raw!r} (use start:stop:step, inclusive)")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise UsageError("grid step must be > 0")
        out, k = [], 0
        while start + k * step <= stop + 1e-9:
            out.append(round(start + k * step, 9))
            k += 1
        return out
    return [float(x) for x in raw.split(",") if x.strip()]


_SWEEP_BASE_KEYS = {
    "n_events": int, "event_size": int, "noise_level": float, "n_participants": int,
    "topic_dim": int, "time_span": parse_duration, "event_spread": float, "noise_separation": float,
}


def parse_sweep_spec(path: str | Path) -> dict[str, Any]:
    kv = read_kv(path)
    axis = kv.pop("axis", "noise")
    if axis not in ("noise", "size"):
        raise UsageError(f"axis must be 'noise' or 'size', got {axis!r}")
    try:
        grid = _parse_grid(kv.pop("grid", ""))
    except ValueError:
        raise UsageError("grid must be numbers separated by commas or start:stop:step") from None
    if not grid:
        raise UsageError("sweep grid is empty")
    algs = [a.strip() for a in kv.pop("algorithms", "greedy,random").split(",") if a.strip()]
    bad = [a for a in algs if a not in ALGORITHMS]
    if bad or not algs:
        raise UsageError(f"unknown algorithm(s) {', '.join(bad) or '(none)'}; valid: {', '.join(ALGORITHMS)}")
    spec: dict[str, Any] = {"axis": axis, "grid": grid, "algorithms": algs}
    try:
        spec["repetitions"] = int(kv.pop("repetitions", "10"))
        spec["seed"] = int(kv.pop("seed", "0"))
        spec["dp_decimals"] = int(kv.pop("dp_decimals", "2"))
        timing = kv.pop("timing", "true").lower()
        spec["timing"] = timing in ("1", "true", "yes", "on")
        base = {}
        for key in list(kv):
            if key in _SWEEP_BASE_KEYS:
                base[key] = _SWEEP_BASE_KEYS[key](kv.pop(key))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if kv:
        raise UsageError(f"{path}: unknown sweep key(s) {', '.join(sorted(kv))}")
    if axis == "size":
        base.setdefault("noise_level", 20.0)
    spec["base"] = SynthParams(**base)
    return spec


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = parse_sweep_spec(args.spec)
    if args.no_timing:
        spec["timing"] = False
    rows = run_sweep(spec["axis"], spec["grid"], spec["algorithms"], spec["repetitions"], spec["seed"],
                     spec["base"], timing=spec["timing"], dp_decimals=spec["dp_decimals"])
    write_sweep_csv(rows, args.output)
    print(f"{len(rows)} rows written to {args.output}")
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    g = load_graph(args.graph)
    if args.events:
        doc = json.loads(Path(args.events).read_text(encoding="utf-8"))
        parts = []
        for i, ev in enumerate(doc.get("events", []), start=1):
            edges = [g.edge(e["src"], e["dst"]) for e in ev["edges"]]
            verts = [n["id"] for n in ev["nodes"]]
            parts.append(to_dot(g, verts, edges, name=f"event_{i}"))
        text = "".join(parts)
    elif args.format == "json":
        from eventtree.meta_graph import graph_to_dict
        text = json.dumps(graph_to_dict(g), sort_keys=True, indent=2) + "\n"
    else:
        text = to_dot(g)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    params = SynthParams(n_events=args.n_events, event_size=args.event_size, noise_level=args.noise_level,
                         n_participants=args.n_participants, seed=args.seed)
    msgs, truth = generate(params)
    side = dump_dataset(msgs, truth, args.output)
    print(f"{len(msgs)} interactions ({len(truth.event_ids)} planted) -> {args.output}, truth -> {side}")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_merge_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--edit-ratio", type=float, default=0.10, help="merge when edit-distance ratio is below this")
    p.add_argument("--max-gap", default="1d", help="merge only within this time gap (e.g. 1d, 3600s)")
    p.add_argument("--sidecar", help="dataset sidecar JSON declaring topic_dim / vocabulary")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="eventtree", description="Detect temporal events in interaction networks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and normalise an interaction log")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--merge", action="store_true", help="merge near-duplicate messages")
    _add_merge_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="build the interaction meta-graph")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--no-merge", action="store_true", help="skip near-duplicate merging")
    p.add_argument("--tfidf", action="store_true", help="add tf-idf vectors computed from message text")
    p.add_argument("--same-time-edges", action="store_true", help="also link equal timestamps in id order")
    p.add_argument("--max-weight", type=float, default=None, help="drop edges heavier than this")
    p.add_argument("--keep-singletons", action="store_true")
    _add_merge_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("detect", help="find the top-k events in a meta-graph")
    p.add_argument("graph")
    p.add_argument("-o", "--output", help="EventSet JSON (default: stdout)")
    p.add_argument("--dot-dir", help="write one DOT file per event here")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--budget")
    p.add_argument("--window", help="time budget, e.g. 1d or 4w")
    p.add_argument("--top-k", type=int)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--sampling", choices=SAMPLING)
    p.add_argument("--root-limit", type=int)
    p.add_argument("--dp-decimals", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="run a synthetic evaluation sweep")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--no-timing", action="store_true", help="report runtime as 0 for reproducible output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="export a meta-graph or detected events")
    p.add_argument("graph")
    p.add_argument("--events", help="EventSet JSON; exports its trees as DOT")
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("synth", help="write a synthetic dataset with ground truth")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--n-events", type=int, default=1)
    p.add_argument("--event-size", type=int, default=20)
    p.add_argument("--noise-level", type=float, default=0.0)
    p.add_argument("--n-participants", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"eventtree: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EventTreeError as exc:
        print(f"eventtree: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"eventtree: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
