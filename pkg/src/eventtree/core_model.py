"""Interactions, content vectors, log ingestion, message merging and content dissimilarity."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from rapidfuzz.distance import Levenshtein

from eventtree.errors import ParseError, ValidationError

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class ContentVector:
    """Content annotation of one interaction.

    Every component is optional. ``tfidf`` maps terms to non-negative weights.
    """

    topic: tuple[float, ...] | None = None
    tfidf: Mapping[str, float] | None = None
    hashtags: frozenset[str] = frozenset()
    raw_text: str | None = None

    def is_empty(self) -> bool:
        return self.topic is None and self.tfidf is None and not self.hashtags


@dataclass(frozen=True)
class Interaction:
    id: int
    sender: str
    recipients: frozenset[str]
    timestamp: int
    content: ContentVector = field(default_factory=ContentVector)

    def __post_init__(self) -> None:
        if not self.recipients:
            raise ValidationError(f"interaction {self.id}: recipients must be non-empty")
        if self.id < 0:
            raise ValidationError(f"interaction id must be non-negative, got {self.id}")

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.timestamp, self.id)

    @property
    def text(self) -> str | None:
        return self.content.raw_text


@dataclass(frozen=True)
class MergePolicy:
    edit_ratio_max: float = 0.10
    max_time_gap: int = 86400

    def __post_init__(self) -> None:
        if not 0.0 <= self.edit_ratio_max <= 1.0:
            raise ValidationError("edit_ratio_max must lie in [0, 1]")
        if self.max_time_gap < 0:
            raise ValidationError("max_time_gap must be >= 0")


# ---------------------------------------------------------------------------
# ingestion / serialization


def _require(cond: bool, msg: str, line: int | None) -> None:
    if not cond:
        raise ParseError(msg, line=line)


def _parse_record(rec: Any, line: int | None) -> dict:
    _require(isinstance(rec, dict), "record must be a JSON object", line)
    for key in ("sender", "recipients", "timestamp"):
        _require(key in rec, f"missing field {key!r}", line)
    sender = rec["sender"]
    _require(isinstance(sender, str) and sender != "", "sender must be a non-empty string", line)
    recipients = rec["recipients"]
    if isinstance(recipients, str):
        recipients = [recipients]
    _require(isinstance(recipients, list), "recipients must be a list of strings", line)
    _require(len(recipients) > 0, "recipients must be non-empty", line)
    _require(all(isinstance(x, str) and x for x in recipients), "recipients must be strings", line)
    ts = rec["timestamp"]
    if isinstance(ts, float) and ts.is_integer():
        ts = int(ts)
    _require(isinstance(ts, int) and not isinstance(ts, bool), "timestamp must be an integer", line)

    rid = rec.get("id")
    if rid is not None:
        _require(isinstance(rid, int) and not isinstance(rid, bool) and rid >= 0,
                 "id must be a non-negative integer", line)

    topic = rec.get("topic")
    if topic is not None:
        _require(isinstance(topic, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                                  for x in topic),
                 "topic must be a list of numbers", line)
        topic = tuple(float(x) for x in topic)
    tfidf = rec.get("tfidf")
    if tfidf is not None:
        _require(isinstance(tfidf, dict) and all(isinstance(v, (int, float)) and v >= 0 for v in tfidf.values()),
                 "tfidf must map terms to non-negative numbers", line)
        tfidf = {str(k): float(v) for k, v in tfidf.items()}
    hashtags = rec.get("hashtags") or []
    _require(isinstance(hashtags, list) and all(isinstance(h, str) for h in hashtags),
             "hashtags must be a list of strings", line)
    text = rec.get("text")
    _require(text is None or isinstance(text, str), "text must be a string", line)

    return {
        "id": rid,
        "sender": sender,
        "recipients": frozenset(recipients),
        "timestamp": ts,
        "content": ContentVector(topic=topic, tfidf=tfidf, hashtags=frozenset(hashtags), raw_text=text),
        "line": line,
    }


def ingest(stream: Iterable[str | Mapping[str, Any]], topic_dim: int | None = None) -> list[Interaction]:
    """Parse interaction records (JSON-lines strings or dicts).

    Blank lines are skipped. Ids are taken from the records; when no record
    carries one, ids ``0..n-1`` are assigned in input order. Output is sorted
    by ``(timestamp, id)``.
    """
    parsed = []
    for lineno, item in enumerate(stream, start=1):
        if isinstance(item, str):
            if not item.strip():
                continue
            try:
                rec = json.loads(item)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
        else:
            rec = item
        parsed.append(_parse_record(rec, lineno))

    with_id = [p for p in parsed if p["id"] is not None]
    if with_id and len(with_id) != len(parsed):
        first = next(p for p in parsed if p["id"] is None)
        raise ParseError("either every record or no record must carry an id", line=first["line"])
    if not with_id:
        for i, p in enumerate(parsed):
            p["id"] = i
    seen: dict[int, int] = {}
    for p in parsed:
        if p["id"] in seen:
            raise ValidationError(f"line {p['line']}: duplicate id {p['id']} (first seen on line {seen[p['id']]})")
        seen[p["id"]] = p["line"]

    out = []
    for p in parsed:
        topic = p["content"].topic
        if topic is not None and topic_dim is not None and len(topic) != topic_dim:
            raise ValidationError(f"line {p['line']}: topic has length {len(topic)}, expected {topic_dim}")
        out.append(Interaction(p["id"], p["sender"], p["recipients"], p["timestamp"], p["content"]))
    lengths = {len(x.content.topic) for x in out if x.content.topic is not None}
    if len(lengths) > 1:
        raise ValidationError(f"topic vectors have inconsistent lengths {sorted(lengths)}")
    out.sort(key=lambda x: x.order_key)
    return out


def serialize(msg: Interaction) -> dict[str, Any]:
    """Inverse of ingest for one interaction; optional fields are omitted when absent."""
    rec: dict[str, Any] = {
        "id": msg.id,
        "sender": msg.sender,
        "recipients": sorted(msg.recipients),
        "timestamp": msg.timestamp,
    }
    c = msg.content
    if c.raw_text is not None:
        rec["text"] = c.raw_text
    if c.topic is not None:
        rec["topic"] = list(c.topic)
    if c.hashtags:
        rec["hashtags"] = sorted(c.hashtags)
    if c.tfidf is not None:
        rec["tfidf"] = {k: c.tfidf[k] for k in sorted(c.tfidf)}
    return rec


def read_jsonl(path: str | Path, topic_dim: int | None = None) -> list[Interaction]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        try:
            return ingest(fh, topic_dim=topic_dim)
        except ParseError as exc:
            raise ParseError(exc.message, line=exc.line, path=str(path)) from None


def write_jsonl(path: str | Path, msgs: Iterable[Interaction]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for m in msgs:
            fh.write(json.dumps(serialize(m), sort_keys=True) + "\n")


def load_sidecar(path: str | Path) -> dict[str, Any]:
    """Dataset-level metadata: optional ``topic_dim`` (int) and ``vocabulary`` (list of terms)."""
    with Path(path).open("r", encoding="utf-8") as fh:
        meta = json.load(fh)
    if not isinstance(meta, dict):
        raise ValidationError(f"{path}: sidecar must be a JSON object")
    dim = meta.get("topic_dim")
    if dim is not None and (not isinstance(dim, int) or dim < 1):
        raise ValidationError(f"{path}: topic_dim must be a positive integer")
    vocab = meta.get("vocabulary")
    if vocab is not None and not (isinstance(vocab, list) and all(isinstance(t, str) for t in vocab)):
        raise ValidationError(f"{path}: vocabulary must be a list of strings")
    return meta


# ---------------------------------------------------------------------------
# merging near-duplicates


def edit_distance_ratio(a: str, b: str) -> float:
    """Levenshtein distance normalised by the longer string's length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return Levenshtein.distance(a, b) / longest


def merge_similar(msgs: Sequence[Interaction], policy: MergePolicy = MergePolicy()) -> list[Interaction]:
    """Collapse repeated messages of one sender into the earliest copy.

    A message joins the earliest open group of its sender whose first message
    is within ``policy.max_time_gap`` seconds and has an edit-distance ratio
    strictly below ``policy.edit_ratio_max``. Messages without text never merge.
    """
    ordered = sorted(msgs, key=lambda m: m.order_key)
    groups_by_sender: dict[str, list[list[Interaction]]] = {}
    all_groups: list[list[Interaction]] = []
    for m in ordered:
        groups = groups_by_sender.setdefault(m.sender, [])
        target = None
        if m.text is not None:
            for g in groups:
                rep = g[0]
                if rep.text is None or m.timestamp - rep.timestamp > policy.max_time_gap:
                    continue
                if edit_distance_ratio(rep.text, m.text) < policy.edit_ratio_max:
                    target = g
                    break
        if target is None:
            target = []
            groups.append(target)
            all_groups.append(target)
        target.append(m)

    merged = []
    for g in all_groups:
        rep = g[0]
        if len(g) > 1:
            recipients = frozenset().union(*(x.recipients for x in g))
            rep = replace(rep, recipients=recipients)
        merged.append(rep)
    merged.sort(key=lambda m: m.order_key)
    return merged


# ---------------------------------------------------------------------------
# tf-idf


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def tfidf_vectors(texts: Sequence[str | None], vocabulary: Iterable[str] | None = None) -> list[dict[str, float] | None]:
    """Smoothed tf-idf (``idf = ln((1+n)/(1+df)) + 1``), L2-normalised per document.

    ``None`` texts stay ``None``; a vocabulary restricts the retained terms.
    """
    vocab = set(vocabulary) if vocabulary is not None else None
    counts: list[Counter | None] = []
    df: Counter = Counter()
    for t in texts:
        if t is None:
            counts.append(None)
            continue
        toks = tokenize(t)
        if vocab is not None:
            toks = [w for w in toks if w in vocab]
        c = Counter(toks)
        counts.append(c)
        df.update(c.keys())
    n_docs = sum(c is not None for c in counts)
    out: list[dict[str, float] | None] = []
    for c in counts:
        if c is None:
            out.append(None)
            continue
        vec = {w: tf * (math.log((1 + n_docs) / (1 + df[w])) + 1.0) for w, tf in c.items()}
        norm = math.sqrt(sum(v * v for v in vec.values()))
        if norm > 0:
            vec = {w: v / norm for w, v in vec.items()}
        out.append(vec)
    return out


def attach_tfidf(msgs: Sequence[Interaction], vocabulary: Iterable[str] | None = None) -> list[Interaction]:
    """Return copies of ``msgs`` whose content carries tf-idf vectors computed from their text."""
    vecs = tfidf_vectors([m.text for m in msgs], vocabulary)
    return [m if v is None else replace(m, content=replace(m.content, tfidf=v)) for m, v in zip(msgs, vecs)]


# ---------------------------------------------------------------------------
# dissimilarity


def cosine_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """1 - cos(a, b), clamped to [0, 1]; 1 when either vector has zero norm."""
    if len(a) != len(b):
        raise ValidationError(f"topic dimensions differ: {len(a)} vs {len(b)}")
    dot = na = nb = 0.0
    for x, y in zip(a, b):
        dot += x * y
        na += x * x
        nb += y * y
    den = math.sqrt(na) * math.sqrt(nb)
    if den == 0.0:
        return 1.0
    d = 1.0 - dot / den
    if d < 1e-12:
        return 0.0
    return min(d, 1.0)


def sparse_cosine_distance(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if len(a) > len(b):
        a, b = b, a
    dot = sum(v * b[k] for k, v in a.items() if k in b)
    na = sum(v * v for v in a.values())
    nb = sum(v * v for v in b.values())
    den = math.sqrt(na) * math.sqrt(nb)
    if den == 0.0:
        return 1.0
    d = 1.0 - dot / den
    if d < 1e-12:
        return 0.0
    return min(d, 1.0)


def jaccard_distance(a: frozenset[str] | set[str], b: frozenset[str] | set[str]) -> float:
    union = len(a | b)
    if union == 0:
        return 0.0
    return 1.0 - len(a & b) / union


def dissimilarity(a: ContentVector, b: ContentVector) -> float:
    """Sum of topic cosine, tf-idf cosine and hashtag Jaccard distances.

    A component contributes only when present on both sides, so the result
    lies in [0, 3].
    """
    total = 0.0
    if a.topic is not None and b.topic is not None:
        total += cosine_distance(a.topic, b.topic)
    if a.tfidf is not None and b.tfidf is not None:
        total += sparse_cosine_distance(a.tfidf, b.tfidf)
    if a.hashtags and b.hashtags:
        total += jaccard_distance(a.hashtags, b.hashtags)
    return total
