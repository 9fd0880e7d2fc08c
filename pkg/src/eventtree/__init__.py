"""Event detection in interaction networks via budgeted maximum trees on a meta-graph."""

from eventtree.core_model import ContentVector, Interaction, MergePolicy, ingest, merge_similar
from eventtree.errors import EventTreeError, NotFoundError, ParseError, ValidationError
from eventtree.event_selection import EventSet, rank_roots, size_upper_bound, top_k_events
from eventtree.maxtree import ALGORITHMS, EventTree, SolveParams, maxtree_solve, tmaxtree
from eventtree.meta_graph import Edge, EdgeKind, MetaGraph, build, time_induced

__all__ = [
    "ALGORITHMS", "ContentVector", "Edge", "EdgeKind", "EventSet", "EventTree", "EventTreeError",
    "Interaction", "MergePolicy", "MetaGraph", "NotFoundError", "ParseError", "SolveParams",
    "ValidationError", "build", "ingest", "maxtree_solve", "merge_similar", "rank_roots",
    "size_upper_bound", "time_induced", "tmaxtree", "top_k_events",
]
