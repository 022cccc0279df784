"""Failure correlation graphs: indexed DAGs built from mined rules.

A 2-ary rule (A, B) becomes two dominant vertices and a dominant edge
A -> B carrying the rule's counts. A k-ary rule (X1..Xk) with k > 2 gets a
recessive vertex for its preceding chain X1^..^Xk-1 (shared across rules
with the same chain), membership edges from each constituent carrying the
chain position, and a recessive edge from the chain vertex to Xk carrying
the rule's counts.

Edges are inserted in descending (support, confidence, tsl) order; an
insertion that would close a directed cycle is skipped and reported, so
every emitted graph is a DAG. Each weakly connected component becomes its
own FCG, local ones scoped to a node, distributed ones unscoped.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Mapping, Sequence

from .events import Event, IdRegistry
from .mining import RuleKind, RuleStats


class VertexKind(Enum):
    DOMINANT = "DOMINANT"
    RECESSIVE = "RECESSIVE"


class EdgeKind(Enum):
    DOMINANT = "DOMINANT"
    RECESSIVE = "RECESSIVE"


@dataclass
class Vertex:
    vertex_id: int
    kind: VertexKind
    log_id: int | None = None          # dominant only
    node_id: int | None = None
    event_id: int | None = None
    support: int = 0                   # occurrence count, dominant only
    chain: tuple[int, ...] = ()        # recessive only: ordered constituents
    children: list[int] = field(default_factory=list)


@dataclass
class Edge:
    """Rule edges carry the full rule counts (confidence and posterior
    derive from them bit-exactly); membership edges carry the chain
    position instead."""

    edge_id: int
    tail: int
    head: int
    kind: EdgeKind
    support_count: int = 0
    posterior_count: int = 0
    preceding_occurrences: int = 0
    posterior_event_occurrences: int = 0
    order: int | None = None           # membership edges only

    @property
    def is_membership(self) -> bool:
        return self.order is not None

    @property
    def confidence(self) -> float:
        if self.preceding_occurrences == 0:
            return 0.0
        return self.support_count / self.preceding_occurrences

    @property
    def posterior(self) -> float:
        if self.posterior_event_occurrences == 0:
            return 0.0
        return self.posterior_count / self.posterior_event_occurrences


@dataclass(frozen=True)
class FCGScope:
    kind: RuleKind
    node_id: int | None = None

    def label(self) -> str:
        if self.kind is RuleKind.LOCAL:
            return f"LOCAL:{self.node_id}"
        return "DISTRIBUTED"


@dataclass
class FCG:
    fcg_id: int
    scope: FCGScope
    entrance: int
    vertices: dict[int, Vertex]
    edges: dict[int, Edge]


# log_id -> [(fcg_id, vertex_id)]
FCGIndex = dict[int, list[tuple[int, int]]]


@dataclass(frozen=True)
class SkippedRule:
    scope: str
    tsl: tuple[int, ...]
    reason: str


@dataclass
class FCGBuild:
    fcgs: list[FCG]
    index: FCGIndex
    skipped: list[SkippedRule]


def lookup(index: FCGIndex, log_id: int) -> list[tuple[int, int]]:
    """All (fcg_id, vertex_id) positions of a log id's dominant vertices."""
    return list(index.get(log_id, ()))


class _ScopeGraph:
    """Mutable graph for one scope while rules are being inserted."""

    def __init__(self, scope: FCGScope, id_alloc):
        self.scope = scope
        self._alloc = id_alloc
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self.dominant_by_log: dict[int, int] = {}
        self.recessive_by_chain: dict[tuple[int, ...], int] = {}
        self.successors: dict[int, set[int]] = {}
        self.edge_pairs: set[tuple[int, int]] = set()

    def _acyclic_with(self, extra: list[tuple[int, int]]) -> bool:
        ts = TopologicalSorter()
        for vid in self.vertices:
            ts.add(vid)
        for tail, heads in self.successors.items():
            for head in heads:
                ts.add(head, tail)
        for tail, head in extra:
            ts.add(head, tail)
        try:
            ts.prepare()
        except CycleError:
            return False
        return True

    def dominant(self, log_id: int, attrs, occurrences) -> int:
        vid = self.dominant_by_log.get(log_id)
        if vid is None:
            vid = self._alloc()
            node_id, event_id = attrs.get(log_id, (None, None))
            self.vertices[vid] = Vertex(
                vertex_id=vid,
                kind=VertexKind.DOMINANT,
                log_id=log_id,
                node_id=node_id,
                event_id=event_id,
                support=occurrences.get(log_id, 0),
            )
            self.dominant_by_log[log_id] = vid
        return vid

    def recessive(self, chain: tuple[int, ...]) -> tuple[int, bool]:
        vid = self.recessive_by_chain.get(chain)
        if vid is None:
            return self._alloc(), True
        return vid, False

    def commit_edge(self, edge: Edge) -> None:
        self.edges[edge.edge_id] = edge
        self.successors.setdefault(edge.tail, set()).add(edge.head)
        self.edge_pairs.add((edge.tail, edge.head))


def build_fcgs(
    rules: Iterable[RuleStats],
    *,
    log_attributes: Mapping[int, tuple[int, int]] | None = None,
    occurrences: Mapping[int, int] | None = None,
    registry: IdRegistry | None = None,
) -> FCGBuild:
    """Construct FCGs and their index from deduplicated rules.

    ``log_attributes`` maps log_id -> (node_id, event_id) for vertex
    attributes and local-scope grouping; it may be given directly or
    derived from a registry. ``occurrences`` supplies the dominant-vertex
    occurrence support when known.
    """
    rules = list(rules)
    attrs: dict[int, tuple[int, int]] = dict(log_attributes or {})
    if registry is not None:
        for rule in rules:
            for lid in rule.tsl:
                if lid not in attrs:
                    node_id, event_id, *_ = registry.log_attributes(lid)
                    attrs[lid] = (node_id, event_id)
    occurrences = dict(occurrences or {})

    def scope_of(rule: RuleStats) -> FCGScope:
        if rule.kind is RuleKind.LOCAL or (
            rule.kind is None
            and len({attrs.get(lid, (None,))[0] for lid in rule.tsl}) == 1
        ):
            node = attrs.get(rule.tsl[0], (None, None))[0]
            return FCGScope(RuleKind.LOCAL, node)
        return FCGScope(RuleKind.DISTRIBUTED)

    grouped: dict[FCGScope, list[RuleStats]] = {}
    for rule in rules:
        grouped.setdefault(scope_of(rule), []).append(rule)

    def scope_sort_key(scope: FCGScope):
        return (scope.kind is not RuleKind.LOCAL, scope.node_id or 0)

    counter = {"v": 0, "e": 0}

    def next_vertex() -> int:
        counter["v"] += 1
        return counter["v"]

    def next_edge() -> int:
        counter["e"] += 1
        return counter["e"]

    fcgs: list[FCG] = []
    index: FCGIndex = {}
    skipped: list[SkippedRule] = []
    fcg_counter = 0

    for scope in sorted(grouped, key=scope_sort_key):
        graph = _ScopeGraph(scope, next_vertex)
        ordered = sorted(
            grouped[scope], key=lambda r: (-r.support_count, -r.confidence, r.tsl)
        )
        for rule in ordered:
            _insert_rule(graph, rule, attrs, occurrences, next_edge, skipped)
        fcg_counter = _split_components(graph, fcgs, index, fcg_counter)

    return FCGBuild(fcgs=fcgs, index=index, skipped=skipped)


def _insert_rule(
    graph: _ScopeGraph,
    rule: RuleStats,
    attrs,
    occurrences,
    next_edge,
    skipped: list[SkippedRule],
) -> None:
    stats = dict(
        support_count=rule.support_count,
        posterior_count=rule.posterior_count,
        preceding_occurrences=rule.preceding_occurrences,
        posterior_event_occurrences=rule.posterior_event_occurrences,
    )
    if rule.arity == 2:
        tail = graph.dominant(rule.tsl[0], attrs, occurrences)
        head = graph.dominant(rule.tsl[1], attrs, occurrences)
        if (tail, head) in graph.edge_pairs:
            skipped.append(SkippedRule(graph.scope.label(), rule.tsl, "duplicate edge"))
            return
        if not graph._acyclic_with([(tail, head)]):
            skipped.append(SkippedRule(graph.scope.label(), rule.tsl, "cycle"))
            return
        graph.commit_edge(Edge(next_edge(), tail, head, EdgeKind.DOMINANT, **stats))
        return

    chain = rule.tsl[:-1]
    constituents = [graph.dominant(lid, attrs, occurrences) for lid in chain]
    head = graph.dominant(rule.tsl[-1], attrs, occurrences)
    rec_vid, is_new = graph.recessive(chain)
    new_pairs: list[tuple[int, int]] = []
    if is_new:
        new_pairs.extend((cv, rec_vid) for cv in constituents)
    new_pairs.append((rec_vid, head))
    existing = [p for p in new_pairs if p in graph.edge_pairs]
    if existing:
        skipped.append(SkippedRule(graph.scope.label(), rule.tsl, "duplicate edge"))
        return
    if is_new:
        # The recessive vertex must exist for the acyclicity probe.
        graph.vertices[rec_vid] = Vertex(
            vertex_id=rec_vid, kind=VertexKind.RECESSIVE, chain=chain
        )
    if not graph._acyclic_with(new_pairs):
        if is_new:
            del graph.vertices[rec_vid]
        skipped.append(SkippedRule(graph.scope.label(), rule.tsl, "cycle"))
        return
    if is_new:
        graph.recessive_by_chain[chain] = rec_vid
        for position, cv in enumerate(constituents):
            graph.commit_edge(
                Edge(next_edge(), cv, rec_vid, EdgeKind.RECESSIVE, order=position)
            )
    graph.commit_edge(Edge(next_edge(), rec_vid, head, EdgeKind.RECESSIVE, **stats))


def _split_components(
    graph: _ScopeGraph, fcgs: list[FCG], index: FCGIndex, fcg_counter: int
) -> int:
    if not graph.vertices:
        return fcg_counter
    parent: dict[int, int] = {vid: vid for vid in graph.vertices}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for edge in graph.edges.values():
        union(edge.tail, edge.head)

    members: dict[int, list[int]] = {}
    for vid in sorted(graph.vertices):
        members.setdefault(find(vid), []).append(vid)

    incoming: dict[int, int] = {vid: 0 for vid in graph.vertices}
    for edge in graph.edges.values():
        incoming[edge.head] += 1
    children: dict[int, set[int]] = {vid: set() for vid in graph.vertices}
    for edge in graph.edges.values():
        children[edge.tail].add(edge.head)

    for root in sorted(members):
        fcg_counter += 1
        vids = members[root]
        vertices = {}
        for vid in vids:
            vertex = graph.vertices[vid]
            vertex.children = sorted(children[vid])
            vertices[vid] = vertex
        edges = {
            eid: e
            for eid, e in sorted(graph.edges.items())
            if e.tail in vertices and e.head in vertices
        }
        sources = [vid for vid in vids if incoming[vid] == 0]
        entrance = min(sources)
        fcg = FCG(
            fcg_id=fcg_counter,
            scope=graph.scope,
            entrance=entrance,
            vertices=vertices,
            edges=edges,
        )
        fcgs.append(fcg)
        for vid in vids:
            vertex = vertices[vid]
            if vertex.kind is VertexKind.DOMINANT:
                index.setdefault(vertex.log_id, []).append((fcg_counter, vid))
    for positions in index.values():
        positions.sort()
    return fcg_counter


def topological_order(fcg: FCG) -> list[int]:
    """Vertex ids in dependency order; raises CycleError if the graph is
    not a DAG (it always is for built graphs)."""
    ts = TopologicalSorter()
    for vid in sorted(fcg.vertices):
        ts.add(vid)
    for edge in fcg.edges.values():
        ts.add(edge.head, edge.tail)
    return list(ts.static_order())


def reconstruct_rules(fcgs: Iterable[FCG]) -> list[RuleStats]:
    """Recover every non-skipped rule from the graph edges, counts intact."""
    out: list[RuleStats] = []
    for fcg in fcgs:
        for edge in fcg.edges.values():
            if edge.is_membership:
                continue
            tail = fcg.vertices[edge.tail]
            head = fcg.vertices[edge.head]
            if tail.kind is VertexKind.DOMINANT:
                tsl = (tail.log_id, head.log_id)
            else:
                tsl = tail.chain + (head.log_id,)
            out.append(
                RuleStats(
                    tsl=tsl,
                    support_count=edge.support_count,
                    posterior_count=edge.posterior_count,
                    preceding_occurrences=edge.preceding_occurrences,
                    posterior_event_occurrences=edge.posterior_event_occurrences,
                    kind=fcg.scope.kind,
                )
            )
    out.sort(key=lambda r: (r.arity, r.tsl))
    return out


@dataclass(frozen=True)
class Inference:
    """A recovered missing event plus its provenance; inferred events are
    never fed back into mining."""

    event: Event
    trigger: Event
    rule: RuleStats


def recover_missing(
    events: Sequence[Event],
    clusters: Iterable[RuleStats],
    *,
    window: int,
    registry: IdRegistry,
) -> list[Inference]:
    """Use 2-ary clusters (A, B) to recover missing A events: a B occurrence
    with no A in the preceding window implies an A, timestamped at B."""
    stamps: dict[int, list[int]] = {}
    for ev in events:
        stamps.setdefault(ev.log_id, []).append(ev.timestamp)

    inferred: list[Inference] = []
    for rule in sorted(clusters, key=lambda r: r.tsl):
        if rule.arity != 2:
            continue
        a, b = rule.tsl
        a_stamps = stamps.get(a, [])
        node_id, event_id, application, process_id, severity, event_type = (
            registry.log_attributes(a)
        )
        for ev in events:
            if ev.log_id != b:
                continue
            pos = bisect.bisect_left(a_stamps, ev.timestamp)
            preceded = pos > 0 and ev.timestamp - a_stamps[pos - 1] <= window
            if not preceded:
                inferred.append(
                    Inference(
                        event=Event(
                            timestamp=ev.timestamp,
                            log_id=a,
                            node_id=node_id,
                            event_id=event_id,
                            severity=severity,
                            event_type=event_type,
                            application=application,
                            process_id=process_id,
                        ),
                        trigger=ev,
                        rule=rule,
                    )
                )
    return inferred
