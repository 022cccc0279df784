"""Event prediction over failure correlation graphs.

Each observed event marks its dominant vertices (probability 1) for one
mark lifetime. Probabilities then flow along rule edges in topological
order: an unmarked dominant vertex takes the maximum over incoming edges
of tail probability times edge confidence; a recessive chain vertex takes
the product of its constituents' current probabilities, which makes it 1
exactly when all membership edges are marked and degrades smoothly when
only part of the chain has been seen. Any unmarked dominant vertex whose
probability clears the threshold becomes a prediction with a validity
deadline; the predicted event arriving before the deadline resolves it as
a hit, the deadline passing resolves it as expired.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

from sklearn.base import BaseEstimator

from .errors import UnsortedEventsError
from .events import Event
from .graphs import FCG, FCGBuild, FCGIndex, VertexKind, build_fcgs, topological_order
from .mining import MiningResult
from .validation import as_event_sequence, check_positive

DEFAULT_PROBABILITY_THRESHOLD = 0.25
DEFAULT_VALID_DURATION = 3600
DEFAULT_MARK_LIFETIME = 3600


@dataclass(frozen=True)
class PredictorParams:
    """Prediction threshold, validity window, and mark lifetime.

    The mark lifetime defaults to the miner's sliding window so prediction
    state decays on the same scale the statistics were counted on.
    """

    probability_threshold: float = DEFAULT_PROBABILITY_THRESHOLD
    valid_duration: int = DEFAULT_VALID_DURATION
    mark_lifetime: int = DEFAULT_MARK_LIFETIME
    strict_chain_order: bool = False

    def __post_init__(self):
        if not 0.0 < self.probability_threshold <= 1.0:
            raise ValueError("probability_threshold must be in (0, 1]")
        check_positive(self.valid_duration, "valid_duration")
        check_positive(self.mark_lifetime, "mark_lifetime")


@dataclass
class Prediction:
    log_id: int
    probability: float
    predicting_point: int
    expiry: int
    outcome: str = "PENDING"           # PENDING | HIT | EXPIRED
    actual_timestamp: int | None = None

    @property
    def lead_time(self) -> int | None:
        if self.outcome != "HIT":
            return None
        return self.actual_timestamp - self.predicting_point


@dataclass(frozen=True)
class LogEntry:
    """One prediction-log line: an emission or an outcome transition."""

    kind: str                          # PREDICT | REFRESH | HIT | EXPIRED
    at: int
    log_id: int
    probability: float
    predicting_point: int
    expiry: int
    actual_timestamp: int | None = None
    lead_time: int | None = None


class _CompiledGraph:
    """Per-FCG lookup tables the propagation pass runs on."""

    def __init__(self, fcg: FCG):
        self.fcg = fcg
        self.topo = topological_order(fcg)
        self.incoming: dict[int, list[tuple[int, float]]] = {vid: [] for vid in fcg.vertices}
        self.constituents: dict[int, list[int]] = {}
        self.log_id_of: dict[int, int] = {}
        members: dict[int, list[tuple[int, int]]] = {}
        for edge in sorted(fcg.edges.values(), key=lambda e: e.edge_id):
            if edge.is_membership:
                members.setdefault(edge.head, []).append((edge.order, edge.tail))
            else:
                self.incoming[edge.head].append((edge.tail, edge.confidence))
        for vid, vertex in fcg.vertices.items():
            if vertex.kind is VertexKind.DOMINANT:
                self.log_id_of[vid] = vertex.log_id
            else:
                self.constituents[vid] = [t for _, t in sorted(members.get(vid, []))]

    def propagate(self, marks: dict[int, int], strict_order: bool) -> dict[int, float]:
        p: dict[int, float] = {}
        for vid in self.topo:
            vertex = self.fcg.vertices[vid]
            if vertex.kind is VertexKind.DOMINANT:
                if vid in marks:
                    p[vid] = 1.0
                else:
                    best = 0.0
                    for tail, confidence in self.incoming[vid]:
                        candidate = p[tail] * confidence
                        if candidate > best:
                            best = candidate
                    p[vid] = best
            else:
                prob = 1.0
                last_mark: int | None = None
                for cv in self.constituents[vid]:
                    contribution = p[cv]
                    if strict_order and cv in marks:
                        if last_mark is not None and marks[cv] < last_mark:
                            # marked out of chain order: fall back to the
                            # constituent's propagated (non-mark) value
                            alt = 0.0
                            for tail, confidence in self.incoming[cv]:
                                alt = max(alt, p[tail] * confidence)
                            contribution = alt
                        else:
                            last_mark = marks[cv]
                    prob *= contribution
                p[vid] = prob
        return p


class PredictorState:
    """Single-owner mutable state for one event stream."""

    def __init__(self, graphs: Sequence[FCG], index: FCGIndex, params: PredictorParams):
        self.params = params
        self.compiled = {fcg.fcg_id: _CompiledGraph(fcg) for fcg in graphs}
        self.index = index
        self.marks: dict[int, dict[int, int]] = {fid: {} for fid in self.compiled}
        self.probabilities: dict[int, dict[int, float]] = {fid: {} for fid in self.compiled}
        self.active: dict[int, Prediction] = {}
        self.resolved: list[Prediction] = []
        self.log: list[LogEntry] = []
        self.last_timestamp: int | None = None
        self._mark_heap: list[tuple[int, int, int, int]] = []

    # -- bookkeeping -------------------------------------------------------

    def _expire_marks(self, now: int) -> None:
        heap = self._mark_heap
        while heap and heap[0][0] < now:
            _, fcg_id, vid, stamped = heapq.heappop(heap)
            if self.marks[fcg_id].get(vid) == stamped:
                del self.marks[fcg_id][vid]

    def _expire_predictions(self, now: int) -> list[Prediction]:
        transitions = []
        for log_id in sorted(self.active):
            pred = self.active[log_id]
            if pred.expiry < now:
                pred.outcome = "EXPIRED"
                transitions.append(pred)
                self.resolved.append(pred)
                self.log.append(
                    LogEntry(
                        kind="EXPIRED",
                        at=pred.expiry,
                        log_id=pred.log_id,
                        probability=pred.probability,
                        predicting_point=pred.predicting_point,
                        expiry=pred.expiry,
                    )
                )
                del self.active[log_id]
        return transitions


def resolve_expired(state: PredictorState, now: int) -> list[Prediction]:
    """Expire pending predictions past their deadline (exclusive: a
    prediction is still pending at exactly its expiry) and clear marks
    older than the mark lifetime."""
    state._expire_marks(now)
    return state._expire_predictions(now)


def observe(state: PredictorState, event: Event) -> list[Prediction]:
    """Feed one event; returns predictions emitted or refreshed by it."""
    now = event.timestamp
    if state.last_timestamp is not None and now < state.last_timestamp:
        raise UnsortedEventsError(
            f"predictor saw {now} after {state.last_timestamp}"
        )
    state.last_timestamp = now
    params = state.params

    state._expire_marks(now)
    state._expire_predictions(now)

    pending = state.active.get(event.log_id)
    if pending is not None and pending.predicting_point < now:
        pending.outcome = "HIT"
        pending.actual_timestamp = now
        state.resolved.append(pending)
        state.log.append(
            LogEntry(
                kind="HIT",
                at=now,
                log_id=pending.log_id,
                probability=pending.probability,
                predicting_point=pending.predicting_point,
                expiry=pending.expiry,
                actual_timestamp=now,
                lead_time=pending.lead_time,
            )
        )
        del state.active[event.log_id]

    changed: set[int] = set()
    for fcg_id, vid in state.index.get(event.log_id, ()):
        state.marks[fcg_id][vid] = now
        heapq.heappush(state._mark_heap, (now + params.mark_lifetime, fcg_id, vid, now))
        changed.add(fcg_id)

    candidates: dict[int, float] = {}
    for fcg_id in sorted(changed):
        compiled = state.compiled[fcg_id]
        probs = compiled.propagate(state.marks[fcg_id], params.strict_chain_order)
        state.probabilities[fcg_id] = probs
        for vid in compiled.topo:
            log_id = compiled.log_id_of.get(vid)
            if log_id is None or vid in state.marks[fcg_id]:
                continue
            prob = probs[vid]
            if prob >= params.probability_threshold:
                if log_id not in candidates or prob > candidates[log_id]:
                    candidates[log_id] = prob

    emitted: list[Prediction] = []
    for log_id in sorted(candidates):
        prob = candidates[log_id]
        current = state.active.get(log_id)
        if current is None:
            pred = Prediction(
                log_id=log_id,
                probability=prob,
                predicting_point=now,
                expiry=now + params.valid_duration,
            )
            state.active[log_id] = pred
            state.log.append(
                LogEntry(
                    kind="PREDICT",
                    at=now,
                    log_id=log_id,
                    probability=prob,
                    predicting_point=now,
                    expiry=pred.expiry,
                )
            )
            emitted.append(pred)
        elif prob > current.probability:
            current.probability = prob
            current.predicting_point = now
            current.expiry = now + params.valid_duration
            state.log.append(
                LogEntry(
                    kind="REFRESH",
                    at=now,
                    log_id=log_id,
                    probability=prob,
                    predicting_point=now,
                    expiry=current.expiry,
                )
            )
            emitted.append(current)
    return emitted


def finish(state: PredictorState) -> list[Prediction]:
    """Resolve everything still pending as expired (end of stream)."""
    horizon = max(
        [p.expiry for p in state.active.values()],
        default=state.last_timestamp or 0,
    )
    return resolve_expired(state, horizon + 1)


class FailurePredictor(BaseEstimator):
    """Estimator wrapper: fit on mined rules, predict over an event stream.

    ``fit`` accepts a MiningResult (preferred: it carries the occurrence
    counts and vertex attributes) or a plain rule list plus keyword side
    tables. ``predict`` replays a time-ordered stream and returns every
    prediction it produced, resolved.
    """

    def __init__(
        self,
        probability_threshold: float = DEFAULT_PROBABILITY_THRESHOLD,
        valid_duration: int = DEFAULT_VALID_DURATION,
        mark_lifetime: int = DEFAULT_MARK_LIFETIME,
        strict_chain_order: bool = False,
    ):
        self.probability_threshold = probability_threshold
        self.valid_duration = valid_duration
        self.mark_lifetime = mark_lifetime
        self.strict_chain_order = strict_chain_order

    def _params(self) -> PredictorParams:
        return PredictorParams(
            probability_threshold=self.probability_threshold,
            valid_duration=self.valid_duration,
            mark_lifetime=self.mark_lifetime,
            strict_chain_order=self.strict_chain_order,
        )

    def fit(self, X, y=None, *, log_attributes=None, occurrences=None):
        if isinstance(X, MiningResult):
            build = build_fcgs(
                X.rules,
                log_attributes={
                    lid: (X.node_of.get(lid), X.event_id_of.get(lid)) for lid in X.node_of
                },
                occurrences=X.occurrences,
            )
        elif isinstance(X, FCGBuild):
            build = X
        else:
            build = build_fcgs(
                list(X), log_attributes=log_attributes, occurrences=occurrences
            )
        self.build_ = build
        self.graphs_ = build.fcgs
        self.index_ = build.index
        self.skipped_ = build.skipped
        return self

    def stream(self) -> PredictorState:
        if not hasattr(self, "graphs_"):
            raise RuntimeError("FailurePredictor.stream called before fit")
        return PredictorState(self.graphs_, self.index_, self._params())

    def predict(self, X) -> list[Prediction]:
        events = as_event_sequence(X)
        state = self.stream()
        for event in events:
            observe(state, event)
        finish(state)
        return state.resolved

    def predict_log(self, X) -> tuple[list[Prediction], list[LogEntry]]:
        events = as_event_sequence(X)
        state = self.stream()
        for event in events:
            observe(state, event)
        finish(state)
        return state.resolved, state.log
