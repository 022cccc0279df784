"""Sliding-window TSL counting and the Apriori / Apriori-S rule miners.

A TSL is an ordered tuple of distinct log ids with the timing constraint
that each element occurs strictly after its predecessor and the whole
match fits inside the sliding window. The counting semantics are fixed
once for the entire package:

* a match of (X1..Xk) is one occurrence of each Xi with strictly
  increasing timestamps and last - first <= window;
* support count   = occurrences of X1 from which at least one match starts;
* posterior count = occurrences of Xk at which at least one match ends;
* confidence      = support count / occurrences of X1 starting a match of
  the (k-1)-ary prefix (for k=2 that is simply every X1 occurrence);
* posterior ratio = posterior count / total occurrences of Xk.

Existence of a match from an anchor is decided by a greedy
earliest-successor chain: picking the earliest legal occurrence of each
next element minimizes the chain's final timestamp, so the greedy chain
fits in the window iff any chain does. The symmetric latest-predecessor
walk decides posterior anchors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .events import Event
from .validation import as_event_sequence, check_fraction, check_positive, check_sorted

_FAR = np.int64(2**62)

DEFAULT_WINDOW = 3600
DEFAULT_SUPPORT = 5
DEFAULT_CONFIDENCE = 0.25
DEFAULT_CLUSTER_SUPPORT = 10
DEFAULT_CLUSTER_CONFIDENCE = 0.8
DEFAULT_CLUSTER_POSTERIOR = 0.8
DEFAULT_MAX_ARITY = 3


class RuleKind(Enum):
    LOCAL = "LOCAL"
    DISTRIBUTED = "DISTRIBUTED"


@dataclass(frozen=True)
class RuleStats:
    """A TSL with its measured counts. Ratios derive from the counts."""

    tsl: tuple[int, ...]
    support_count: int
    posterior_count: int
    preceding_occurrences: int
    posterior_event_occurrences: int
    kind: RuleKind | None = None

    @property
    def arity(self) -> int:
        return len(self.tsl)

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
class MinerParams:
    """Thresholds and window for rule mining; defaults are the baseline
    configuration (window 3600s, support 5, confidence 0.25)."""

    window: int = DEFAULT_WINDOW
    support_threshold: int = DEFAULT_SUPPORT
    confidence_threshold: float = DEFAULT_CONFIDENCE
    cluster_support_threshold: int = DEFAULT_CLUSTER_SUPPORT
    cluster_confidence_threshold: float = DEFAULT_CLUSTER_CONFIDENCE
    cluster_posterior_threshold: float = DEFAULT_CLUSTER_POSTERIOR
    max_arity: int = DEFAULT_MAX_ARITY

    def __post_init__(self):
        check_positive(self.window, "window")
        if self.support_threshold < 1:
            raise ValueError("support_threshold must be >= 1")
        check_fraction(self.confidence_threshold, "confidence_threshold")
        check_fraction(self.cluster_confidence_threshold, "cluster_confidence_threshold")
        check_fraction(self.cluster_posterior_threshold, "cluster_posterior_threshold")
        if self.max_arity < 2:
            raise ValueError("max_arity must be >= 2")


class EventIndex:
    """Per-log-id sorted timestamp arrays plus source attributes.

    All counting works off these arrays. Because a log id fixes its node,
    application and event type, restricting mining to a subset of log ids
    is exactly equivalent to mining the sub-stream of their events.
    """

    def __init__(self, events: Sequence[Event]):
        check_sorted(events)
        stamps: dict[int, list[int]] = {}
        self.node_of: dict[int, int] = {}
        self.event_id_of: dict[int, int] = {}
        self.application_of: dict[int, str] = {}
        self.event_type_of: dict[int, object] = {}
        for ev in events:
            stamps.setdefault(ev.log_id, []).append(ev.timestamp)
            if ev.log_id not in self.node_of:
                self.node_of[ev.log_id] = ev.node_id
                self.event_id_of[ev.log_id] = ev.event_id
                self.application_of[ev.log_id] = ev.application
                self.event_type_of[ev.log_id] = ev.event_type
        self._stamps = {lid: np.asarray(ts, dtype=np.int64) for lid, ts in stamps.items()}
        self._empty = np.empty(0, dtype=np.int64)

    def timestamps(self, log_id: int) -> np.ndarray:
        return self._stamps.get(log_id, self._empty)

    def count(self, log_id: int) -> int:
        return int(self.timestamps(log_id).size)

    @property
    def log_ids(self) -> list[int]:
        return sorted(self._stamps)

    def occurrences(self) -> dict[int, int]:
        return {lid: int(arr.size) for lid, arr in self._stamps.items()}

    def kind_of(self, tsl: tuple[int, ...]) -> RuleKind | None:
        nodes = {self.node_of.get(lid) for lid in tsl}
        if None in nodes:
            return None
        return RuleKind.LOCAL if len(nodes) == 1 else RuleKind.DISTRIBUTED


def _forward_support(index: EventIndex, tsl: tuple[int, ...], window: int) -> int:
    """Anchors of tsl[0] starting at least one complete in-window match."""
    first = index.timestamps(tsl[0])
    if first.size == 0:
        return 0
    chain = first
    for lid in tsl[1:]:
        arr = index.timestamps(lid)
        if arr.size == 0:
            return 0
        pos = np.searchsorted(arr, chain, side="right")
        inside = pos < arr.size
        chain = np.where(inside, arr[np.minimum(pos, arr.size - 1)], _FAR)
    return int(np.count_nonzero(chain - first <= window))


def _backward_posterior(index: EventIndex, tsl: tuple[int, ...], window: int) -> int:
    """Anchors of tsl[-1] ending at least one complete in-window match."""
    last = index.timestamps(tsl[-1])
    if last.size == 0:
        return 0
    chain = last
    for lid in reversed(tsl[:-1]):
        arr = index.timestamps(lid)
        if arr.size == 0:
            return 0
        pos = np.searchsorted(arr, chain, side="left") - 1
        inside = pos >= 0
        chain = np.where(inside, arr[np.maximum(pos, 0)], -_FAR)
    return int(np.count_nonzero(last - chain <= window))


def _validate_tsl(tsl: Sequence[int]) -> tuple[int, ...]:
    tsl = tuple(int(x) for x in tsl)
    if len(tsl) < 2:
        raise ValueError("a countable TSL needs at least two elements")
    if len(set(tsl)) != len(tsl):
        raise ValueError(f"TSL elements must be distinct, got {tsl}")
    return tsl


def _count_on_index(
    index: EventIndex,
    tsl: tuple[int, ...],
    window: int,
    prefix_support: int | None = None,
) -> RuleStats:
    if any(index.count(lid) == 0 for lid in tsl):
        return RuleStats(tsl, 0, 0, 0, 0, index.kind_of(tsl))
    support = _forward_support(index, tsl, window)
    posterior = _backward_posterior(index, tsl, window)
    if len(tsl) == 2:
        preceding = index.count(tsl[0])
    elif prefix_support is not None:
        preceding = prefix_support
    else:
        preceding = _forward_support(index, tsl[:-1], window)
    return RuleStats(
        tsl=tsl,
        support_count=support,
        posterior_count=posterior,
        preceding_occurrences=preceding,
        posterior_event_occurrences=index.count(tsl[-1]),
        kind=index.kind_of(tsl),
    )


def count_tsl(events: Sequence[Event], tsl: Sequence[int], window: int) -> RuleStats:
    """Count one TSL over a time-ordered stream.

    A TSL containing a log id absent from the stream yields all-zero stats
    rather than an error.
    """
    check_positive(window, "window")
    return _count_on_index(EventIndex(as_event_sequence(events)), _validate_tsl(tsl), window)


def frequent_events(events: Sequence[Event], support_threshold: int) -> set[int]:
    """Log ids whose raw occurrence count clears the support threshold."""
    counts: dict[int, int] = {}
    for ev in events:
        counts[ev.log_id] = counts.get(ev.log_id, 0) + 1
    return {lid for lid, n in counts.items() if n >= support_threshold}


def gen_candidates(frequent: Iterable[tuple[int, ...]]) -> set[tuple[int, ...]]:
    """Grow k-ary candidates from the frequent (k-1)-ary set.

    A k-ary TSL is a candidate iff every order-preserving (k-1)-ary subset
    of it is frequent. For k=2 that is all ordered pairs of frequent
    singletons.
    """
    frequent = set(frequent)
    if not frequent:
        return set()
    sizes = {len(t) for t in frequent}
    if len(sizes) != 1:
        raise ValueError("frequent TSLs must all have the same arity")
    size = sizes.pop()
    if size == 1:
        ids = sorted(t[0] for t in frequent)
        return {(a, b) for a in ids for b in ids if a != b}
    by_prefix: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for t in frequent:
        by_prefix.setdefault(t[:-1], []).append(t)
    out: set[tuple[int, ...]] = set()
    for head in frequent:
        for tail in by_prefix.get(head[1:], ()):
            last = tail[-1]
            if last in head:
                continue
            cand = head + (last,)
            k = len(cand)
            if all(cand[:i] + cand[i + 1:] in frequent for i in range(k)):
                out.add(cand)
    return out


@dataclass
class MiningResult:
    """Rules plus the side information downstream stages need."""

    rules: list[RuleStats]
    analysis_seconds: float
    occurrences: dict[int, int]
    node_of: dict[int, int]
    event_id_of: dict[int, int]

    def by_tsl(self) -> dict[tuple[int, ...], RuleStats]:
        return {r.tsl: r for r in self.rules}


def _mine_universe(
    index: EventIndex,
    universe: Sequence[int],
    params: MinerParams,
    kind: RuleKind | None = None,
) -> dict[tuple[int, ...], RuleStats]:
    """Level-wise mining restricted to a set of log ids.

    Candidate generation follows subset closure; a level's frequent set is
    the candidates whose support clears the threshold, and rules
    additionally clear the confidence threshold.
    """
    sth = params.support_threshold
    frequent: set[tuple[int, ...]] = {
        (lid,) for lid in universe if index.count(lid) >= sth
    }
    supports: dict[tuple[int, ...], int] = {}
    rules: dict[tuple[int, ...], RuleStats] = {}
    k = 2
    while frequent and k <= params.max_arity:
        next_frequent: set[tuple[int, ...]] = set()
        for tsl in sorted(gen_candidates(frequent)):
            stats = _count_on_index(
                index, tsl, params.window, prefix_support=supports.get(tsl[:-1])
            )
            if kind is not None:
                stats = replace(stats, kind=kind)
            if stats.support_count >= sth:
                next_frequent.add(tsl)
                supports[tsl] = stats.support_count
                if stats.confidence >= params.confidence_threshold:
                    rules[tsl] = stats
        frequent = next_frequent
        k += 1
    return rules


def _result(
    index: EventIndex, rules: dict[tuple[int, ...], RuleStats], elapsed: float
) -> MiningResult:
    return MiningResult(
        rules=sorted(rules.values(), key=lambda r: (r.arity, r.tsl)),
        analysis_seconds=elapsed,
        occurrences=index.occurrences(),
        node_of=dict(index.node_of),
        event_id_of=dict(index.event_id_of),
    )


def mine_apriori(events: Sequence[Event], params: MinerParams) -> MiningResult:
    """Level-wise mining over all log ids in the stream."""
    events = as_event_sequence(events)
    start = time.perf_counter()
    index = EventIndex(events)
    rules = _mine_universe(index, index.log_ids, params)
    return _result(index, rules, time.perf_counter() - start)


def mine_apriori_s(events: Sequence[Event], params: MinerParams) -> MiningResult:
    """Two-pass mining under the event filter policy.

    Pass one mines each node's events for local rules. Pass two mines each
    application group and each event-type group, keeping only TSLs that
    span at least two nodes; a TSL qualifying under both groupings is kept
    once (its stats are identical either way, since counting depends only
    on the constituent log ids' timestamps). Correlations between events
    sharing neither node, application nor event type are excluded by
    construction.
    """
    events = as_event_sequence(events)
    start = time.perf_counter()
    index = EventIndex(events)
    rules: dict[tuple[int, ...], RuleStats] = {}

    by_node: dict[int, list[int]] = {}
    for lid in index.log_ids:
        by_node.setdefault(index.node_of[lid], []).append(lid)
    for node in sorted(by_node):
        rules.update(_mine_universe(index, by_node[node], params, kind=RuleKind.LOCAL))

    groups: list[list[int]] = []
    by_app: dict[str, list[int]] = {}
    by_type: dict[object, list[int]] = {}
    for lid in index.log_ids:
        app = index.application_of[lid]
        if app:
            by_app.setdefault(app, []).append(lid)
        by_type.setdefault(index.event_type_of[lid], []).append(lid)
    groups.extend(by_app[a] for a in sorted(by_app))
    groups.extend(by_type[t] for t in sorted(by_type))
    for group in groups:
        if len(group) < 2:
            continue
        for tsl, stats in _mine_universe(index, group, params, kind=RuleKind.DISTRIBUTED).items():
            if tsl in rules:
                continue
            if len({index.node_of[lid] for lid in tsl}) >= 2:
                rules[tsl] = stats

    return _result(index, rules, time.perf_counter() - start)


def extract_clusters(
    rules: Iterable[RuleStats],
    support_threshold: int = DEFAULT_CLUSTER_SUPPORT,
    confidence_threshold: float = DEFAULT_CLUSTER_CONFIDENCE,
    posterior_threshold: float = DEFAULT_CLUSTER_POSTERIOR,
) -> list[RuleStats]:
    """Rules whose support, confidence and posterior all clear the high
    thresholds; these mark strongly correlated events."""
    return [
        r
        for r in rules
        if r.support_count >= support_threshold
        and r.confidence >= confidence_threshold
        and r.posterior >= posterior_threshold
    ]


class CorrelationMiner(BaseEstimator):
    """Estimator wrapper: fit(events) mines rules and clusters.

    Parameters mirror MinerParams plus the algorithm choice. After fit the
    results live in ``rules_``, ``clusters_``, ``analysis_seconds_`` and
    ``result_`` (the full MiningResult).
    """

    def __init__(
        self,
        window: int = DEFAULT_WINDOW,
        support_threshold: int = DEFAULT_SUPPORT,
        confidence_threshold: float = DEFAULT_CONFIDENCE,
        cluster_support_threshold: int = DEFAULT_CLUSTER_SUPPORT,
        cluster_confidence_threshold: float = DEFAULT_CLUSTER_CONFIDENCE,
        cluster_posterior_threshold: float = DEFAULT_CLUSTER_POSTERIOR,
        max_arity: int = DEFAULT_MAX_ARITY,
        algorithm: str = "apriori",
    ):
        self.window = window
        self.support_threshold = support_threshold
        self.confidence_threshold = confidence_threshold
        self.cluster_support_threshold = cluster_support_threshold
        self.cluster_confidence_threshold = cluster_confidence_threshold
        self.cluster_posterior_threshold = cluster_posterior_threshold
        self.max_arity = max_arity
        self.algorithm = algorithm

    def _params(self) -> MinerParams:
        return MinerParams(
            window=self.window,
            support_threshold=self.support_threshold,
            confidence_threshold=self.confidence_threshold,
            cluster_support_threshold=self.cluster_support_threshold,
            cluster_confidence_threshold=self.cluster_confidence_threshold,
            cluster_posterior_threshold=self.cluster_posterior_threshold,
            max_arity=self.max_arity,
        )

    def fit(self, X, y=None):
        events = as_event_sequence(X)
        params = self._params()
        if self.algorithm == "apriori":
            result = mine_apriori(events, params)
        elif self.algorithm in ("apriori-s", "apriori_s"):
            result = mine_apriori_s(events, params)
        else:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        self.result_ = result
        self.rules_ = result.rules
        self.clusters_ = extract_clusters(
            result.rules,
            params.cluster_support_threshold,
            params.cluster_confidence_threshold,
            params.cluster_posterior_threshold,
        )
        self.analysis_seconds_ = result.analysis_seconds
        return self
