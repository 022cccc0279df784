"""Shared test machinery: random corpora and independent reference oracles."""

from __future__ import annotations

import random

from logcorr.events import EventType, Severity
from logcorr.synthesis import (
    BackgroundStream,
    PlantedRule,
    SourceSpec,
    SyntheticSpec,
)
from logcorr.graphs import VertexKind, build_fcgs
from logcorr.mining import MinerParams, RuleKind, RuleStats

from conftest import make_event


def random_corpus(rng: random.Random):
    """Small random corpus within the exhaustive oracle's guard limits."""
    n_sources = rng.randint(2, 8)
    sources = []
    for i in range(n_sources):
        sources.append(
            dict(
                log_id=i + 1,
                node_id=rng.randint(1, 3),
                event_id=rng.randint(1, 4),
                severity=rng.choice(list(Severity)),
                event_type=rng.choice(list(EventType)),
                application=rng.choice(["appa", "appb", "appc", ""]),
                process_id=str(100 + i),
            )
        )
    n_events = rng.randint(0, 200)
    span = rng.randint(10, 400)
    events = []
    for _ in range(n_events):
        src = rng.choice(sources)
        events.append(make_event(rng.randint(0, span), **src))
    events.sort(key=lambda e: e.timestamp)
    params = MinerParams(
        window=rng.randint(1, span + 10),
        support_threshold=rng.randint(1, 6),
        confidence_threshold=rng.choice([0.0, 0.1, 0.25, 0.5, 0.9]),
        max_arity=3,
    )
    return events, params


def comparable_rules(rules):
    return {
        r.tsl: (
            r.support_count,
            r.posterior_count,
            r.preceding_occurrences,
            r.posterior_event_occurrences,
            r.kind,
        )
        for r in rules
    }


def stats_with_confidence(tsl, confidence, posterior_ratio=0.9):
    """Rule whose integer counts realize the requested ratios exactly."""
    preceding = 1000
    return RuleStats(
        tsl,
        round(confidence * preceding),
        round(posterior_ratio * 1000),
        preceding,
        1000,
        RuleKind.LOCAL,
    )


def oracle_probability(fcg, marks):
    """Recursive reference evaluator for vertex probabilities."""
    vertices = fcg.vertices
    incoming = {vid: [] for vid in vertices}
    members = {}
    for e in sorted(fcg.edges.values(), key=lambda e: e.edge_id):
        if e.is_membership:
            members.setdefault(e.head, []).append((e.order, e.tail))
        else:
            incoming[e.head].append((e.tail, e.confidence))
    memo = {}

    def value(vid):
        if vid in memo:
            return memo[vid]
        vertex = vertices[vid]
        if vertex.kind is VertexKind.DOMINANT:
            if vid in marks:
                memo[vid] = 1.0
            else:
                memo[vid] = max((value(t) * c for t, c in incoming[vid]), default=0.0)
        else:
            prob = 1.0
            for _, cv in sorted(members[vid]):
                prob *= value(cv)
            memo[vid] = prob
        return memo[vid]

    return {vid: value(vid) for vid in vertices}


def enumerate_path_products(fcg, marks):
    """Dominant-only graphs: max over directed paths from a marked vertex of
    the product of edge confidences along the path."""
    incoming = {vid: [] for vid in fcg.vertices}
    for e in fcg.edges.values():
        incoming[e.head].append((e.tail, e.confidence))

    def best(vid, seen):
        if vid in marks:
            return 1.0
        out = 0.0
        for tail, conf in incoming[vid]:
            if tail in seen:
                continue
            out = max(out, best(tail, seen | {tail}) * conf)
        return out

    return {vid: (1.0 if vid in marks else best(vid, {vid})) for vid in fcg.vertices}


def random_dag_build(rng: random.Random, with_recessive=True):
    """Random acyclic rule set (ids ascend along every rule) built into FCGs."""
    n = rng.randint(3, 12)
    ids = list(range(1, n + 1))
    rules = []
    seen = set()
    for _ in range(rng.randint(2, 18)):
        a, b = rng.sample(ids, 2)
        if a < b and (a, b) not in seen:
            seen.add((a, b))
            rules.append(stats_with_confidence((a, b), rng.randint(1, 999) / 1000))
    if with_recessive and n >= 4:
        for _ in range(rng.randint(0, 3)):
            a, b, c = sorted(rng.sample(ids, 3))
            if (a, b, c) not in seen:
                seen.add((a, b, c))
                rules.append(stats_with_confidence((a, b, c), rng.randint(1, 999) / 1000))
    if not rules:
        rules = [stats_with_confidence((1, 2), 0.5)]
    return build_fcgs(rules, log_attributes={i: (1, i) for i in ids})


def oracle_filter_pipeline(events, window=10, count_threshold=20, fraction_threshold=0.25):
    """Independent restatement of the two filtering rules, list-based.

    Returns (kept_after_dedupe, kept_after_periodic).
    """
    kept1 = []
    last_retained = {}
    for ev in events:
        anchor = last_retained.get(ev.log_id)
        keep = anchor is None or (ev.timestamp != anchor and ev.timestamp - anchor >= window)
        if keep:
            kept1.append(ev)
            last_retained[ev.log_id] = ev.timestamp

    gaps = {}
    prev = {}
    for ev in kept1:
        if ev.log_id in prev:
            gaps.setdefault(ev.log_id, []).append(ev.timestamp - prev[ev.log_id])
        prev[ev.log_id] = ev.timestamp
    fixed = {}
    for lid, intervals in gaps.items():
        total = len(intervals)
        values = set()
        for value in set(intervals):
            count = intervals.count(value)
            if count >= count_threshold and count / total >= fraction_threshold:
                values.add(value)
        if values:
            fixed[lid] = values

    kept2 = []
    prev = {}
    for ev in kept1:
        gap_prev = prev.get(ev.log_id)
        prev[ev.log_id] = ev.timestamp
        if (
            gap_prev is not None
            and ev.log_id in fixed
            and (ev.timestamp - gap_prev) in fixed[ev.log_id]
        ):
            continue
        kept2.append(ev)
    return kept1, kept2


SEV = list(Severity)
TYP = list(EventType)


def trend_spec(seed=424242):
    sources = []
    background = []
    n_bg = 440
    nodes = 24
    for i in range(n_bg):
        sources.append(SourceSpec(
            node_id=(i % nodes) + 1,
            application=f"bg-app-{i % 30}",
            severity=SEV[i % 5],
            event_type=TYP[(i // 5) % 5],
            process_id=str(5000 + i),
        ))
        background.append(BackgroundStream(source=i, rate_per_hour=0.004))

    duration = int(26667 * 3600)  # ~3 years, keeps pair co-occurrence rare

    planted = []

    def add_pair(p, delay_lo, delay_hi, occurrences, node_a, node_b, app_a, app_b,
                 type_a, type_b, sev_a=Severity.ERROR, sev_b=Severity.FAILURE):
        ia = len(sources)
        sources.append(SourceSpec(node_a, app_a, sev_a, type_a, str(9000 + ia)))
        ib = len(sources)
        sources.append(SourceSpec(node_b, app_b, sev_b, type_b, str(9000 + ib)))
        planted.append(PlantedRule(
            trigger=ia, consequent=ib, probability=p,
            delay_min=delay_lo, delay_max=delay_hi, occurrences=occurrences,
            jitter=0.5,
        ))

    # A group: confidence bands x delay bands, same node, n=120
    bands = [(100, 500), (700, 1100), (1300, 1700), (1900, 2600), (2800, 3500)]
    probs = [0.22, 0.4, 0.6, 0.8, 1.0]
    for k in range(5):
        node = (k % 24) + 1
        add_pair(probs[k], *bands[k], 120, node, node,
                 f"pa-{k}", f"pa-{k}x", TYP[k % 5], TYP[(k + 2) % 5])
    rotated = [0.4, 0.8, 1.0, 0.22, 0.6]
    for k in range(5):
        node = ((k + 7) % 24) + 1
        add_pair(rotated[k], *bands[k], 120, node, node,
                 f"pb-{k}", f"pb-{k}x", TYP[(k + 1) % 5], TYP[(k + 3) % 5])

    # B group: exact supports for the Sth sweep (p=1 -> support == occurrences)
    for k, n in enumerate([4, 8, 15, 30, 60]):
        for copy in range(2):
            node = ((3 * k + copy) % 24) + 1
            add_pair(1.0, 200, 800, n, node, node,
                     f"ps-{k}-{copy}", f"ps-{k}-{copy}x", TYP[k % 5], TYP[(k + 1) % 5])

    # T group: long delays visible only at larger windows
    t_bands = [(1000, 1600), (2200, 3300), (4500, 6500), (8000, 13000)]
    for k, (lo, hi) in enumerate(t_bands):
        for copy in range(2):
            node = ((5 * k + copy) % 24) + 1
            add_pair(1.0, lo, hi, 30, node, node,
                     f"pt-{k}-{copy}", f"pt-{k}-{copy}x", TYP[k % 5], TYP[(k + 2) % 5])

    # cross-node pairs: same application, then same event type
    for k in range(2):
        add_pair(1.0, 300, 900, 40, 1 + k, 13 + k,
                 f"shared-app-{k}", f"shared-app-{k}", TYP[k], TYP[(k + 1) % 5])
    for k in range(2):
        add_pair(1.0, 300, 900, 40, 3 + k, 17 + k,
                 f"sat-a-{k}", f"sat-b-{k}", TYP[2], TYP[2])

    # one pair invisible to the two-pass policy: different node, app, type
    add_pair(1.0, 300, 600, 60, 5, 21, "lonely-a", "lonely-b", TYP[0], TYP[3])

    return SyntheticSpec(
        seed=seed,
        duration=duration,
        sources=tuple(sources),
        background=tuple(background),
        planted=tuple(planted),
    )
