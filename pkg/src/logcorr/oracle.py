"""Exhaustive reference miner used to validate the production miner.

This is an intentionally independent implementation: pure-Python lists,
backtracking search for match existence instead of the greedy chain walk,
and candidate enumeration by filtering all permutations through the subset
closure instead of join-based generation. It shares only the RuleStats
container with the production path. A size guard keeps it tractable.
"""

from __future__ import annotations

from itertools import permutations
from typing import Sequence

from .errors import OracleGuardError
from .events import Event
from .mining import MinerParams, RuleKind, RuleStats

MAX_EVENTS = 200
MAX_LOG_IDS = 8


def _occurrences(events: Sequence[Event]) -> dict[int, list[int]]:
    occ: dict[int, list[int]] = {}
    for ev in events:
        occ.setdefault(ev.log_id, []).append(ev.timestamp)
    for stamps in occ.values():
        stamps.sort()
    return occ


def _match_starts_at(
    occ: dict[int, list[int]], tsl: tuple[int, ...], anchor: int, window: int
) -> bool:
    """Does any strictly-increasing chain for tsl[1:] fit after anchor
    within the window? Tries every combination, earliest first."""

    def extend(level: int, prev: int) -> bool:
        if level == len(tsl):
            return True
        for ts in occ.get(tsl[level], ()):
            if ts <= prev:
                continue
            if ts - anchor > window:
                return False
            if extend(level + 1, ts):
                return True
        return False

    return extend(1, anchor)


def _match_ends_at(
    occ: dict[int, list[int]], tsl: tuple[int, ...], anchor: int, window: int
) -> bool:
    """Does any strictly-increasing chain for tsl[:-1] fit before anchor
    within the window? Tries every combination, latest first."""

    def extend(level: int, nxt: int) -> bool:
        if level < 0:
            return True
        for ts in reversed(occ.get(tsl[level], ())):
            if ts >= nxt:
                continue
            if anchor - ts > window:
                return False
            if extend(level - 1, ts):
                return True
        return False

    return extend(len(tsl) - 2, anchor)


def _count_exhaustive(
    occ: dict[int, list[int]],
    node_of: dict[int, int],
    tsl: tuple[int, ...],
    window: int,
) -> RuleStats:
    support = sum(1 for t in occ.get(tsl[0], ()) if _match_starts_at(occ, tsl, t, window))
    posterior = sum(1 for t in occ.get(tsl[-1], ()) if _match_ends_at(occ, tsl, t, window))
    if len(tsl) == 2:
        preceding = len(occ.get(tsl[0], ()))
    else:
        prefix = tsl[:-1]
        preceding = sum(
            1 for t in occ.get(prefix[0], ()) if _match_starts_at(occ, prefix, t, window)
        )
    nodes = {node_of[lid] for lid in tsl}
    return RuleStats(
        tsl=tsl,
        support_count=support,
        posterior_count=posterior,
        preceding_occurrences=preceding,
        posterior_event_occurrences=len(occ.get(tsl[-1], ())),
        kind=RuleKind.LOCAL if len(nodes) == 1 else RuleKind.DISTRIBUTED,
    )


def oracle_mine(events: Sequence[Event], params: MinerParams) -> list[RuleStats]:
    """Level-wise exhaustive mining with the same subset-closure candidate
    rule as the production miner and brute-force match counting."""
    if len(events) > MAX_EVENTS:
        raise OracleGuardError(f"oracle limited to {MAX_EVENTS} events, got {len(events)}")
    occ = _occurrences(events)
    if len(occ) > MAX_LOG_IDS:
        raise OracleGuardError(f"oracle limited to {MAX_LOG_IDS} log ids, got {len(occ)}")
    node_of: dict[int, int] = {}
    for ev in events:
        node_of.setdefault(ev.log_id, ev.node_id)

    frequent_ids = sorted(
        lid for lid, stamps in occ.items() if len(stamps) >= params.support_threshold
    )
    frequent: set[tuple[int, ...]] = {(lid,) for lid in frequent_ids}
    rules: list[RuleStats] = []
    k = 2
    while frequent and k <= params.max_arity:
        next_frequent: set[tuple[int, ...]] = set()
        for cand in permutations(frequent_ids, k):
            subsets_ok = all(
                cand[:i] + cand[i + 1:] in frequent for i in range(k)
            )
            if not subsets_ok:
                continue
            stats = _count_exhaustive(occ, node_of, cand, params.window)
            if stats.support_count >= params.support_threshold:
                next_frequent.add(cand)
                if stats.confidence >= params.confidence_threshold:
                    rules.append(stats)
        frequent = next_frequent
        k += 1
    rules.sort(key=lambda r: (r.arity, r.tsl))
    return rules
