"""Repeated-event and periodic-event removal.

Filtering runs in two steps over a time-ordered stream. Step one drops
repeats: an event goes if a previously *retained* event with the same log
id sits strictly less than the repeat window before it (same-second
duplicates always go). Step two learns each log id's fixed cycles from
inter-arrival intervals and drops every event whose gap to its immediate
same-id predecessor equals one of them, so a purely periodic train keeps
only its first event and any event deviating from the cycle is reserved.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .events import Event
from .validation import as_event_sequence, check_fraction, check_sorted

DEFAULT_REPEAT_WINDOW = 10
DEFAULT_CYCLE_COUNT = 20
DEFAULT_CYCLE_FRACTION = 0.25


@dataclass(frozen=True)
class FixedCycle:
    interval: int
    count: int
    fraction: float


# CycleTable: log_id -> cycles sorted by interval
CycleTable = dict[int, tuple[FixedCycle, ...]]


@dataclass(frozen=True)
class FilterReport:
    input_count: int
    removed_repeated: int
    removed_periodic: int
    output_count: int

    def conserved(self) -> bool:
        return self.input_count == (
            self.removed_repeated + self.removed_periodic + self.output_count
        )


def dedupe_repeated(
    events: Sequence[Event], window: int = DEFAULT_REPEAT_WINDOW
) -> tuple[list[Event], int]:
    """Drop repeats of the same log id within the window of the last retained one."""
    check_sorted(events)
    last_kept: dict[int, int] = {}
    kept: list[Event] = []
    removed = 0
    for ev in events:
        anchor = last_kept.get(ev.log_id)
        if anchor is not None and (ev.timestamp == anchor or ev.timestamp - anchor < window):
            removed += 1
        else:
            kept.append(ev)
            last_kept[ev.log_id] = ev.timestamp
    return kept, removed


def detect_cycles(
    events: Sequence[Event],
    count_threshold: int = DEFAULT_CYCLE_COUNT,
    fraction_threshold: float = DEFAULT_CYCLE_FRACTION,
) -> CycleTable:
    """Find fixed cycles: per log id, interval values whose occurrence count
    clears ``count_threshold`` and whose share of that id's intervals clears
    ``fraction_threshold``."""
    check_sorted(events)
    check_fraction(fraction_threshold, "fraction_threshold")
    last_seen: dict[int, int] = {}
    histograms: dict[int, Counter] = defaultdict(Counter)
    totals: Counter = Counter()
    for ev in events:
        prev = last_seen.get(ev.log_id)
        if prev is not None:
            histograms[ev.log_id][ev.timestamp - prev] += 1
            totals[ev.log_id] += 1
        last_seen[ev.log_id] = ev.timestamp
    table: CycleTable = {}
    for log_id, hist in histograms.items():
        total = totals[log_id]
        cycles = tuple(
            FixedCycle(interval, count, count / total)
            for interval, count in sorted(hist.items())
            if count >= count_threshold and count / total >= fraction_threshold
        )
        if cycles:
            table[log_id] = cycles
    return table


def _gap_matches(gap: int, cycles: tuple[FixedCycle, ...], tolerance: int) -> bool:
    if tolerance == 0:
        return any(gap == c.interval for c in cycles)
    return any(abs(gap - c.interval) <= tolerance for c in cycles)


def drop_periodic(
    events: Sequence[Event], cycles: CycleTable, tolerance: int = 0
) -> tuple[list[Event], int]:
    """Drop events whose gap to their immediate same-id predecessor (in the
    input stream) equals a fixed cycle of that log id.

    ``tolerance`` widens the gap-equality test to +/- that many seconds;
    the default 0 is the exact-integer reading.
    """
    check_sorted(events)
    last_seen: dict[int, int] = {}
    kept: list[Event] = []
    removed = 0
    for ev in events:
        prev = last_seen.get(ev.log_id)
        last_seen[ev.log_id] = ev.timestamp
        table = cycles.get(ev.log_id)
        if prev is not None and table and _gap_matches(ev.timestamp - prev, table, tolerance):
            removed += 1
        else:
            kept.append(ev)
    return kept, removed


def filter_events(
    events: Sequence[Event],
    repeat_window: int = DEFAULT_REPEAT_WINDOW,
    cycle_count_threshold: int = DEFAULT_CYCLE_COUNT,
    cycle_fraction_threshold: float = DEFAULT_CYCLE_FRACTION,
    cycle_tolerance: int = 0,
) -> tuple[list[Event], CycleTable, FilterReport]:
    """Run both filter steps: dedupe, detect cycles on the deduped stream,
    then drop periodic events. Returns the survivors, the cycle table and
    a conservation report."""
    deduped, removed_repeated = dedupe_repeated(events, repeat_window)
    cycles = detect_cycles(deduped, cycle_count_threshold, cycle_fraction_threshold)
    kept, removed_periodic = drop_periodic(deduped, cycles, cycle_tolerance)
    report = FilterReport(
        input_count=len(events),
        removed_repeated=removed_repeated,
        removed_periodic=removed_periodic,
        output_count=len(kept),
    )
    return kept, cycles, report


class EventFilter(TransformerMixin, BaseEstimator):
    """Transformer over event sequences applying both filter steps.

    ``fit`` learns the fixed-cycle table from the deduped stream;
    ``transform`` dedupes and drops periodic events, leaving the report in
    ``report_``. Composes with sklearn pipelines; X is a sequence of Event
    records and y is ignored.
    """

    def __init__(
        self,
        repeat_window: int = DEFAULT_REPEAT_WINDOW,
        cycle_count_threshold: int = DEFAULT_CYCLE_COUNT,
        cycle_fraction_threshold: float = DEFAULT_CYCLE_FRACTION,
        cycle_tolerance: int = 0,
    ):
        self.repeat_window = repeat_window
        self.cycle_count_threshold = cycle_count_threshold
        self.cycle_fraction_threshold = cycle_fraction_threshold
        self.cycle_tolerance = cycle_tolerance

    def fit(self, X, y=None):
        events = as_event_sequence(X)
        deduped, _ = dedupe_repeated(events, self.repeat_window)
        self.cycles_ = detect_cycles(
            deduped, self.cycle_count_threshold, self.cycle_fraction_threshold
        )
        return self

    def transform(self, X) -> list[Event]:
        if not hasattr(self, "cycles_"):
            raise RuntimeError("EventFilter.transform called before fit")
        events = as_event_sequence(X)
        deduped, removed_repeated = dedupe_repeated(events, self.repeat_window)
        kept, removed_periodic = drop_periodic(deduped, self.cycles_, self.cycle_tolerance)
        self.report_ = FilterReport(
            input_count=len(events),
            removed_repeated=removed_repeated,
            removed_periodic=removed_periodic,
            output_count=len(kept),
        )
        return kept
