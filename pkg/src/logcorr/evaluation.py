"""Replay evaluation: mine on history, predict over a later stream, score.

True positives are predictions the predicted event resolved within the
validity window; false positives are predictions that expired (including
any still pending when the stream ends, which get their full window and
are then closed out). Precision is TP/(TP+FP); recall divides TP by the
count of all filtered evaluation events, deliberately harsh: most events
are not predictable, so absolute recall stays low and only trends across
parameters are meaningful.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

from .errors import OverlappingPeriodsError
from .events import Event
from .filtering import (
    DEFAULT_CYCLE_COUNT,
    DEFAULT_CYCLE_FRACTION,
    DEFAULT_REPEAT_WINDOW,
    filter_events,
)
from .mining import MinerParams, MiningResult, mine_apriori, mine_apriori_s
from .prediction import (
    FailurePredictor,
    LogEntry,
    Prediction,
    PredictorParams,
)


@dataclass(frozen=True)
class FilterParams:
    repeat_window: int = DEFAULT_REPEAT_WINDOW
    cycle_count_threshold: int = DEFAULT_CYCLE_COUNT
    cycle_fraction_threshold: float = DEFAULT_CYCLE_FRACTION
    cycle_tolerance: int = 0


@dataclass(frozen=True)
class EvalReport:
    true_positives: int
    false_positives: int
    precision: float | None            # None when nothing resolved
    recall: float
    average_lead_time: float | None    # None when there were no hits
    evaluated_events: int
    rule_count: int
    analysis_seconds: float


def score_predictions(
    predictions: Sequence[Prediction],
    evaluated_events: int,
    rule_count: int = 0,
    analysis_seconds: float = 0.0,
) -> EvalReport:
    """Compute the report from resolved predictions."""
    hits = [p for p in predictions if p.outcome == "HIT"]
    expired = [p for p in predictions if p.outcome == "EXPIRED"]
    tp, fp = len(hits), len(expired)
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / evaluated_events if evaluated_events else 0.0
    lead = sum(p.lead_time for p in hits) / len(hits) if hits else None
    return EvalReport(
        true_positives=tp,
        false_positives=fp,
        precision=precision,
        recall=recall,
        average_lead_time=lead,
        evaluated_events=evaluated_events,
        rule_count=rule_count,
        analysis_seconds=analysis_seconds,
    )


@dataclass
class ReplayResult:
    report: EvalReport
    predictions: list[Prediction]
    log: list[LogEntry]
    mining: MiningResult
    filtered_history: list[Event]
    filtered_evaluation: list[Event]


def _filtered(events: Sequence[Event], params: FilterParams) -> list[Event]:
    kept, _, _ = filter_events(
        events,
        repeat_window=params.repeat_window,
        cycle_count_threshold=params.cycle_count_threshold,
        cycle_fraction_threshold=params.cycle_fraction_threshold,
        cycle_tolerance=params.cycle_tolerance,
    )
    return kept


def replay(
    history: Sequence[Event],
    evaluation: Sequence[Event],
    miner_params: MinerParams,
    predictor_params: PredictorParams,
    algorithm: str = "apriori",
    filter_params: FilterParams = FilterParams(),
    mining: MiningResult | None = None,
) -> ReplayResult:
    """Full analysis-then-prediction cycle over two disjoint periods.

    Both periods are filtered independently (each with its own cycle
    table). Pass a precomputed ``mining`` result to reuse analysis across
    predictor-parameter sweeps.
    """
    if history and evaluation:
        if history[-1].timestamp >= evaluation[0].timestamp:
            raise OverlappingPeriodsError(
                "evaluation period must start after the history period ends"
            )
    filtered_history = _filtered(history, filter_params)
    filtered_evaluation = _filtered(evaluation, filter_params)

    if mining is None:
        miner = mine_apriori if algorithm == "apriori" else mine_apriori_s
        if algorithm not in ("apriori", "apriori-s", "apriori_s"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        mining = miner(filtered_history, miner_params)

    predictor = FailurePredictor(
        probability_threshold=predictor_params.probability_threshold,
        valid_duration=predictor_params.valid_duration,
        mark_lifetime=predictor_params.mark_lifetime,
        strict_chain_order=predictor_params.strict_chain_order,
    )
    predictor.fit(mining)
    predictions, log = predictor.predict_log(filtered_evaluation)
    report = score_predictions(
        predictions,
        evaluated_events=len(filtered_evaluation),
        rule_count=len(mining.rules),
        analysis_seconds=mining.analysis_seconds,
    )
    return ReplayResult(
        report=report,
        predictions=predictions,
        log=log,
        mining=mining,
        filtered_history=filtered_history,
        filtered_evaluation=filtered_evaluation,
    )


def split_at(events: Sequence[Event], boundary: int) -> tuple[list[Event], list[Event]]:
    """History strictly before the boundary timestamp, evaluation at or after."""
    history = [e for e in events if e.timestamp < boundary]
    evaluation = [e for e in events if e.timestamp >= boundary]
    return history, evaluation


def sweep_rule_counts(
    events: Sequence[Event],
    base: MinerParams,
    parameter: str,
    values: Sequence,
    algorithm: str = "apriori",
    filter_params: FilterParams = FilterParams(),
) -> list[tuple[object, int, float]]:
    """Mine the same filtered stream at each parameter value; returns
    (value, rule count, analysis seconds) rows."""
    filtered = _filtered(events, filter_params)
    miner = mine_apriori if algorithm == "apriori" else mine_apriori_s
    rows = []
    for value in values:
        params = dataclasses.replace(base, **{parameter: value})
        result = miner(filtered, params)
        rows.append((value, len(result.rules), result.analysis_seconds))
    return rows


def sweep_predictions(
    history: Sequence[Event],
    evaluation: Sequence[Event],
    miner_params: MinerParams,
    base: PredictorParams,
    parameter: str,
    values: Sequence,
    algorithm: str = "apriori",
    filter_params: FilterParams = FilterParams(),
) -> list[tuple[object, EvalReport]]:
    """Replay at each predictor-parameter value, mining history once."""
    rows = []
    shared: MiningResult | None = None
    for value in values:
        params = dataclasses.replace(base, **{parameter: value})
        result = replay(
            history,
            evaluation,
            miner_params,
            params,
            algorithm=algorithm,
            filter_params=filter_params,
            mining=shared,
        )
        shared = result.mining
        rows.append((value, result.report))
    return rows


def smoothed(values: Sequence[float], window: int = 3) -> list[float]:
    """Centered moving average with clamped edges."""
    out = []
    n = len(values)
    half = window // 2
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out.append(sum(values[lo:hi]) / (hi - lo))
    return out


def trend_holds(values: Sequence[float], direction: str) -> bool:
    """Qualitative trend check for parameter studies: the 3-point smoothed
    series must be monotone in the given direction and strictly so end to
    end."""
    if len(values) < 2:
        return False
    series = smoothed(list(values))
    pairs = list(zip(series, series[1:]))
    if direction == "increasing":
        return all(b >= a for a, b in pairs) and series[-1] > series[0]
    if direction == "decreasing":
        return all(b <= a for a, b in pairs) and series[-1] < series[0]
    raise ValueError(f"direction must be increasing or decreasing, got {direction!r}")
