"""logcorr: temporal correlation rule mining and failure prediction for
cluster system logs.

The pipeline runs parse -> filter -> mine -> build-fcg -> predict ->
evaluate, each stage available as a library call, an estimator-style
class, and a CLI subcommand.
"""

from .events import Event, EventType, IdRegistry, Severity
from .ingest import Config, NodeNames, Unparsed, classify, load_config, parse_config, parse_line, parse_stream
from .filtering import (
    EventFilter,
    FilterReport,
    FixedCycle,
    dedupe_repeated,
    detect_cycles,
    drop_periodic,
    filter_events,
)
from .mining import (
    CorrelationMiner,
    MinerParams,
    MiningResult,
    RuleKind,
    RuleStats,
    count_tsl,
    extract_clusters,
    frequent_events,
    gen_candidates,
    mine_apriori,
    mine_apriori_s,
)
from .graphs import (
    FCG,
    FCGBuild,
    Inference,
    build_fcgs,
    lookup,
    reconstruct_rules,
    recover_missing,
    topological_order,
)
from .prediction import (
    FailurePredictor,
    LogEntry,
    Prediction,
    PredictorParams,
    PredictorState,
    finish,
    observe,
    resolve_expired,
)
from .oracle import oracle_mine
from .synthesis import (
    BackgroundStream,
    BurstInjection,
    GeneratedCorpus,
    PeriodicInjection,
    PlantedRule,
    SourceSpec,
    SyntheticSpec,
    generate,
    make_catalog,
    render_config_xml,
    render_raw_lines,
)
from .evaluation import (
    EvalReport,
    FilterParams,
    replay,
    score_predictions,
    split_at,
    sweep_predictions,
    sweep_rule_counts,
    trend_holds,
)

__version__ = "0.1.0"

__all__ = [
    "Event", "EventType", "IdRegistry", "Severity",
    "Config", "NodeNames", "Unparsed", "classify", "load_config", "parse_config",
    "parse_line", "parse_stream",
    "EventFilter", "FilterReport", "FixedCycle", "dedupe_repeated", "detect_cycles",
    "drop_periodic", "filter_events",
    "CorrelationMiner", "MinerParams", "MiningResult", "RuleKind", "RuleStats",
    "count_tsl", "extract_clusters", "frequent_events", "gen_candidates",
    "mine_apriori", "mine_apriori_s",
    "FCG", "FCGBuild", "Inference", "build_fcgs", "lookup", "reconstruct_rules",
    "recover_missing", "topological_order",
    "FailurePredictor", "LogEntry", "Prediction", "PredictorParams", "PredictorState",
    "finish", "observe", "resolve_expired",
    "oracle_mine",
    "BackgroundStream", "BurstInjection", "GeneratedCorpus", "PeriodicInjection",
    "PlantedRule", "SourceSpec", "SyntheticSpec", "generate", "make_catalog",
    "render_config_xml", "render_raw_lines",
    "EvalReport", "FilterParams", "replay", "score_predictions", "split_at",
    "sweep_predictions", "sweep_rule_counts", "trend_holds",
]
