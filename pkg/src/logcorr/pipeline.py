"""Stage-oriented pipeline over a file-backed store.

One output directory owns one pipeline run. Every stage writes its
artifacts plus a manifest entry recording the parameter snapshot it ran
with and the content hash of every input it consumed. A stage may run
only when its upstream artifacts exist, and any consumer validates the
whole upstream chain: if an artifact's recorded inputs no longer match
the files on disk (for example rules were re-mined with a different
window after the graphs were built), the consumer fails with a staleness
error until the intermediate stage is re-run.

Nothing wall-clock-dependent is written to any artifact or to the
manifest, so a full pipeline re-run over the same inputs is byte
identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import io as store
from .errors import MissingArtifactError, PipelineError, StaleArtifactError
from .evaluation import score_predictions
from .events import IdRegistry
from .filtering import filter_events
from .graphs import build_fcgs
from .ingest import NodeNames, load_config, parse_stream
from .mining import MinerParams, extract_clusters, mine_apriori, mine_apriori_s
from .prediction import FailurePredictor
from .synthesis import SyntheticSpec, generate, render_config_xml, render_raw_lines

ARTIFACT_FILES = {
    "raw": "raw.log",
    "config": "config.xml",
    "spec": "spec.json",
    "formatted": "formatted_events.tsv",
    "registry_events": "registry_event_ids.tsv",
    "registry_logs": "registry_log_ids.tsv",
    "node_names": "node_names.tsv",
    "unparsed": "unparsed_lines.txt",
    "truth": "ground_truth.tsv",
    "filtered": "filtered_events.tsv",
    "cycles": "fixed_cycles.tsv",
    "filter_report": "filter_report.txt",
    "rules": "rules.tsv",
    "fcgs": "fcgs.txt",
    "fcg_index": "fcg_index.tsv",
    "predictions": "predictions.tsv",
    "report": "evaluation_report.txt",
}

STAGES = ("generate", "parse", "filter", "mine", "build-fcg", "predict", "evaluate")


class PipelineManifest:
    """Parameter snapshots and content hashes for one output directory."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self.path = self.out_dir / "manifest.json"
        if self.path.exists():
            self.data = json.loads(self.path.read_text(encoding="utf-8"))
        else:
            self.data = {"artifacts": {}, "stages": {}}

    def save(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.path.write_text(
            json.dumps(self.data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def artifact_path(self, name: str) -> Path:
        return self.out_dir / ARTIFACT_FILES[name]

    def record_stage(self, stage: str, params: dict, inputs: dict[str, str],
                     outputs: list[str]) -> None:
        for name in outputs:
            self.data["artifacts"][name] = {
                "file": ARTIFACT_FILES[name],
                "sha256": store.file_sha256(self.artifact_path(name)),
                "stage": stage,
            }
        self.data["stages"][stage] = {
            "params": params,
            "inputs": inputs,
        }
        self.save()

    def stage_params(self, stage: str) -> dict | None:
        entry = self.data["stages"].get(stage)
        return entry["params"] if entry else None

    # -- validation ---------------------------------------------------------

    def require(self, name: str, consumer: str) -> Path:
        """Validate an artifact and its whole upstream chain before use."""
        path = self.artifact_path(name)
        entry = self.data["artifacts"].get(name)
        if entry is None or not path.exists():
            raise MissingArtifactError(
                f"stage {consumer!r} needs artifact {name!r} "
                f"({ARTIFACT_FILES[name]}); run its producing stage first"
            )
        actual = store.file_sha256(path)
        if actual != entry["sha256"]:
            raise StaleArtifactError(
                f"artifact {name!r} changed on disk since stage "
                f"{entry['stage']!r} recorded it; re-run {entry['stage']!r}"
            )
        self._validate_chain(entry["stage"], name, consumer)
        return path

    def _validate_chain(self, stage: str, artifact: str, consumer: str) -> None:
        entry = self.data["stages"].get(stage)
        if entry is None:
            raise StaleArtifactError(
                f"artifact {artifact!r} has no manifest entry for its producer"
            )
        for input_name, recorded_sha in entry["inputs"].items():
            if input_name.startswith("path:"):
                path = Path(input_name[len("path:"):])
                if not path.is_absolute():
                    path = self.out_dir / path
            else:
                path = self.artifact_path(input_name)
            if not path.exists():
                raise StaleArtifactError(
                    f"artifact {artifact!r} is stale: input {input_name!r} of stage "
                    f"{stage!r} is gone"
                )
            if store.file_sha256(path) != recorded_sha:
                raise StaleArtifactError(
                    f"artifact {artifact!r} is stale: {input_name!r} changed after "
                    f"stage {stage!r} ran; re-run {stage!r} (then its consumers)"
                )
            if not input_name.startswith("path:"):
                upstream = self.data["artifacts"].get(input_name)
                if upstream is not None:
                    self._validate_chain(upstream["stage"], input_name, consumer)


@dataclass
class StageOutcome:
    stage: str
    messages: list[str]


def run_generate(
    out_dir: str | Path,
    spec: SyntheticSpec,
    spec_origin: str = "inline",
) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    corpus = generate(spec)
    (manifest.artifact_path("spec")).write_text(spec.to_json() + "\n", encoding="utf-8")
    (manifest.artifact_path("raw")).write_text(
        "\n".join(render_raw_lines(corpus)) + ("\n" if corpus.events else ""),
        encoding="utf-8",
    )
    (manifest.artifact_path("config")).write_text(render_config_xml(corpus), encoding="utf-8")
    store.write_events(
        manifest.artifact_path("formatted"), corpus.events, params={"stage": "generate"}
    )
    corpus.registry.save(
        manifest.artifact_path("registry_events"), manifest.artifact_path("registry_logs")
    )
    names = NodeNames(corpus.node_names())
    names.save(manifest.artifact_path("node_names"))
    store.write_truth(manifest.artifact_path("truth"), corpus)
    manifest.record_stage(
        "generate",
        params={"seed": spec.seed, "origin": spec_origin},
        inputs={},
        outputs=[
            "spec", "raw", "config", "formatted",
            "registry_events", "registry_logs", "node_names", "truth",
        ],
    )
    return StageOutcome(
        "generate",
        [
            f"generated {len(corpus.events)} events across "
            f"{len({e.node_id for e in corpus.events})} nodes",
            f"planted rules: {len(corpus.truth)}",
        ],
    )


def run_parse(
    out_dir: str | Path,
    config_path: str | Path,
    input_path: str | Path,
    year_hint: int | None = None,
) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    manifest.out_dir.mkdir(parents=True, exist_ok=True)
    config_path, input_path = Path(config_path), Path(input_path)
    if not config_path.exists():
        raise MissingArtifactError(f"config file {config_path} does not exist")
    if not input_path.exists():
        raise MissingArtifactError(f"input log file {input_path} does not exist")
    config = load_config(config_path)
    registry = IdRegistry()
    node_names = NodeNames(config.node_name_map)
    with open(input_path, encoding="utf-8") as fh:
        result = parse_stream(fh, config, registry, year_hint=year_hint, node_names=node_names)
    params = {"year_hint": year_hint}
    store.write_events(manifest.artifact_path("formatted"), result.events, params=params)
    registry.save(
        manifest.artifact_path("registry_events"), manifest.artifact_path("registry_logs")
    )
    node_names.save(manifest.artifact_path("node_names"))
    with open(manifest.artifact_path("unparsed"), "w", encoding="utf-8") as fh:
        for unp in result.unparsed:
            fh.write(f"{unp.reason}\t{unp.line.rstrip(chr(10))}\n")
    def path_key(path: Path) -> str:
        # relative keys keep manifests byte-identical across directories
        try:
            return f"path:{path.resolve().relative_to(manifest.out_dir.resolve())}"
        except ValueError:
            return f"path:{path}"

    manifest.record_stage(
        "parse",
        params=params,
        inputs={
            path_key(config_path): store.file_sha256(config_path),
            path_key(input_path): store.file_sha256(input_path),
        },
        outputs=["formatted", "registry_events", "registry_logs", "node_names", "unparsed"],
    )
    messages = [
        f"parsed {result.parsed_count} events, {result.unparsed_count} unparsed",
        f"log ids: {registry.log_id_count}",
    ]
    if config.database_ignored:
        messages.append("config database section present: parsed and ignored")
    if not result.is_sorted:
        messages.append("warning: events are not in timestamp order")
    return StageOutcome("parse", messages)


def run_filter(
    out_dir: str | Path,
    repeat_window: int = 10,
    cycle_count_threshold: int = 20,
    cycle_fraction_threshold: float = 0.25,
    cycle_tolerance: int = 0,
) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    formatted_path = manifest.require("formatted", "filter")
    events, _ = store.read_events(formatted_path)
    events.sort(key=lambda e: e.timestamp)  # stable: ties keep input order
    kept, cycles, report = filter_events(
        events,
        repeat_window=repeat_window,
        cycle_count_threshold=cycle_count_threshold,
        cycle_fraction_threshold=cycle_fraction_threshold,
        cycle_tolerance=cycle_tolerance,
    )
    params = {
        "repeat_window": repeat_window,
        "cycle_count_threshold": cycle_count_threshold,
        "cycle_fraction_threshold": cycle_fraction_threshold,
        "cycle_tolerance": cycle_tolerance,
    }
    store.write_events(manifest.artifact_path("filtered"), kept, params=params)
    store.write_cycles(manifest.artifact_path("cycles"), cycles, params=params)
    store.write_filter_report(manifest.artifact_path("filter_report"), report, params=params)
    manifest.record_stage(
        "filter",
        params=params,
        inputs={"formatted": store.file_sha256(formatted_path)},
        outputs=["filtered", "cycles", "filter_report"],
    )
    return StageOutcome(
        "filter",
        [
            f"input {report.input_count}, repeated -{report.removed_repeated}, "
            f"periodic -{report.removed_periodic}, kept {report.output_count}"
        ],
    )


def run_mine(
    out_dir: str | Path,
    window: int = 3600,
    support_threshold: int = 5,
    confidence_threshold: float = 0.25,
    cluster_support_threshold: int = 10,
    cluster_confidence_threshold: float = 0.8,
    cluster_posterior_threshold: float = 0.8,
    max_arity: int = 3,
    algorithm: str = "apriori",
    eval_start: int | None = None,
) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    filtered_path = manifest.require("filtered", "mine")
    events, _ = store.read_events(filtered_path)
    if eval_start is not None:
        events = [e for e in events if e.timestamp < eval_start]
    miner_params = MinerParams(
        window=window,
        support_threshold=support_threshold,
        confidence_threshold=confidence_threshold,
        cluster_support_threshold=cluster_support_threshold,
        cluster_confidence_threshold=cluster_confidence_threshold,
        cluster_posterior_threshold=cluster_posterior_threshold,
        max_arity=max_arity,
    )
    if algorithm == "apriori":
        result = mine_apriori(events, miner_params)
    elif algorithm in ("apriori-s", "apriori_s"):
        result = mine_apriori_s(events, miner_params)
    else:
        raise PipelineError(f"unknown algorithm {algorithm!r}")
    clusters = extract_clusters(
        result.rules,
        cluster_support_threshold,
        cluster_confidence_threshold,
        cluster_posterior_threshold,
    )
    params = {
        "window": window,
        "support_threshold": support_threshold,
        "confidence_threshold": confidence_threshold,
        "cluster_support_threshold": cluster_support_threshold,
        "cluster_confidence_threshold": cluster_confidence_threshold,
        "cluster_posterior_threshold": cluster_posterior_threshold,
        "max_arity": max_arity,
        "algorithm": algorithm,
        "eval_start": eval_start,
    }
    store.write_rules(manifest.artifact_path("rules"), result.rules, clusters, params=params)
    manifest.record_stage(
        "mine",
        params=params,
        inputs={"filtered": store.file_sha256(filtered_path)},
        outputs=["rules"],
    )
    return StageOutcome(
        "mine",
        [
            f"{len(result.rules)} rules ({len(clusters)} clusters) from "
            f"{len(events)} events",
            f"analysis time: {result.analysis_seconds:.3f}s",
        ],
    )


def run_build_fcg(out_dir: str | Path) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    rules_path = manifest.require("rules", "build-fcg")
    filtered_path = manifest.require("filtered", "build-fcg")
    events_path = manifest.require("registry_events", "build-fcg")
    logs_path = manifest.require("registry_logs", "build-fcg")
    rules, _clusters, rule_params = store.read_rules(rules_path)
    registry = IdRegistry.load(events_path, logs_path)
    events, _ = store.read_events(filtered_path)
    occurrences: dict[int, int] = {}
    for ev in events:
        occurrences[ev.log_id] = occurrences.get(ev.log_id, 0) + 1
    build = build_fcgs(rules, registry=registry, occurrences=occurrences)
    params = {"from_rules": rule_params.get("algorithm", "")}
    store.write_fcgs(manifest.artifact_path("fcgs"), build, params=params)
    store.write_fcg_index(manifest.artifact_path("fcg_index"), build.index, params=params)
    manifest.record_stage(
        "build-fcg",
        params=params,
        inputs={
            "rules": store.file_sha256(rules_path),
            "filtered": store.file_sha256(filtered_path),
            "registry_events": store.file_sha256(events_path),
            "registry_logs": store.file_sha256(logs_path),
        },
        outputs=["fcgs", "fcg_index"],
    )
    local = sum(1 for f in build.fcgs if f.scope.node_id is not None)
    return StageOutcome(
        "build-fcg",
        [
            f"{len(build.fcgs)} graphs ({local} local, "
            f"{len(build.fcgs) - local} distributed), "
            f"{len(build.skipped)} rule(s) skipped to keep graphs acyclic"
        ],
    )


def run_predict(
    out_dir: str | Path,
    probability_threshold: float = 0.25,
    valid_duration: int = 3600,
    mark_lifetime: int | None = None,
    eval_start: int | None = None,
    strict_chain_order: bool = False,
) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    fcgs_path = manifest.require("fcgs", "predict")
    filtered_path = manifest.require("filtered", "predict")
    events_path = manifest.require("registry_events", "predict")
    logs_path = manifest.require("registry_logs", "predict")
    mine_params = manifest.stage_params("mine") or {}
    if mark_lifetime is None:
        mark_lifetime = int(mine_params.get("window") or 3600)
    if eval_start is None:
        eval_start = mine_params.get("eval_start")
    mined_boundary = mine_params.get("eval_start")
    if mined_boundary is not None and (eval_start is None or eval_start < mined_boundary):
        raise PipelineError(
            "prediction period overlaps the mining history "
            f"(mine ran with eval_start={mined_boundary})"
        )
    if mined_boundary is None and eval_start is not None:
        raise PipelineError(
            "mine ran without --eval-start, so its history covers the whole "
            "stream; re-run mine with --eval-start to carve out a prediction period"
        )
    build = store.read_fcgs(fcgs_path)
    registry = IdRegistry.load(events_path, logs_path)
    events, _ = store.read_events(filtered_path)
    if eval_start is not None:
        events = [e for e in events if e.timestamp >= eval_start]
    predictor = FailurePredictor(
        probability_threshold=probability_threshold,
        valid_duration=valid_duration,
        mark_lifetime=mark_lifetime,
        strict_chain_order=strict_chain_order,
    )
    predictor.fit(build)
    _, log = predictor.predict_log(events)
    params = {
        "probability_threshold": probability_threshold,
        "valid_duration": valid_duration,
        "mark_lifetime": mark_lifetime,
        "eval_start": eval_start,
        "strict_chain_order": strict_chain_order,
    }
    store.write_prediction_log(
        manifest.artifact_path("predictions"), log, registry=registry, params=params
    )
    manifest.record_stage(
        "predict",
        params=params,
        inputs={
            "fcgs": store.file_sha256(fcgs_path),
            "filtered": store.file_sha256(filtered_path),
            "registry_events": store.file_sha256(events_path),
            "registry_logs": store.file_sha256(logs_path),
        },
        outputs=["predictions"],
    )
    emitted = sum(1 for e in log if e.kind == "PREDICT")
    return StageOutcome(
        "predict",
        [f"{emitted} predictions over {len(events)} events"],
    )


def run_evaluate(out_dir: str | Path) -> StageOutcome:
    manifest = PipelineManifest(out_dir)
    predictions_path = manifest.require("predictions", "evaluate")
    filtered_path = manifest.require("filtered", "evaluate")
    rules_path = manifest.require("rules", "evaluate")
    entries, predict_params = store.read_prediction_log(predictions_path)
    rules, _, _ = store.read_rules(rules_path)
    events, _ = store.read_events(filtered_path)
    eval_start = predict_params.get("eval_start")
    if eval_start and eval_start != "None":
        boundary = int(eval_start)
        events = [e for e in events if e.timestamp >= boundary]

    from .prediction import Prediction

    resolved = []
    for entry in entries:
        if entry.kind == "HIT":
            resolved.append(
                Prediction(
                    log_id=entry.log_id,
                    probability=entry.probability,
                    predicting_point=entry.predicting_point,
                    expiry=entry.expiry,
                    outcome="HIT",
                    actual_timestamp=entry.actual_timestamp,
                )
            )
        elif entry.kind == "EXPIRED":
            resolved.append(
                Prediction(
                    log_id=entry.log_id,
                    probability=entry.probability,
                    predicting_point=entry.predicting_point,
                    expiry=entry.expiry,
                    outcome="EXPIRED",
                )
            )
    report = score_predictions(resolved, evaluated_events=len(events), rule_count=len(rules))
    params = {"eval_start": eval_start}
    store.write_eval_report(manifest.artifact_path("report"), report, params=params)
    manifest.record_stage(
        "evaluate",
        params=params,
        inputs={
            "predictions": store.file_sha256(predictions_path),
            "filtered": store.file_sha256(filtered_path),
            "rules": store.file_sha256(rules_path),
        },
        outputs=["report"],
    )
    precision = "undefined" if report.precision is None else f"{report.precision:.4f}"
    return StageOutcome(
        "evaluate",
        [
            f"TP {report.true_positives}, FP {report.false_positives}, "
            f"precision {precision}, recall {report.recall:.4f}"
        ],
    )
