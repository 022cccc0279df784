"""Readers and writers for the file-backed store.

Every artifact is a UTF-8 text file: comment-prefixed header lines carry
the artifact kind and the parameter snapshot it was produced under, then
one record per line, tab-separated. Writers are deterministic given their
inputs; nothing wall-clock-dependent is ever written, so re-running a
stage with identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .events import Event, EventType, IdRegistry, Severity
from .filtering import CycleTable, FilterReport, FixedCycle
from .graphs import FCG, Edge, EdgeKind, FCGBuild, FCGIndex, FCGScope, SkippedRule, Vertex, VertexKind
from .mining import RuleKind, RuleStats
from .prediction import LogEntry
from .evaluation import EvalReport


def _esc(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unesc(text: str) -> str:
    out = []
    it = iter(text)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, "")
        out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(nxt, nxt))
    return "".join(out)


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_header(fh, kind: str, params: Mapping[str, object] | None = None) -> None:
    fh.write(f"# logcorr\t{kind}\tv1\n")
    for key in sorted(params or {}):
        fh.write(f"# param\t{key}\t{params[key]}\n")


def read_header(lines: Iterable[str]) -> tuple[dict[str, str], list[str]]:
    """Split header comments from body lines; returns (params, body)."""
    params: dict[str, str] = {}
    body: list[str] = []
    for line in lines:
        line = line.rstrip("\n")
        if line.startswith("#"):
            parts = line.split("\t")
            if len(parts) == 3 and parts[0] == "# param":
                params[parts[1]] = parts[2]
            continue
        if line:
            body.append(line)
    return params, body


def _iso(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- events ----------------------------------------------------------------


def write_events(path: str | Path, events: Sequence[Event], params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "events", params)
        for ev in events:
            fh.write(
                "\t".join(
                    [
                        _iso(ev.timestamp),
                        str(ev.timestamp),
                        str(ev.log_id),
                        str(ev.node_id),
                        str(ev.event_id),
                        ev.severity.name,
                        ev.event_type.name,
                        _esc(ev.application),
                        _esc(ev.process_id),
                        _esc(ev.user),
                    ]
                )
                + "\n"
            )


def read_events(path: str | Path) -> tuple[list[Event], dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        params, body = read_header(fh)
    events = []
    for line in body:
        (
            _iso_text,
            epoch,
            log_id,
            node_id,
            event_id,
            severity,
            event_type,
            application,
            process_id,
            user,
        ) = line.split("\t")
        events.append(
            Event(
                timestamp=int(epoch),
                log_id=int(log_id),
                node_id=int(node_id),
                event_id=int(event_id),
                severity=Severity.from_name(severity),
                event_type=EventType.from_name(event_type),
                application=_unesc(application),
                process_id=_unesc(process_id),
                user=_unesc(user),
            )
        )
    return events, params


# -- filter artifacts --------------------------------------------------------


def write_cycles(path: str | Path, cycles: CycleTable, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "fixed-cycles", params)
        for log_id in sorted(cycles):
            for cycle in cycles[log_id]:
                fh.write(f"{log_id}\t{cycle.interval}\t{cycle.count}\t{cycle.fraction!r}\n")


def read_cycles(path: str | Path) -> CycleTable:
    with open(path, encoding="utf-8") as fh:
        _, body = read_header(fh)
    table: dict[int, list[FixedCycle]] = {}
    for line in body:
        log_id, interval, count, fraction = line.split("\t")
        table.setdefault(int(log_id), []).append(
            FixedCycle(int(interval), int(count), float(fraction))
        )
    return {lid: tuple(cycles) for lid, cycles in table.items()}


def write_filter_report(path: str | Path, report: FilterReport, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "filter-report", params)
        fh.write(f"input_count\t{report.input_count}\n")
        fh.write(f"removed_repeated\t{report.removed_repeated}\n")
        fh.write(f"removed_periodic\t{report.removed_periodic}\n")
        fh.write(f"output_count\t{report.output_count}\n")


# -- rules -------------------------------------------------------------------


def write_rules(
    path: str | Path,
    rules: Sequence[RuleStats],
    clusters: Iterable[RuleStats] = (),
    params=None,
) -> None:
    cluster_keys = {r.tsl for r in clusters}
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "rules", params)
        for rule in sorted(rules, key=lambda r: (r.arity, r.tsl)):
            fh.write(
                "\t".join(
                    [
                        str(rule.arity),
                        ",".join(str(lid) for lid in rule.tsl),
                        str(rule.support_count),
                        str(rule.posterior_count),
                        str(rule.preceding_occurrences),
                        str(rule.posterior_event_occurrences),
                        repr(rule.confidence),
                        repr(rule.posterior),
                        rule.kind.value if rule.kind else "UNKNOWN",
                        "1" if rule.tsl in cluster_keys else "0",
                    ]
                )
                + "\n"
            )


def read_rules(path: str | Path) -> tuple[list[RuleStats], list[RuleStats], dict[str, str]]:
    """Returns (rules, clusters, header params)."""
    with open(path, encoding="utf-8") as fh:
        params, body = read_header(fh)
    rules, clusters = [], []
    for line in body:
        (
            _arity,
            tsl_text,
            support,
            posterior,
            preceding,
            posterior_events,
            _conf,
            _post,
            kind,
            cluster_flag,
        ) = line.split("\t")
        rule = RuleStats(
            tsl=tuple(int(x) for x in tsl_text.split(",")),
            support_count=int(support),
            posterior_count=int(posterior),
            preceding_occurrences=int(preceding),
            posterior_event_occurrences=int(posterior_events),
            kind=RuleKind(kind) if kind != "UNKNOWN" else None,
        )
        rules.append(rule)
        if cluster_flag == "1":
            clusters.append(rule)
    return rules, clusters, params


# -- FCGs ----------------------------------------------------------------------


def write_fcgs(path: str | Path, build: FCGBuild, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "fcgs", params)
        for fcg in build.fcgs:
            fh.write(f"fcg\t{fcg.fcg_id}\t{fcg.scope.label()}\t{fcg.entrance}\n")
            for vid in sorted(fcg.vertices):
                v = fcg.vertices[vid]
                if v.kind is VertexKind.DOMINANT:
                    fh.write(
                        f"vertex\t{vid}\tDOMINANT\t{v.log_id}\t{v.node_id}\t"
                        f"{v.event_id}\t{v.support}\n"
                    )
                else:
                    chain = ",".join(str(x) for x in v.chain)
                    fh.write(f"vertex\t{vid}\tRECESSIVE\t{chain}\n")
            for eid in sorted(fcg.edges):
                e = fcg.edges[eid]
                if e.is_membership:
                    fh.write(
                        f"member\t{eid}\t{e.tail}\t{e.head}\t{e.order}\n"
                    )
                else:
                    fh.write(
                        f"edge\t{eid}\t{e.tail}\t{e.head}\t{e.kind.value}\t"
                        f"{e.support_count}\t{e.posterior_count}\t"
                        f"{e.preceding_occurrences}\t{e.posterior_event_occurrences}\n"
                    )
        for skip in build.skipped:
            tsl = ",".join(str(x) for x in skip.tsl)
            fh.write(f"skipped\t{skip.scope}\t{tsl}\t{skip.reason}\n")


def read_fcgs(path: str | Path) -> FCGBuild:
    with open(path, encoding="utf-8") as fh:
        _, body = read_header(fh)
    fcgs: list[FCG] = []
    skipped: list[SkippedRule] = []
    current: FCG | None = None
    for line in body:
        parts = line.split("\t")
        tag = parts[0]
        if tag == "fcg":
            _, fcg_id, scope_label, entrance = parts
            if scope_label.startswith("LOCAL:"):
                scope = FCGScope(RuleKind.LOCAL, int(scope_label.split(":")[1]))
            else:
                scope = FCGScope(RuleKind.DISTRIBUTED)
            current = FCG(
                fcg_id=int(fcg_id),
                scope=scope,
                entrance=int(entrance),
                vertices={},
                edges={},
            )
            fcgs.append(current)
        elif tag == "vertex":
            vid = int(parts[1])
            if parts[2] == "DOMINANT":
                _, _, _, log_id, node_id, event_id, support = parts
                current.vertices[vid] = Vertex(
                    vertex_id=vid,
                    kind=VertexKind.DOMINANT,
                    log_id=int(log_id),
                    node_id=int(node_id) if node_id != "None" else None,
                    event_id=int(event_id) if event_id != "None" else None,
                    support=int(support),
                )
            else:
                chain = tuple(int(x) for x in parts[3].split(","))
                current.vertices[vid] = Vertex(
                    vertex_id=vid, kind=VertexKind.RECESSIVE, chain=chain
                )
        elif tag == "member":
            _, eid, tail, head, order = parts
            current.edges[int(eid)] = Edge(
                edge_id=int(eid),
                tail=int(tail),
                head=int(head),
                kind=EdgeKind.RECESSIVE,
                order=int(order),
            )
        elif tag == "edge":
            _, eid, tail, head, kind, support, posterior, preceding, post_events = parts
            current.edges[int(eid)] = Edge(
                edge_id=int(eid),
                tail=int(tail),
                head=int(head),
                kind=EdgeKind(kind),
                support_count=int(support),
                posterior_count=int(posterior),
                preceding_occurrences=int(preceding),
                posterior_event_occurrences=int(post_events),
            )
        elif tag == "skipped":
            skipped.append(SkippedRule(parts[1], tuple(int(x) for x in parts[2].split(",")), parts[3]))
        else:
            raise ValueError(f"unknown fcg record {tag!r}")
    index: FCGIndex = {}
    for fcg in fcgs:
        for vid, vertex in fcg.vertices.items():
            if vertex.kind is VertexKind.DOMINANT:
                index.setdefault(vertex.log_id, []).append((fcg.fcg_id, vid))
            vertex.children = sorted(
                {e.head for e in fcg.edges.values() if e.tail == vid}
            )
    for positions in index.values():
        positions.sort()
    return FCGBuild(fcgs=fcgs, index=index, skipped=skipped)


def write_fcg_index(path: str | Path, index: FCGIndex, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "fcg-index", params)
        for log_id in sorted(index):
            entries = ",".join(f"{fid}:{vid}" for fid, vid in index[log_id])
            fh.write(f"{log_id}\t{entries}\n")


# -- predictions ----------------------------------------------------------------


def write_prediction_log(
    path: str | Path,
    entries: Sequence[LogEntry],
    registry: IdRegistry | None = None,
    params=None,
) -> None:
    """One line per emission or transition, decorated with the predicted
    event's attributes when a registry is supplied."""
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "predictions", params)
        for entry in entries:
            if registry is not None:
                node, eid, app, _pid, sev, typ = registry.log_attributes(entry.log_id)
                attrs = [str(node), str(eid), _esc(app), sev.name, typ.name]
            else:
                attrs = ["", "", "", "", ""]
            fh.write(
                "\t".join(
                    [
                        entry.kind,
                        str(entry.at),
                        str(entry.log_id),
                        *attrs,
                        repr(entry.probability),
                        str(entry.predicting_point),
                        str(entry.expiry),
                        "" if entry.actual_timestamp is None else str(entry.actual_timestamp),
                        "" if entry.lead_time is None else str(entry.lead_time),
                    ]
                )
                + "\n"
            )


def read_prediction_log(path: str | Path) -> tuple[list[LogEntry], dict[str, str]]:
    with open(path, encoding="utf-8") as fh:
        params, body = read_header(fh)
    entries = []
    for line in body:
        parts = line.split("\t")
        kind, at, log_id = parts[0], parts[1], parts[2]
        probability, predicting_point, expiry, actual, lead = parts[8:13]
        entries.append(
            LogEntry(
                kind=kind,
                at=int(at),
                log_id=int(log_id),
                probability=float(probability),
                predicting_point=int(predicting_point),
                expiry=int(expiry),
                actual_timestamp=int(actual) if actual else None,
                lead_time=int(lead) if lead else None,
            )
        )
    return entries, params


# -- reports ---------------------------------------------------------------------


def write_eval_report(path: str | Path, report: EvalReport, params=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "evaluation-report", params)
        fh.write(f"true_positives\t{report.true_positives}\n")
        fh.write(f"false_positives\t{report.false_positives}\n")
        precision = "undefined" if report.precision is None else repr(report.precision)
        fh.write(f"precision\t{precision}\n")
        fh.write(f"recall\t{report.recall!r}\n")
        lead = "undefined" if report.average_lead_time is None else repr(report.average_lead_time)
        fh.write(f"average_lead_time\t{lead}\n")
        fh.write(f"evaluated_events\t{report.evaluated_events}\n")
        fh.write(f"rule_count\t{report.rule_count}\n")


def write_sweep_table(path: str | Path, parameter: str, rows, params=None) -> None:
    """Delimited sweep table for external plotting.

    Accepts rows from sweep_rule_counts (value, count, seconds) or from
    sweep_predictions (value, EvalReport).
    """
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "sweep", params)
        first = rows[0][1] if rows else None
        if isinstance(first, EvalReport):
            fh.write(f"{parameter}\ttrue_positives\tfalse_positives\tprecision\trecall"
                     "\taverage_lead_time\n")
            for value, report in rows:
                precision = "" if report.precision is None else repr(report.precision)
                lead = "" if report.average_lead_time is None else repr(report.average_lead_time)
                fh.write(
                    f"{value}\t{report.true_positives}\t{report.false_positives}\t"
                    f"{precision}\t{report.recall!r}\t{lead}\n"
                )
        else:
            fh.write(f"{parameter}\trule_count\tanalysis_seconds\n")
            for value, count, seconds in rows:
                fh.write(f"{value}\t{count}\t{seconds!r}\n")


def write_truth(path: str | Path, corpus, params=None) -> None:
    """Ground-truth manifest for a generated corpus."""
    with open(path, "w", encoding="utf-8") as fh:
        write_header(fh, "ground-truth", params)
        fh.write(f"seed\t{corpus.spec.seed}\n")
        fh.write(f"events\t{len(corpus.events)}\n")
        for t in corpus.truth:
            fh.write(
                "planted\t"
                + "\t".join(
                    [
                        str(t.trigger_log_id),
                        str(t.consequent_log_id),
                        repr(t.probability),
                        str(t.delay_min),
                        str(t.delay_max),
                        str(t.triggers_emitted),
                        str(t.consequents_emitted),
                        "1" if t.same_node else "0",
                        "1" if t.same_application else "0",
                        "1" if t.same_event_type else "0",
                    ]
                )
                + "\n"
            )
