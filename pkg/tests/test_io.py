from logcorr.filtering import FilterReport, detect_cycles
from logcorr.graphs import build_fcgs, reconstruct_rules
from logcorr.io import (
    file_sha256,
    read_cycles,
    read_events,
    read_fcgs,
    read_prediction_log,
    read_rules,
    write_cycles,
    write_events,
    write_fcg_index,
    write_fcgs,
    write_filter_report,
    write_prediction_log,
    write_rules,
)
from logcorr.mining import RuleKind, RuleStats
from logcorr.prediction import LogEntry

from conftest import make_event, stream_of


def test_events_round_trip(tmp_path):
    events = [
        make_event(1224993860, 1, application="smartd", process_id="3019"),
        make_event(1224993861, 2, application="we\tird", user="root"),
    ]
    path = tmp_path / "events.tsv"
    write_events(path, events, params={"stage": "parse", "year_hint": 2008})
    again, params = read_events(path)
    assert again == events
    assert params["stage"] == "parse"
    first_line = path.read_text().splitlines()[0]
    assert first_line.startswith("# logcorr\tevents")
    body = path.read_text().splitlines()[3]
    assert body.split("\t")[0] == "2008-10-26T04:04:20Z"


def test_cycles_round_trip(tmp_path):
    events = stream_of([(300 * i, 5) for i in range(40)])
    cycles = detect_cycles(events)
    path = tmp_path / "cycles.tsv"
    write_cycles(path, cycles)
    assert read_cycles(path) == cycles


def test_rules_round_trip_with_cluster_flags(tmp_path):
    rules = [
        RuleStats((1, 2), 12, 11, 13, 12, RuleKind.LOCAL),
        RuleStats((2, 3), 5, 4, 20, 18, RuleKind.DISTRIBUTED),
        RuleStats((1, 2, 3), 4, 3, 12, 18, RuleKind.LOCAL),
    ]
    path = tmp_path / "rules.tsv"
    write_rules(path, rules, clusters=[rules[0]], params={"tw": 3600})
    again, clusters, params = read_rules(path)
    assert again == rules
    assert clusters == [rules[0]]
    assert params["tw"] == "3600"
    # confidence in the file equals the recomputed ratio bit-for-bit
    line = path.read_text().splitlines()[2]
    assert float(line.split("\t")[6]) == rules[0].confidence


def test_fcgs_round_trip(tmp_path):
    rules = [
        RuleStats((1, 2), 30, 28, 40, 35, RuleKind.LOCAL),
        RuleStats((2, 3), 25, 24, 35, 30, RuleKind.LOCAL),
        RuleStats((1, 2, 3), 15, 14, 30, 30, RuleKind.LOCAL),
        RuleStats((4, 5), 9, 8, 18, 16, RuleKind.DISTRIBUTED),
    ]
    attrs = {1: (1, 1), 2: (1, 2), 3: (1, 3), 4: (2, 1), 5: (3, 1)}
    build = build_fcgs(rules, log_attributes=attrs, occurrences={1: 40, 2: 35})
    path = tmp_path / "fcgs.txt"
    write_fcgs(path, build)
    again = read_fcgs(path)
    assert reconstruct_rules(again.fcgs) == reconstruct_rules(build.fcgs)
    assert again.index == build.index
    assert [f.scope for f in again.fcgs] == [f.scope for f in build.fcgs]
    assert [f.entrance for f in again.fcgs] == [f.entrance for f in build.fcgs]
    for ours, theirs in zip(build.fcgs, again.fcgs):
        assert {v.vertex_id: (v.kind, v.log_id, v.chain, v.support, v.children)
                for v in ours.vertices.values()} == \
               {v.vertex_id: (v.kind, v.log_id, v.chain, v.support, v.children)
                for v in theirs.vertices.values()}
    write_fcg_index(tmp_path / "index.tsv", build.index)
    assert (tmp_path / "index.tsv").read_text().count("\n") >= len(build.index)


def test_prediction_log_round_trip(tmp_path, registry_with_sources):
    entries = [
        LogEntry("PREDICT", 100, 1, 0.6, 100, 3700),
        LogEntry("HIT", 400, 1, 0.6, 100, 3700, actual_timestamp=400, lead_time=300),
        LogEntry("EXPIRED", 3701, 2, 0.3, 101, 3701),
    ]
    path = tmp_path / "predictions.tsv"
    write_prediction_log(path, entries, registry=registry_with_sources)
    again, _ = read_prediction_log(path)
    assert again == entries
    decorated = path.read_text().splitlines()[1]
    assert "smartd" in decorated


def test_filter_report_written(tmp_path):
    path = tmp_path / "report.txt"
    write_filter_report(path, FilterReport(10, 3, 2, 5))
    text = path.read_text()
    assert "removed_repeated\t3" in text
    assert "output_count\t5" in text


def test_writers_are_deterministic(tmp_path):
    events = [make_event(100, 1), make_event(200, 2)]
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    write_events(a, events, params={"k": "v"})
    write_events(b, events, params={"k": "v"})
    assert file_sha256(a) == file_sha256(b)


def test_sweep_tables_written(tmp_path):
    from logcorr.evaluation import EvalReport
    from logcorr.io import write_sweep_table

    rule_rows = [(900, 15, 0.5), (1800, 20, 0.6)]
    write_sweep_table(tmp_path / "tw.tsv", "window", rule_rows)
    text = (tmp_path / "tw.tsv").read_text()
    assert "window\trule_count\tanalysis_seconds" in text
    assert "900\t15\t0.5" in text

    report = EvalReport(2, 2, 0.5, 0.02, 200.0, 100, 7, 0.1)
    write_sweep_table(tmp_path / "pth.tsv", "probability_threshold", [(0.25, report)])
    text = (tmp_path / "pth.tsv").read_text()
    assert "probability_threshold\ttrue_positives" in text
    assert "0.25\t2\t2\t0.5\t0.02\t200.0" in text
