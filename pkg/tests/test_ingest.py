import calendar
import random

import pytest

from logcorr.errors import ConfigError, DuplicateDefinitionError, UnknownDefinitionError
from logcorr.events import EventType, IdRegistry, Severity
from logcorr.ingest import (
    NodeNames,
    Unparsed,
    classify,
    parse_config,
    parse_line,
    parse_stream,
    resolve_timestamp,
)

from conftest import FIG7_XML


def test_fig7_document_loads(fig7_config):
    assert len(fig7_config.formats) == 3
    assert fig7_config.database_ignored
    table = {(k.text, k.severity, k.event_type) for k in fig7_config.keywords}
    assert ("unreadable", Severity.ERROR, EventType.FILESYSTEM) in table
    assert fig7_config.is_classifying


def test_flat_form_equivalent(fig7_config):
    flat = "\n".join(
        ["# flat config"]
        + [f"definition\t{n}\t{p}" for n, p in fig7_config.definitions.items()]
        + [f"format\t{f.name}\t{f.template}" for f in fig7_config.formats]
        + [
            f"keyword\t{k.text}\t{k.severity.name.lower()}\t{k.event_type.name.lower()}"
            for k in fig7_config.keywords
        ]
        + ["node\tcompute-3-9.local\t69"]
    )
    cfg = parse_config(flat)
    assert [f.name for f in cfg.formats] == [f.name for f in fig7_config.formats]
    assert [(k.text, k.severity, k.event_type) for k in cfg.keywords] == [
        (k.text, k.severity, k.event_type) for k in fig7_config.keywords
    ]
    assert cfg.node_name_map == {"compute-3-9.local": 69}


def test_zero_keywords_is_valid_but_non_classifying():
    cfg = parse_config(
        "definition\ttimestamp\t[a-zA-Z]{3}\\s{1,2}[0-9]{1,2} [0-9]{2}:[0-9]{2}:[0-9]{2}\n"
        "definition\tnodename\t\\S+\n"
        "definition\tdescription\t.*\n"
        "format\tf1\t%timestamp %nodename %description\n"
    )
    assert not cfg.is_classifying
    sev, typ, kw = classify("anything at all", cfg)
    assert (sev, typ, kw) == (Severity.INFO, EventType.SYSTEM, None)


def test_unknown_token_names_the_format():
    with pytest.raises(UnknownDefinitionError, match="f1.*%foo"):
        parse_config(
            "definition\ttimestamp\t.*\ndefinition\tnodename\t\\S+\nformat\tf1\t%timestamp %nodename %foo\n"
        )


def test_duplicate_definition_rejected():
    with pytest.raises(DuplicateDefinitionError):
        parse_config("definition\ta\tx\ndefinition\ta\ty\n")


def test_malformed_xml_rejected():
    with pytest.raises(ConfigError):
        parse_config("<configuration><definitions>")


def test_classify_paper_examples(fig7_config):
    sev, typ, kw = classify(
        "Device: /dev/sdd, FAILED SMART self-check. BACK UP DATA NOW!", fig7_config
    )
    assert (sev, typ, kw) == (Severity.ERROR, EventType.FILESYSTEM, "FAILED SMART")
    sev, typ, kw = classify(
        "Device: /dev/sda, 352 Currently unreadable (pending) sectors", fig7_config
    )
    assert (sev, typ, kw) == (Severity.ERROR, EventType.FILESYSTEM, "unreadable")
    assert classify("", fig7_config) == (Severity.INFO, EventType.SYSTEM, None)


def test_classification_precedence_is_config_order(fig7_config):
    # "unreadable" precedes "uncorrectable" in the table; a description
    # containing both takes the earlier keyword.
    sev, typ, kw = classify("unreadable and uncorrectable sectors", fig7_config)
    assert kw == "unreadable"


def test_parse_line_smartd_example(fig7_config):
    reg = IdRegistry()
    ev = parse_line(
        "Oct 26 04:04:20 compute-3-9.local smartd[3019]: Device: /dev/sdd, "
        "FAILED SMART self-check. BACK UP DATA NOW!",
        fig7_config,
        reg,
        year_hint=2008,
        node_names=NodeNames(),
    )
    assert ev.application == "smartd"
    assert ev.process_id == "3019"
    assert ev.severity is Severity.ERROR
    assert ev.event_type is EventType.FILESYSTEM
    assert ev.timestamp == calendar.timegm((2008, 10, 26, 4, 4, 20, 0, 0, 0))
    assert reg.log_tuple(ev.log_id) == (ev.node_id, ev.event_id, "smartd", "3019")


def test_parse_line_sshd_example(fig7_config):
    reg = IdRegistry()
    names = NodeNames()
    ev = parse_line(
        "Nov 28 13:44:17 compute-5-4.local sshd[2753]: error: Bind to port 22 "
        "on 0.0.0.0 failed: Address already in use.",
        fig7_config,
        reg,
        2008,
        names,
    )
    assert ev.application == "sshd"
    assert names.items() == [("compute-5-4.local", 1)]


def test_parse_line_garbage_is_unparsed(fig7_config):
    out = parse_line("garbage ###", fig7_config, IdRegistry(), 2008)
    assert isinstance(out, Unparsed)
    assert out.reason == "no format matched"


def test_format_precedence_first_match_wins(fig7_config):
    # This line matches format1, but would also match format2/format3 with
    # different field splits; format1 must win.
    reg = IdRegistry()
    ev = parse_line(
        "Oct 26 04:04:20 n1 app[1]: hello world", fig7_config, reg, 2008, NodeNames()
    )
    assert ev.application == "app"
    assert ev.process_id == "1"


def test_parse_line_pure_given_config_and_registry(fig7_config):
    line = "Oct 26 04:04:20 n1 app[1]: PCI something"
    a = parse_line(line, fig7_config, IdRegistry(), 2008, NodeNames())
    b = parse_line(line, fig7_config, IdRegistry(), 2008, NodeNames())
    assert a == b


def test_node_name_map_pins_ids():
    cfg = parse_config(FIG7_XML.replace(
        "</configuration>",
        '<nodemap><node name="compute-3-9.local" id="69" /></nodemap></configuration>',
    ))
    reg = IdRegistry()
    names = NodeNames(cfg.node_name_map)
    ev = parse_line(
        "Oct 26 04:04:20 compute-3-9.local smartd[3019]: x", cfg, reg, 2008, names
    )
    assert ev.node_id == 69


def test_resolve_timestamp_layouts():
    syslog, month = resolve_timestamp("Oct 26 04:04:20", 2008)
    assert month == 10
    compact, _ = resolve_timestamp("20081026040420", 1999)
    iso, _ = resolve_timestamp("2008-10-26T04:04:20", 1999)
    assert syslog == compact == iso
    with pytest.raises(ValueError):
        resolve_timestamp("Feb 30 00:00:00", 2008)
    with pytest.raises(ValueError):
        resolve_timestamp("whenever", 2008)


def test_parse_stream_counts(fig7_config):
    lines = [
        "Oct 26 04:04:20 n1 app[1]: PCI one",
        "Oct 26 04:04:21 n1 app[1]: PCI two",
        "Oct 26 04:04:22 n2 app[2]: ACPI three",
        "not a log line at all @@",
    ]
    result = parse_stream(lines, fig7_config, IdRegistry(), year_hint=2008)
    assert result.parsed_count == 3
    assert result.unparsed_count == 1
    assert result.is_sorted


def test_parse_stream_empty(fig7_config):
    result = parse_stream([], fig7_config, IdRegistry(), 2008)
    assert result.parsed_count == 0 and result.unparsed_count == 0


def test_year_rollover_dec_to_jan(fig7_config):
    lines = [
        "Dec 31 23:59:58 n1 app[1]: PCI a",
        "Dec 31 23:59:59 n1 app[1]: PCI b",
        "Jan  1 00:00:01 n1 app[1]: PCI c",
    ]
    result = parse_stream(lines, fig7_config, IdRegistry(), year_hint=2008)
    ts = [ev.timestamp for ev in result.events]
    assert ts == sorted(ts)
    assert ts[2] - ts[1] == 2
    assert result.is_sorted


def test_ten_thousand_lines_against_naive_splitter(fig7_config):
    # Generate well-formed format1 lines, parse them, and cross-check every
    # field against an independent whitespace-splitting oracle, including
    # id consistency via independently maintained assignment dicts.
    rng = random.Random(10_000)
    apps = ["smartd", "sshd", "kernel"]
    keywords = ["PCI", "ACPI", "unreadable", "Link is Down"]
    lines = []
    base = ("Oct", 26)
    for i in range(10_000):
        sec = i % 60
        minute = (i // 60) % 60
        hour = (i // 3600) % 24
        node = f"node-{rng.randrange(8)}.local"
        app = rng.choice(apps)
        pid = str(1000 + rng.randrange(4))
        kw = rng.choice(keywords)
        lines.append(
            f"{base[0]} {base[1]} {hour:02d}:{minute:02d}:{sec:02d} {node} {app}[{pid}]: {kw} happened"
        )
    result = parse_stream(lines, fig7_config, IdRegistry(), year_hint=2008)
    assert result.parsed_count == 10_000

    # Independent oracle: split on spaces, assign ids with plain dicts.
    kw_table = {k.text: (k.severity, k.event_type) for k in fig7_config.keywords}
    node_ids: dict[str, int] = {}
    event_ids: dict[tuple, int] = {}
    log_ids: dict[tuple, int] = {}
    for line, ev in zip(lines, result.events):
        parts = line.split(" ")
        ts_text = " ".join(parts[0:3])
        node, app_pid = parts[3], parts[4]
        app, pid = app_pid[:-2].split("[")
        description = " ".join(parts[5:])
        sev = typ = None
        for text, pair in kw_table.items():
            if text in description:
                sev, typ = pair
                break
        node_id = node_ids.setdefault(node, len(node_ids) + 1)
        event_id = event_ids.setdefault((sev, typ), len(event_ids) + 1)
        log_id = log_ids.setdefault((node_id, event_id, app, pid), len(log_ids) + 1)
        expect_epoch, _ = resolve_timestamp(ts_text, 2008)
        assert ev.timestamp == expect_epoch
        assert ev.node_id == node_id
        assert ev.event_id == event_id
        assert ev.log_id == log_id
        assert ev.application == app
        assert ev.process_id == pid
        assert (ev.severity, ev.event_type) == (sev, typ)
