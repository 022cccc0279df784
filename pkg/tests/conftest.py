"""Shared fixtures: tiny hand-built corpora and configs."""

from __future__ import annotations

import pytest

from logcorr.events import Event, EventType, IdRegistry, Severity


def make_event(
    timestamp,
    log_id,
    node_id=1,
    event_id=1,
    severity=Severity.ERROR,
    event_type=EventType.FILESYSTEM,
    application="",
    process_id="",
    user="",
):
    return Event(
        timestamp=int(timestamp),
        log_id=log_id,
        node_id=node_id,
        event_id=event_id,
        severity=severity,
        event_type=event_type,
        application=application,
        process_id=process_id,
        user=user,
    )


def stream_of(pairs, **kwargs):
    """Build a sorted event stream from (timestamp, log_id) pairs."""
    return [make_event(ts, lid, **kwargs) for ts, lid in sorted(pairs)]


# The worked 2.1 sequence: b a c b b a at consecutive seconds, log ids
# A=1, B=2, C=3.
A, B, C = 1, 2, 3


@pytest.fixture
def bacbba():
    order = [B, A, C, B, B, A]
    return [make_event(t, lid) for t, lid in enumerate(order)]


@pytest.fixture
def registry_with_sources():
    """Registry holding a few distinct sources for attribute lookups."""
    reg = IdRegistry()
    specs = [
        (1, Severity.ERROR, EventType.FILESYSTEM, "smartd", "3019"),
        (1, Severity.FAILURE, EventType.NETWORK, "sshd", "2753"),
        (2, Severity.ERROR, EventType.FILESYSTEM, "smartd", "3043"),
    ]
    for node, sev, typ, app, pid in specs:
        eid = reg.assign_event_id(sev, typ)
        reg.assign_log_id(node, eid, app, pid)
    return reg


FIG7_XML = """<?xml version="1.0" encoding="utf-8"?>
<configuration>
  <database>
    <db_host>127.0.0.1</db_host>
    <db_user>root</db_user>
    <db_name>log</db_name>
  </database>
  <definitions>
    <definition name="timestamp" value="%timestamp" desc="[a-zA-Z]{3}\\s{1,2}[0-9]{1,2} [0-9]{2}:[0-9]{2}:[0-9]{2}" />
    <definition name="nodename" value="%nodename" desc="\\S+" />
    <definition name="application" value="%application" desc="[^\\s\\[\\]:]+" />
    <definition name="processid" value="%processid" desc="[0-9]+" />
    <definition name="description" value="%description" desc=".*" />
  </definitions>
  <formats>
    <format name="format1" value="%timestamp %nodename %application[%processid]: %description" desc="timestamp.nodename.application.process.description"/>
    <format name="format2" value="%timestamp %nodename %application: %description" desc="timestamp.nodename.application.description" />
    <format name="format3" value="%timestamp %nodename %description" desc="timestamp.nodename.description" />
  </formats>
  <keywords>
    <keyword value="unreadable" severity="error" type="filesystem" />
    <keyword value="uncorrectable" severity="error" type="filesystem" />
    <keyword value="Link is Down" severity="failure" type="network" />
    <keyword value="EXT3-fs error" severity="error" type="filesystem" />
    <keyword value="failed to read" severity="error" type="filesystem" />
    <keyword value="FAILED SMART" severity="error" type="filesystem" />
    <keyword value="ACPI" severity="info" type="system" />
    <keyword value="PCI" severity="info" type="system" />
    <keyword value="Memory for crash" severity="failure" type="system" />
    <keyword value="Address already in use" severity="failure" type="application" />
  </keywords>
</configuration>
"""


@pytest.fixture
def fig7_config():
    from logcorr.ingest import parse_config

    return parse_config(FIG7_XML)
