"""Normalized event records and the injective id-assignment registries.

Every log line is reduced to a nine-field record. Two registries give the
record its identity: event ids key the (severity, event type) class of an
event, log ids key the (node, event id, application, process id) source.
Both assign dense integer ids in first-seen order, so replaying the same
stream through a fresh registry reproduces the ids exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import UnknownEventIdError


class Severity(IntEnum):
    """Five severity levels, totally ordered from least to most severe."""

    INFO = 1
    WARNING = 2
    ERROR = 3
    FAILURE = 4
    FAULT = 5

    @classmethod
    def from_name(cls, name: str) -> "Severity":
        return cls[name.strip().upper()]


class EventType(IntEnum):
    """The five event categories."""

    HARDWARE = 1
    SYSTEM = 2
    APPLICATION = 3
    FILESYSTEM = 4
    NETWORK = 5

    @classmethod
    def from_name(cls, name: str) -> "EventType":
        return cls[name.strip().upper()]


@dataclass(frozen=True, slots=True)
class Event:
    """One normalized log record.

    ``timestamp`` is integer seconds since the epoch (UTC). ``log_id`` and
    ``event_id`` are only meaningful relative to the registry that assigned
    them.
    """

    timestamp: int
    log_id: int
    node_id: int
    event_id: int
    severity: Severity
    event_type: EventType
    application: str = ""
    process_id: str = ""
    user: str = ""


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(text: str) -> str:
    out = []
    it = iter(text)
    for ch in it:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(it, "")
        out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(nxt, nxt))
    return "".join(out)


class IdRegistry:
    """Allocate-or-reuse id assignment for event classes and log sources.

    The event map is a bijection (severity, event_type) <-> event_id; the
    log map is a bijection (node_id, event_id, application, process_id)
    <-> log_id. Ids start at 1 and are dense in first-seen order. The
    ``user`` field of an event never participates in either mapping.

    Assignment is order-sensitive, so ingest is single-writer; once the
    ingest phase ends the registry is effectively immutable and safe to
    share across parallel readers.
    """

    def __init__(self) -> None:
        self._event_ids: dict[tuple[Severity, EventType], int] = {}
        self._event_tuples: list[tuple[Severity, EventType]] = []
        self._log_ids: dict[tuple[int, int, str, str], int] = {}
        self._log_tuples: list[tuple[int, int, str, str]] = []

    # -- assignment ------------------------------------------------------

    def assign_event_id(self, severity: Severity, event_type: EventType) -> int:
        """Return the event id for (severity, event_type), allocating if new."""
        key = (Severity(severity), EventType(event_type))
        eid = self._event_ids.get(key)
        if eid is None:
            self._event_tuples.append(key)
            eid = len(self._event_tuples)
            self._event_ids[key] = eid
        return eid

    def assign_log_id(
        self, node_id: int, event_id: int, application: str = "", process_id: str = ""
    ) -> int:
        """Return the log id for the source 4-tuple, allocating if new.

        The event id must already be registered; an unknown one means a
        caller tried to mint a log id before classifying the event.
        """
        if not 1 <= event_id <= len(self._event_tuples):
            raise UnknownEventIdError(
                f"event id {event_id} has not been assigned; "
                "assign_event_id must run before assign_log_id"
            )
        key = (node_id, event_id, application, process_id)
        lid = self._log_ids.get(key)
        if lid is None:
            self._log_tuples.append(key)
            lid = len(self._log_tuples)
            self._log_ids[key] = lid
        return lid

    # -- inverse lookups --------------------------------------------------

    def event_tuple(self, event_id: int) -> tuple[Severity, EventType]:
        return self._event_tuples[self._check_index(event_id, self._event_tuples, "event")]

    def log_tuple(self, log_id: int) -> tuple[int, int, str, str]:
        return self._log_tuples[self._check_index(log_id, self._log_tuples, "log")]

    @staticmethod
    def _check_index(ident: int, table: list, kind: str) -> int:
        if not 1 <= ident <= len(table):
            raise KeyError(f"unknown {kind} id {ident}")
        return ident - 1

    def log_attributes(self, log_id: int) -> tuple[int, int, str, str, Severity, EventType]:
        """(node_id, event_id, application, process_id, severity, event_type)."""
        node_id, event_id, application, process_id = self.log_tuple(log_id)
        severity, event_type = self.event_tuple(event_id)
        return node_id, event_id, application, process_id, severity, event_type

    @property
    def event_id_count(self) -> int:
        return len(self._event_tuples)

    @property
    def log_id_count(self) -> int:
        return len(self._log_tuples)

    # -- persistence ------------------------------------------------------

    def save(self, event_map_path: str | Path, log_map_path: str | Path) -> None:
        """Write the two mapping tables, one mapping per line, UTF-8."""
        with open(event_map_path, "w", encoding="utf-8") as fh:
            for i, (sev, typ) in enumerate(self._event_tuples, start=1):
                fh.write(f"{i}\t{sev.name}\t{typ.name}\n")
        with open(log_map_path, "w", encoding="utf-8") as fh:
            for i, (node, eid, app, pid) in enumerate(self._log_tuples, start=1):
                fh.write(f"{i}\t{node}\t{eid}\t{_escape(app)}\t{_escape(pid)}\n")

    @classmethod
    def load(cls, event_map_path: str | Path, log_map_path: str | Path) -> "IdRegistry":
        reg = cls()
        with open(event_map_path, encoding="utf-8") as fh:
            for line in fh:
                ident, sev, typ = line.rstrip("\n").split("\t")
                assigned = reg.assign_event_id(Severity.from_name(sev), EventType.from_name(typ))
                if assigned != int(ident):
                    raise ValueError(f"event map is not dense at id {ident}")
        with open(log_map_path, encoding="utf-8") as fh:
            for line in fh:
                ident, node, eid, app, pid = line.rstrip("\n").split("\t")
                assigned = reg.assign_log_id(int(node), int(eid), _unescape(app), _unescape(pid))
                if assigned != int(ident):
                    raise ValueError(f"log map is not dense at id {ident}")
        return reg
