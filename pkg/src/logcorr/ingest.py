"""Log line parsing driven by a configuration of definitions, formats and keywords.

A config document declares named token patterns (definitions), ordered line
formats built from those tokens, and an ordered keyword table mapping
description substrings to (severity, event type). Lines are tried against
formats in order, first full match wins; the keyword table classifies the
description; the registries mint event and log ids.

Two config syntaxes are accepted: an XML document with
database/definitions/formats/keywords sections (the database section is
parsed and ignored), and an equivalent flat tab-separated form. See the
README for both.
"""

from __future__ import annotations

import calendar
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from xml.etree import ElementTree

from .errors import ConfigError, DuplicateDefinitionError, UnknownDefinitionError
from .events import Event, EventType, IdRegistry, Severity

_TOKEN = re.compile(r"%([A-Za-z_][A-Za-z0-9_]*)")

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}
_MONTH_NAMES = {v: k for k, v in _MONTHS.items()}

_SYSLOG_TS = re.compile(r"^([A-Za-z]{3})\s{1,2}(\d{1,2}) (\d{2}):(\d{2}):(\d{2})$")
_COMPACT_TS = re.compile(r"^(\d{4})(\d{2})(\d{2})(\d{2})(\d{2})(\d{2})$")
_ISO_TS = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})Z?$")


@dataclass(frozen=True)
class Keyword:
    text: str
    severity: Severity
    event_type: EventType


@dataclass(frozen=True)
class LineFormat:
    name: str
    template: str
    regex: re.Pattern
    fields: tuple[str, ...]


@dataclass
class Config:
    """Parsed configuration: token definitions, line formats, keyword table."""

    definitions: dict[str, str]
    formats: list[LineFormat]
    keywords: list[Keyword]
    node_name_map: dict[str, int] = field(default_factory=dict)
    database_ignored: bool = False

    @property
    def is_classifying(self) -> bool:
        """False when the keyword table is empty; every event then defaults."""
        return bool(self.keywords)


@dataclass(frozen=True)
class Unparsed:
    """A line no format matched, preserved verbatim with the reason."""

    line: str
    reason: str


def _escape_literal(text: str) -> str:
    # Literal spaces in templates match any run of whitespace; everything
    # else is matched verbatim.
    return r"\s+".join(re.escape(part) for part in text.split(" "))


def _compile_format(name: str, template: str, definitions: dict[str, str]) -> LineFormat:
    parts: list[str] = []
    fields: list[str] = []
    pos = 0
    for match in _TOKEN.finditer(template):
        parts.append(_escape_literal(template[pos:match.start()]))
        token = match.group(1)
        if token not in definitions:
            raise UnknownDefinitionError(
                f"format {name!r} references undefined token %{token}"
            )
        if token in fields:
            raise ConfigError(f"format {name!r} uses token %{token} more than once")
        fields.append(token)
        parts.append(f"(?P<{token}>{definitions[token]})")
        pos = match.end()
    parts.append(_escape_literal(template[pos:]))
    if "timestamp" not in fields or "nodename" not in fields:
        raise ConfigError(
            f"format {name!r} must reference %timestamp and %nodename"
        )
    try:
        regex = re.compile("".join(parts))
    except re.error as exc:
        raise ConfigError(f"format {name!r} compiles to an invalid pattern: {exc}") from exc
    return LineFormat(name=name, template=template, regex=regex, fields=tuple(fields))


def _build_config(
    definitions: list[tuple[str, str]],
    formats: list[tuple[str, str]],
    keywords: list[tuple[str, str, str]],
    node_names: list[tuple[str, int]],
    database_ignored: bool,
) -> Config:
    defs: dict[str, str] = {}
    for name, pattern in definitions:
        if name in defs:
            raise DuplicateDefinitionError(f"definition {name!r} appears more than once")
        defs[name] = pattern
    compiled = [_compile_format(name, template, defs) for name, template in formats]
    table = []
    for text, sev, typ in keywords:
        try:
            table.append(Keyword(text, Severity.from_name(sev), EventType.from_name(typ)))
        except KeyError as exc:
            raise ConfigError(f"keyword {text!r} has unknown severity or type: {exc}") from exc
    node_map = {}
    for name, ident in node_names:
        node_map[name] = int(ident)
    return Config(
        definitions=defs,
        formats=compiled,
        keywords=table,
        node_name_map=node_map,
        database_ignored=database_ignored,
    )


def _parse_xml_config(text: str) -> Config:
    try:
        root = ElementTree.fromstring(text)
    except ElementTree.ParseError as exc:
        raise ConfigError(f"malformed XML config: {exc}") from exc
    if root.tag != "configuration":
        raise ConfigError(f"expected <configuration> root, got <{root.tag}>")
    definitions: list[tuple[str, str]] = []
    formats: list[tuple[str, str]] = []
    keywords: list[tuple[str, str, str]] = []
    node_names: list[tuple[str, int]] = []
    database_ignored = False
    for section in root:
        if section.tag == "database":
            database_ignored = True
        elif section.tag == "definitions":
            for el in section:
                name = el.get("name")
                pattern = el.get("desc")
                if not name or pattern is None:
                    raise ConfigError("definition needs name and desc attributes")
                definitions.append((name, pattern))
        elif section.tag == "formats":
            for el in section:
                name = el.get("name")
                template = el.get("value")
                if not name or template is None:
                    raise ConfigError("format needs name and value attributes")
                formats.append((name, template))
        elif section.tag == "keywords":
            for el in section:
                text_val = el.get("value")
                if text_val is None or el.get("severity") is None or el.get("type") is None:
                    raise ConfigError("keyword needs value, severity and type attributes")
                keywords.append((text_val, el.get("severity"), el.get("type")))
        elif section.tag == "nodemap":
            for el in section:
                if el.get("name") is None or el.get("id") is None:
                    raise ConfigError("node entry needs name and id attributes")
                node_names.append((el.get("name"), int(el.get("id"))))
        else:
            raise ConfigError(f"unknown config section <{section.tag}>")
    return _build_config(definitions, formats, keywords, node_names, database_ignored)


def _parse_flat_config(text: str) -> Config:
    definitions: list[tuple[str, str]] = []
    formats: list[tuple[str, str]] = []
    keywords: list[tuple[str, str, str]] = []
    node_names: list[tuple[str, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        kind = parts[0]
        try:
            if kind == "definition":
                _, name, pattern = parts
                definitions.append((name, pattern))
            elif kind == "format":
                _, name, template = parts
                formats.append((name, template))
            elif kind == "keyword":
                _, text_val, sev, typ = parts
                keywords.append((text_val, sev, typ))
            elif kind == "node":
                _, name, ident = parts
                node_names.append((name, int(ident)))
            else:
                raise ConfigError(f"line {lineno}: unknown entry kind {kind!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad field count or value: {exc}") from exc
    return _build_config(definitions, formats, keywords, node_names, False)


def parse_config(text: str) -> Config:
    """Parse a config document from text; XML or flat form, auto-detected."""
    if text.lstrip().startswith("<"):
        return _parse_xml_config(text)
    return _parse_flat_config(text)


def load_config(path: str | Path) -> Config:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def classify(
    description: str, config: Config
) -> tuple[Severity, EventType, str | None]:
    """First keyword (config order) whose text occurs in the description wins.

    Matching is case-sensitive plain substring. No match leaves the event
    unclassified: (INFO, SYSTEM, None).
    """
    for kw in config.keywords:
        if kw.text in description:
            return kw.severity, kw.event_type, kw.text
    return Severity.INFO, EventType.SYSTEM, None


def resolve_timestamp(text: str, year_hint: int) -> tuple[int, int]:
    """Resolve a timestamp token to (epoch seconds UTC, month).

    Syslog-style stamps carry no year and take it from ``year_hint``;
    year-bearing layouts ignore the hint. Raises ValueError when the text
    matches no known layout or names an impossible date.
    """
    m = _SYSLOG_TS.match(text)
    if m:
        mon_name, day, hh, mm, ss = m.groups()
        month = _MONTHS.get(mon_name.capitalize())
        if month is None:
            raise ValueError(f"unknown month {mon_name!r}")
        return _epoch(year_hint, month, int(day), int(hh), int(mm), int(ss)), month
    for pattern in (_COMPACT_TS, _ISO_TS):
        m = pattern.match(text)
        if m:
            year, month, day, hh, mm, ss = (int(g) for g in m.groups())
            return _epoch(year, month, day, hh, mm, ss), month
    raise ValueError(f"unrecognized timestamp {text!r}")


def _epoch(year: int, month: int, day: int, hh: int, mm: int, ss: int) -> int:
    if not (1 <= month <= 12 and 1 <= day <= 31 and hh < 24 and mm < 60 and ss < 60):
        raise ValueError(f"impossible date {year}-{month}-{day} {hh}:{mm}:{ss}")
    epoch = calendar.timegm((year, month, day, hh, mm, ss, 0, 0, 0))
    # timegm normalizes overflow (Feb 30 -> Mar 2); reject that silently
    # shifted reading.
    if time.gmtime(epoch)[2] != day:
        raise ValueError(f"impossible date {year}-{month}-{day}")
    return epoch


class NodeNames:
    """Node name -> node id, preset from config or dense first-seen."""

    def __init__(self, preset: dict[str, int] | None = None) -> None:
        self._ids: dict[str, int] = dict(preset or {})
        self._next = max(self._ids.values(), default=0) + 1

    def node_id(self, name: str) -> int:
        ident = self._ids.get(name)
        if ident is None:
            ident = self._next
            self._ids[name] = ident
            self._next += 1
        return ident

    def items(self) -> list[tuple[str, int]]:
        return sorted(self._ids.items(), key=lambda kv: kv[1])

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for name, ident in self.items():
                fh.write(f"{name}\t{ident}\n")

    @classmethod
    def load(cls, path: str | Path) -> "NodeNames":
        preset = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                name, ident = line.rstrip("\n").split("\t")
                preset[name] = int(ident)
        return cls(preset)


def parse_line(
    line: str,
    config: Config,
    registry: IdRegistry,
    year_hint: int,
    node_names: NodeNames | None = None,
) -> Event | Unparsed:
    """Parse one line into an Event, or return it Unparsed with a reason.

    Formats are tried in config order and the first full match wins. The
    description is classified through the keyword table, and ids are
    assigned through the registry as a side effect.
    """
    if node_names is None:
        node_names = NodeNames(config.node_name_map)
    text = line.rstrip("\n")
    if not text.strip():
        return Unparsed(line, "blank line")
    for fmt in config.formats:
        match = fmt.regex.fullmatch(text)
        if match:
            break
    else:
        return Unparsed(line, "no format matched")
    fields = match.groupdict()
    try:
        epoch, _ = resolve_timestamp(fields["timestamp"], year_hint)
    except ValueError as exc:
        return Unparsed(line, f"unresolvable timestamp: {exc}")
    description = fields.get("description", "")
    severity, event_type, _keyword = classify(description, config)
    node_id = node_names.node_id(fields["nodename"])
    application = fields.get("application", "")
    process_id = fields.get("processid", "")
    user = fields.get("user", "")
    event_id = registry.assign_event_id(severity, event_type)
    log_id = registry.assign_log_id(node_id, event_id, application, process_id)
    return Event(
        timestamp=epoch,
        log_id=log_id,
        node_id=node_id,
        event_id=event_id,
        severity=severity,
        event_type=event_type,
        application=application,
        process_id=process_id,
        user=user,
    )


@dataclass
class ParseResult:
    events: list[Event]
    unparsed: list[Unparsed]
    is_sorted: bool

    @property
    def parsed_count(self) -> int:
        return len(self.events)

    @property
    def unparsed_count(self) -> int:
        return len(self.unparsed)


def parse_stream(
    lines,
    config: Config,
    registry: IdRegistry,
    year_hint: int | None = None,
    node_names: NodeNames | None = None,
) -> ParseResult:
    """Parse a line stream in input order, rolling the year over Dec -> Jan.

    Syslog timestamps carry no year; the stream starts at ``year_hint``
    (default: the current year) and the year advances whenever the month
    sequence decreases, so ordered streams spanning new year parse
    correctly.
    """
    if year_hint is None:
        year_hint = time.gmtime().tm_year
    if node_names is None:
        node_names = NodeNames(config.node_name_map)
    year = year_hint
    last_month: int | None = None
    events: list[Event] = []
    unparsed: list[Unparsed] = []
    is_sorted = True
    for line in lines:
        result = parse_line(line, config, registry, year, node_names)
        if isinstance(result, Event):
            month = time.gmtime(result.timestamp).tm_mon
            if last_month is not None and month < last_month:
                year += 1
                result = parse_line(line, config, registry, year, node_names)
                month = time.gmtime(result.timestamp).tm_mon
            last_month = month
            if events and result.timestamp < events[-1].timestamp:
                is_sorted = False
            events.append(result)
        else:
            unparsed.append(result)
    return ParseResult(events=events, unparsed=unparsed, is_sorted=is_sorted)
