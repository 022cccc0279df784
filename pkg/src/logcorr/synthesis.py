"""Seeded synthetic corpus generation with planted correlations.

A corpus is described by a source catalog (node, application, severity,
type per source), background Poisson streams, planted trigger->consequent
rules with a bounded delay and firing probability, periodic trains and
repeat bursts for the filter stages. Generation is deterministic in the
seed and emits a ground-truth manifest recording exactly what was planted,
including the realized firing counts, so tests can compare mined
statistics against construction rather than against another miner.

The same corpus can be rendered as raw syslog-style lines together with a
config document that parses them back, which exercises the full pipeline
from the parse stage onward.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import asdict, dataclass
from typing import Sequence

from .events import Event, EventType, IdRegistry, Severity

DEFAULT_START = 1222819200  # 2008-10-01 00:00:00 UTC


@dataclass(frozen=True)
class SourceSpec:
    """One log source; a distinct process id guarantees a distinct log id."""

    node_id: int
    application: str
    severity: Severity
    event_type: EventType
    process_id: str


@dataclass(frozen=True)
class BackgroundStream:
    source: int                # catalog position
    rate_per_hour: float


@dataclass(frozen=True)
class PlantedRule:
    trigger: int               # catalog position
    consequent: int
    probability: float
    delay_min: int
    delay_max: int
    occurrences: int
    jitter: float = 0.2        # fraction of the trigger spacing

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must be in [0, 1]")
        if not 1 <= self.delay_min <= self.delay_max:
            raise ValueError("need 1 <= delay_min <= delay_max")


@dataclass(frozen=True)
class PeriodicInjection:
    source: int
    interval: int
    count: int
    start_offset: int = 0
    deviations: tuple[int, ...] = ()   # indexes whose gap is perturbed


@dataclass(frozen=True)
class BurstInjection:
    source: int
    start_offset: int
    count: int
    spacing: int = 1


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int
    duration: int
    sources: tuple[SourceSpec, ...]
    start_time: int = DEFAULT_START
    background: tuple[BackgroundStream, ...] = ()
    planted: tuple[PlantedRule, ...] = ()
    periodic: tuple[PeriodicInjection, ...] = ()
    bursts: tuple[BurstInjection, ...] = ()

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "duration": self.duration,
            "start_time": self.start_time,
            "sources": [
                {
                    "node_id": s.node_id,
                    "application": s.application,
                    "severity": s.severity.name,
                    "event_type": s.event_type.name,
                    "process_id": s.process_id,
                }
                for s in self.sources
            ],
            "background": [asdict(b) for b in self.background],
            "planted": [asdict(p) for p in self.planted],
            "periodic": [asdict(p) for p in self.periodic],
            "bursts": [asdict(b) for b in self.bursts],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticSpec":
        data = json.loads(text)
        return cls(
            seed=data["seed"],
            duration=data["duration"],
            start_time=data.get("start_time", DEFAULT_START),
            sources=tuple(
                SourceSpec(
                    node_id=s["node_id"],
                    application=s["application"],
                    severity=Severity.from_name(s["severity"]),
                    event_type=EventType.from_name(s["event_type"]),
                    process_id=s["process_id"],
                )
                for s in data["sources"]
            ),
            background=tuple(BackgroundStream(**b) for b in data.get("background", ())),
            planted=tuple(PlantedRule(**p) for p in data.get("planted", ())),
            periodic=tuple(
                PeriodicInjection(
                    **{k: (tuple(v) if k == "deviations" else v) for k, v in p.items()}
                )
                for p in data.get("periodic", ())
            ),
            bursts=tuple(BurstInjection(**b) for b in data.get("bursts", ())),
        )


def make_catalog(
    node_count: int,
    source_count: int,
    applications: int = 8,
    severity_cycle: Sequence[Severity] = tuple(Severity),
    type_cycle: Sequence[EventType] = tuple(EventType),
) -> tuple[SourceSpec, ...]:
    """Round-robin catalog builder: source i lands on node (i % nodes)+1,
    application app-(i % applications), and cycles severity/type pairs."""
    out = []
    for i in range(source_count):
        out.append(
            SourceSpec(
                node_id=(i % node_count) + 1,
                application=f"app-{i % applications}",
                severity=severity_cycle[i % len(severity_cycle)],
                event_type=type_cycle[(i // len(severity_cycle)) % len(type_cycle)],
                process_id=str(1000 + i),
            )
        )
    return tuple(out)


@dataclass(frozen=True)
class PlantedTruth:
    """What one planted rule actually produced."""

    trigger_log_id: int
    consequent_log_id: int
    probability: float
    delay_min: int
    delay_max: int
    triggers_emitted: int
    consequents_emitted: int
    same_node: bool
    same_application: bool
    same_event_type: bool

    @property
    def realized_confidence(self) -> float:
        if self.triggers_emitted == 0:
            return 0.0
        return self.consequents_emitted / self.triggers_emitted


@dataclass
class GeneratedCorpus:
    spec: SyntheticSpec
    events: list[Event]
    registry: IdRegistry
    log_ids: list[int]                 # catalog position -> log id
    truth: list[PlantedTruth]

    def node_names(self) -> dict[str, int]:
        return {f"node-{s.node_id}.local": s.node_id for s in self.spec.sources}


def _register_catalog(spec: SyntheticSpec) -> tuple[IdRegistry, list[int]]:
    registry = IdRegistry()
    log_ids = []
    for src in spec.sources:
        eid = registry.assign_event_id(src.severity, src.event_type)
        lid = registry.assign_log_id(src.node_id, eid, src.application, src.process_id)
        log_ids.append(lid)
    if len(set(log_ids)) != len(log_ids):
        raise ValueError("catalog entries collide: two sources map to one log id")
    return registry, log_ids


def generate(spec: SyntheticSpec) -> GeneratedCorpus:
    """Produce the corpus: events sorted by time, registry, ground truth."""
    rng = random.Random(spec.seed)
    registry, log_ids = _register_catalog(spec)

    raw: list[tuple[int, int]] = []    # (timestamp, catalog position)

    for stream in spec.background:
        rate_per_second = stream.rate_per_hour / 3600.0
        if rate_per_second <= 0:
            continue
        t = spec.start_time + rng.expovariate(rate_per_second)
        while t < spec.start_time + spec.duration:
            raw.append((int(t), stream.source))
            t += rng.expovariate(rate_per_second)

    truth: list[PlantedTruth] = []
    for planted in spec.planted:
        spacing = spec.duration / max(planted.occurrences, 1)
        fired = 0
        emitted = 0
        for i in range(planted.occurrences):
            jitter = rng.uniform(0, spacing * planted.jitter)
            t = int(spec.start_time + i * spacing + jitter)
            if t >= spec.start_time + spec.duration:
                break
            raw.append((t, planted.trigger))
            emitted += 1
            if rng.random() < planted.probability:
                delay = rng.randint(planted.delay_min, planted.delay_max)
                raw.append((t + delay, planted.consequent))
                fired += 1
        trig_src = spec.sources[planted.trigger]
        cons_src = spec.sources[planted.consequent]
        truth.append(
            PlantedTruth(
                trigger_log_id=log_ids[planted.trigger],
                consequent_log_id=log_ids[planted.consequent],
                probability=planted.probability,
                delay_min=planted.delay_min,
                delay_max=planted.delay_max,
                triggers_emitted=emitted,
                consequents_emitted=fired,
                same_node=trig_src.node_id == cons_src.node_id,
                same_application=trig_src.application == cons_src.application,
                same_event_type=trig_src.event_type == cons_src.event_type,
            )
        )

    for periodic in spec.periodic:
        t = spec.start_time + periodic.start_offset
        for i in range(periodic.count):
            raw.append((t, periodic.source))
            step = periodic.interval
            if i in periodic.deviations:
                step = periodic.interval + max(3, periodic.interval // 3)
            t += step

    for burst in spec.bursts:
        t = spec.start_time + burst.start_offset
        for _ in range(burst.count):
            raw.append((t, burst.source))
            t += burst.spacing

    raw.sort(key=lambda pair: (pair[0], pair[1]))
    events = []
    for ts, pos in raw:
        src = spec.sources[pos]
        events.append(
            Event(
                timestamp=ts,
                log_id=log_ids[pos],
                node_id=src.node_id,
                event_id=registry.assign_event_id(src.severity, src.event_type),
                severity=src.severity,
                event_type=src.event_type,
                application=src.application,
                process_id=src.process_id,
            )
        )
    return GeneratedCorpus(
        spec=spec, events=events, registry=registry, log_ids=log_ids, truth=truth
    )


# --- raw-line rendering --------------------------------------------------

_MONTH_ABBR = {
    1: "Jan", 2: "Feb", 3: "Mar", 4: "Apr", 5: "May", 6: "Jun",
    7: "Jul", 8: "Aug", 9: "Sep", 10: "Oct", 11: "Nov", 12: "Dec",
}


def _keyword_table() -> dict[tuple[Severity, EventType], str]:
    """A distinct, non-overlapping keyword phrase per (severity, type)."""
    table = {}
    for sev, typ in itertools.product(Severity, EventType):
        table[(sev, typ)] = f"code {typ.name.lower()}-{sev.name.lower()}-{sev*10+typ:02d}"
    return table


def render_raw_lines(corpus: GeneratedCorpus) -> list[str]:
    """Syslog-style lines reproducing the corpus through the parser."""
    import time as _time

    table = _keyword_table()
    lines = []
    for ev in corpus.events:
        tm = _time.gmtime(ev.timestamp)
        stamp = (
            f"{_MONTH_ABBR[tm.tm_mon]} {tm.tm_mday:2d} "
            f"{tm.tm_hour:02d}:{tm.tm_min:02d}:{tm.tm_sec:02d}"
        )
        keyword = table[(ev.severity, ev.event_type)]
        lines.append(
            f"{stamp} node-{ev.node_id}.local {ev.application}[{ev.process_id}]: "
            f"{keyword} reported by source {ev.log_id}"
        )
    return lines


def render_config_xml(corpus: GeneratedCorpus) -> str:
    """A config document whose formats and keywords parse the raw lines."""
    table = _keyword_table()
    keyword_lines = "\n".join(
        f'    <keyword value="{text}" severity="{sev.name.lower()}" '
        f'type="{typ.name.lower()}" />'
        for (sev, typ), text in sorted(
            table.items(), key=lambda kv: (kv[0][0], kv[0][1])
        )
    )
    node_lines = "\n".join(
        f'    <node name="{name}" id="{ident}" />'
        for name, ident in sorted(corpus.node_names().items(), key=lambda kv: kv[1])
    )
    return f"""<?xml version="1.0" encoding="utf-8"?>
<configuration>
  <definitions>
    <definition name="timestamp" value="%timestamp" desc="[a-zA-Z]{{3}}\\s{{1,2}}[0-9]{{1,2}} [0-9]{{2}}:[0-9]{{2}}:[0-9]{{2}}" />
    <definition name="nodename" value="%nodename" desc="\\S+" />
    <definition name="application" value="%application" desc="[^\\s\\[\\]:]+" />
    <definition name="processid" value="%processid" desc="[0-9]+" />
    <definition name="description" value="%description" desc=".*" />
  </definitions>
  <formats>
    <format name="format1" value="%timestamp %nodename %application[%processid]: %description" desc="timestamp.nodename.application.process.description"/>
    <format name="format2" value="%timestamp %nodename %description" desc="timestamp.nodename.description" />
  </formats>
  <keywords>
{keyword_lines}
  </keywords>
  <nodemap>
{node_lines}
  </nodemap>
</configuration>
"""
