"""Deterministic tick-based threat injection against a decided model.

Each tick ``t`` in ``0..horizon``:

1. objects whose ``recovery_due == t`` become operational again;
2. each event at ``t`` (in scenario order) is resolved:
   a. learned block: a knowledge base record for the same (threat, target)
      with outcome blocked/detected blocks the event (if enabled and a
      knowledge base exists);
   b. protection: a selected protection countermeasure mitigating the
      threat blocks the event;
   c. otherwise the target and its hosted closure fail;
   d. the failure is detected iff a selected detection countermeasure
      mitigates the threat and any monitoring countermeasure is selected.
      Detected failures with a selected restoration countermeasure for the
      threat get ``recovery_due = t + restore_delay``; all others never
      recover;
   e. the outcome is appended to the knowledge base, if the model has one.
3. the status of every element is snapshotted.

A failed object hit again keeps the later of its two recovery ticks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .catalog import Catalog, default_catalog
from .diagnostics import has_errors
from .model import ModelGraph, ResilienceProperty, hosted_closure
from .validator import validate

NEVER = None  # recovery_due for failures that persist to the horizon


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class SimulationRefused(ValueError):
    def __init__(self, codes: list[str]) -> None:
        self.codes = codes
        super().__init__(f"model has validation errors: {', '.join(codes)}")


@dataclass(frozen=True)
class Event:
    tick: int
    threat: str
    target: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Scenario:
    events: tuple[Event, ...]
    horizon: int


@dataclass(frozen=True)
class SimConfig:
    restore_delay: int = 2
    learned_block: bool = True

    def __post_init__(self) -> None:
        if self.restore_delay < 1:
            raise ValueError("restore_delay must be >= 1")


@dataclass(frozen=True)
class KBRecord:
    tick: int
    threat: str
    target: str
    outcome: str  # blocked | detected | undetected


@dataclass(frozen=True)
class EventOutcome:
    tick: int
    threat: str
    target: str
    outcome: str
    failed: tuple[str, ...] = ()
    recovery_due: int | None = None


@dataclass(frozen=True)
class TickRecord:
    tick: int
    recovered: tuple[str, ...]
    events: tuple[EventOutcome, ...]
    kb_appends: tuple[KBRecord, ...]
    # (element id, recovery_due) for every failed element; None = never.
    failed: tuple[tuple[str, int | None], ...]

    def is_failed(self, element: str) -> bool:
        return any(e == element for e, _ in self.failed)


@dataclass(frozen=True)
class SimMetrics:
    downtime_ticks: int
    blocked_count: int
    undetected_failures: int
    restored_count: int


@dataclass(frozen=True)
class SimResult:
    ticks: tuple[TickRecord, ...]
    metrics: SimMetrics
    objects: tuple[str, ...]

    @property
    def knowledge_base(self) -> tuple[KBRecord, ...]:
        return tuple(r for t in self.ticks for r in t.kb_appends)


# --- scenario parsing ------------------------------------------------------

_HORIZON = re.compile(r"horizon\s+(\d+)\Z")
_EVENT = re.compile(r"at\s+(\d+)\s+([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\Z")


def parse_scenario(text: str, model: ModelGraph | None = None) -> Scenario:
    """Parse ``horizon N`` / ``at T Threat -> Target`` lines.

    With a model, threat and target ids are checked against it.
    """
    horizon: int | None = None
    horizon_line = None
    events: list[Event] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _HORIZON.match(line):
            if horizon is not None:
                raise ScenarioError("horizon given twice", lineno)
            horizon, horizon_line = int(m.group(1)), lineno
        elif m := _EVENT.match(line):
            events.append(Event(int(m.group(1)), m.group(2), m.group(3), lineno))
        else:
            raise ScenarioError(f"cannot parse {line!r}", lineno)
    if horizon is None:
        raise ScenarioError("missing 'horizon <N>' line")
    late = [e for e in events if e.tick > horizon]
    if late:
        raise ScenarioError(
            f"horizon {horizon} is before event tick {late[0].tick}", horizon_line
        )
    if model is not None:
        check_scenario(model, events)
    events.sort(key=lambda e: e.tick)  # stable: keeps declaration order per tick
    return Scenario(tuple(events), horizon)


def check_scenario(model: ModelGraph, events) -> None:
    threats = {t.id: t for t in model.threats}
    for e in events:
        threat = threats.get(e.threat)
        if threat is None:
            raise ScenarioError(f"unknown threat '{e.threat}'", e.line)
        if not model.has_element(e.target):
            raise ScenarioError(f"unknown element '{e.target}'", e.line)
        if e.target not in threat.affects:
            raise ScenarioError(
                f"'{e.target}' is not affected by threat '{e.threat}'", e.line
            )


# --- engine ----------------------------------------------------------------


@dataclass
class SimState:
    tick: int
    # element id -> recovery_due for failed elements (None = never)
    failed: dict[str, int | None]
    kb: list[KBRecord]


class _Capabilities:
    """Which selected countermeasures exist per threat and property."""

    def __init__(self, model: ModelGraph) -> None:
        self.selected = model.selected_countermeasures()
        self.monitoring = any(
            c.property == ResilienceProperty.MONITORING for c in self.selected
        )

    def has(self, prop: ResilienceProperty, threat: str) -> bool:
        return any(c.property == prop and threat in c.mitigates for c in self.selected)


def _later(a: int | None, b: int | None) -> int | None:
    if a is NEVER or b is NEVER:
        return NEVER
    return max(a, b)


def step(
    state: SimState,
    events: list[Event],
    model: ModelGraph,
    config: SimConfig,
    _caps: _Capabilities | None = None,
) -> tuple[SimState, TickRecord]:
    """Advance one tick; returns the next state and what happened."""
    caps = _caps or _Capabilities(model)
    now = state.tick
    has_kb = model.knowledge_base is not None
    failed = dict(state.failed)
    kb = list(state.kb)

    order = {e.id: i for i, e in enumerate(model.elements)}
    recovered = tuple(sorted((e for e, due in failed.items() if due == now), key=order.__getitem__))
    for e in recovered:
        del failed[e]

    outcomes: list[EventOutcome] = []
    appends: list[KBRecord] = []
    for ev in events:
        learned = (
            config.learned_block
            and has_kb
            and any(
                r.threat == ev.threat and r.target == ev.target
                and r.outcome in ("blocked", "detected")
                for r in kb
            )
        )
        if learned or caps.has(ResilienceProperty.PROTECTION, ev.threat):
            outcome = EventOutcome(now, ev.threat, ev.target, "blocked")
        else:
            victims = [ev.target] + sorted(hosted_closure(model, ev.target) - {ev.target})
            detected = caps.has(ResilienceProperty.DETECTION, ev.threat) and caps.monitoring
            due = NEVER
            if detected and caps.has(ResilienceProperty.RESTORATION, ev.threat):
                due = now + config.restore_delay
            for v in victims:
                failed[v] = _later(failed[v], due) if v in failed else due
            outcome = EventOutcome(
                now,
                ev.threat,
                ev.target,
                "detected" if detected else "undetected",
                tuple(victims),
                due,
            )
        outcomes.append(outcome)
        if has_kb:
            rec = KBRecord(now, ev.threat, ev.target, outcome.outcome)
            kb.append(rec)
            appends.append(rec)

    snapshot = tuple(sorted(failed.items(), key=lambda kv: order[kv[0]]))
    record = TickRecord(now, recovered, tuple(outcomes), tuple(appends), snapshot)
    return SimState(now + 1, failed, kb), record


def metrics_from_trace(ticks: tuple[TickRecord, ...] | list[TickRecord]) -> SimMetrics:
    events = [o for t in ticks for o in t.events]
    return SimMetrics(
        downtime_ticks=sum(len(t.failed) for t in ticks),
        blocked_count=sum(o.outcome == "blocked" for o in events),
        undetected_failures=sum(o.outcome == "undetected" for o in events),
        restored_count=sum(len(t.recovered) for t in ticks),
    )


def run(
    model: ModelGraph,
    scenario: Scenario,
    config: SimConfig | None = None,
    catalog: Catalog | None = None,
) -> SimResult:
    """Run ticks ``0..horizon``; refuses models with error diagnostics."""
    config = config or SimConfig()
    diags = validate(model, catalog if catalog is not None else default_catalog())
    if has_errors(diags):
        raise SimulationRefused(sorted({d.code for d in diags if d.is_error}))
    check_scenario(model, scenario.events)

    caps = _Capabilities(model)
    state = SimState(0, {}, [])
    ticks: list[TickRecord] = []
    by_tick: dict[int, list[Event]] = {}
    for ev in scenario.events:
        by_tick.setdefault(ev.tick, []).append(ev)
    for t in range(scenario.horizon + 1):
        state, record = step(state, by_tick.get(t, []), model, config, caps)
        ticks.append(record)
    return SimResult(
        tuple(ticks), metrics_from_trace(ticks), tuple(e.id for e in model.elements)
    )


def render_trace(result: SimResult) -> str:
    """One line per event and per (tick, object) status change, then metrics."""
    lines: list[str] = []
    for t in result.ticks:
        for e in t.recovered:
            lines.append(f"t={t.tick} {e} operational")
        for o in t.events:
            lines.append(f"t={t.tick} event {o.threat} -> {o.target}: {o.outcome}")
        prev = {}
        if t.tick > 0:
            prev = dict(result.ticks[t.tick - 1].failed)
        for e, due in t.failed:
            if e not in prev or prev[e] != due:
                when = "never" if due is NEVER else str(due)
                lines.append(f"t={t.tick} {e} failed (recovery {when})")
    m = result.metrics
    lines += [
        "metrics:",
        f"  downtime_ticks: {m.downtime_ticks}",
        f"  blocked_count: {m.blocked_count}",
        f"  undetected_failures: {m.undetected_failures}",
        f"  restored_count: {m.restored_count}",
    ]
    return "\n".join(lines) + "\n"
