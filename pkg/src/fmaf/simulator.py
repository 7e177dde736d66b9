"""Deterministic fault-injection simulator.

Executes every constituent's nominal activity graph as a discrete-event
system over integer ticks, injects the configured fault-error-failure
chain, races the enabled detectors, and runs the winning detection's
recovery graphs.  Identical (model, config) pairs produce identical
traces: the only randomness is a seeded generator consulted for genuine
Bernoulli choices (message survival on lossy links, probabilistic
triggers, third-party reports).  Degenerate probabilities (p <= 0,
p >= 1) never touch the generator, which keeps exhaustive outcome
enumeration finite.

Causal strictness: error-raised happens one tick after fault-activated,
recovery-started one tick after error-detected, recovery-complete at
least one tick after recovery-started.  Detection delays and timeout
bounds are measured from error-raised.

A fault's activation suspends the origin's nominal execution; the start
of recovery suspends every nominal execution (recovery replaces the
nominal flow).  An undetected error ends in failure-observed at
quiescence, the moment the event queue drains with no progress possible.
"""

from __future__ import annotations

import dataclasses
import heapq
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .checker import blocking_violations, check
from .model import (
    ActivityKind,
    AtTime,
    Count,
    DanglingReferenceError,
    DetectionSpec,
    ElapsedBetween,
    FmafError,
    MetricSpec,
    OnEntry,
    Probabilistic,
    SelfReport,
    SosModel,
    ThirdPartyReport,
    Timeout,
    split_event_pattern,
)

__all__ = [
    "SimConfig",
    "SimEvent",
    "SimTrace",
    "Outcome",
    "RaceState",
    "RaceResult",
    "SimulationError",
    "InvalidConfigError",
    "ModelViolationsError",
    "BoundExceededError",
    "UnknownEventPatternError",
    "NeedChoice",
    "RandomSampler",
    "ScriptedSampler",
    "run",
    "detection_race",
    "enumerate_outcomes",
    "compute_metrics",
    "summarize",
    "format_trace",
    "write_trace",
]


class SimulationError(FmafError):
    """The simulation could not run or could not make progress."""


class InvalidConfigError(SimulationError):
    pass


class ModelViolationsError(SimulationError):
    """The checker blocks this scenario; findings attached."""

    def __init__(self, findings) -> None:
        self.findings = list(findings)
        listing = "; ".join(str(f) for f in self.findings)
        super().__init__(f"model has blocking violations: {listing}")


class BoundExceededError(SimulationError):
    pass


class UnknownEventPatternError(FmafError):
    pass


# ---------------------------------------------------------------------------
# Configuration, events, traces


@dataclass(frozen=True)
class SimConfig:
    """One run's knobs.

    ``enabled_detectors`` of None means every detector the focused chain
    lists; an explicit set must be a subset of those.  ``guard_inputs``
    chooses guarded branches by decision node id; decisions without an
    input (or with an unmatched label) take their unguarded default
    edge.
    """

    scenario: str | None = None
    seed: int = 0
    horizon: int = 200
    enabled_detectors: frozenset[str] | None = None
    guard_inputs: Mapping[str, str] = field(default_factory=dict)
    recovery_enabled: bool = True

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise InvalidConfigError("horizon must be positive")
        if self.enabled_detectors is not None:
            object.__setattr__(
                self, "enabled_detectors", frozenset(self.enabled_detectors)
            )
        object.__setattr__(self, "guard_inputs", dict(self.guard_inputs))


@dataclass(frozen=True, slots=True)
class SimEvent:
    time: int
    kind: str
    actor: str
    details: Mapping[str, object]


@dataclass(frozen=True, slots=True)
class Outcome:
    kind: str  # recovered | failed-at-boundary | horizon-exhausted | nominal
    by: str | None = None  # winning detector for recovered outcomes
    recovery: str | None = None


@dataclass(frozen=True)
class SimTrace:
    config: SimConfig
    events: tuple[SimEvent, ...]
    metrics: Mapping[str, int | None]
    outcome: Outcome


def summarize(trace: SimTrace) -> tuple[str | None, str]:
    """The (detector, outcome-kind) pair used by the exhaustive oracle."""
    return (trace.outcome.by, trace.outcome.kind)


# ---------------------------------------------------------------------------
# Random choice plumbing


class NeedChoice(Exception):
    """A scripted sampler ran out of scripted choices."""


class RandomSampler:
    def __init__(self, seed: int) -> None:
        self._rng = random.Random(seed)
        self.draws: list[bool] = []

    def bernoulli(self, probability: float) -> bool:
        result = self._rng.random() < probability
        self.draws.append(result)
        return result


class ScriptedSampler:
    """Replays a fixed prefix of choices; exhaustion raises NeedChoice."""

    def __init__(self, choices: Iterable[bool]) -> None:
        self._choices = list(choices)
        self._next = 0

    def bernoulli(self, probability: float) -> bool:
        if self._next >= len(self._choices):
            raise NeedChoice
        value = self._choices[self._next]
        self._next += 1
        return value


def _draw(sampler, probability: float) -> bool:
    # Degenerate probabilities are decided without the sampler so that
    # enumeration only branches on real choices.
    if probability <= 0.0:
        return False
    if probability >= 1.0:
        return True
    return sampler.bernoulli(probability)


# ---------------------------------------------------------------------------
# Detection race


@dataclass(frozen=True)
class RaceState:
    """What the detectors know when the error is raised."""

    error_time: int
    horizon: int
    enabled: frozenset[str]
    sampler: object


@dataclass(frozen=True, slots=True)
class RaceResult:
    winner: DetectionSpec | None
    time: int | None


def detection_race(candidates: Iterable[DetectionSpec], state: RaceState) -> RaceResult:
    """Earliest-firing enabled detection wins; ties break by spec id.

    Third-party reports consume one Bernoulli draw each, in spec-id
    order, whether or not they would win.  A candidate firing after the
    horizon never wins.
    """
    best: tuple[int, str] | None = None
    winner: DetectionSpec | None = None
    for spec in sorted(candidates, key=lambda s: s.id):
        if spec.detector not in state.enabled:
            continue
        cond = spec.condition
        if isinstance(cond, SelfReport):
            fire = state.error_time + cond.delay
        elif isinstance(cond, Timeout):
            fire = state.error_time + cond.bound
        elif isinstance(cond, ThirdPartyReport):
            if not _draw(state.sampler, cond.probability):
                continue
            fire = state.error_time + cond.delay
        else:  # pragma: no cover - exhaustive over condition types
            raise SimulationError(f"unknown detection condition on {spec.id!r}")
        if fire > state.horizon:
            continue
        key = (fire, spec.id)
        if best is None or key < best:
            best = key
            winner = spec
    return RaceResult(winner, best[0] if best else None)


# ---------------------------------------------------------------------------
# Engine internals

# Same-tick processing order: the heap key is (time, actor, rank, seq).
_R_INJECT = 0
_R_ERROR = 1
_R_DELIVER = 2
_R_COMPLETE = 3
_R_DETECT = 4
_R_RECOVERY_START = 5
_R_FINALIZE = 6


class _Instance:
    """One executing copy of an activity graph."""

    __slots__ = (
        "key",
        "graph",
        "owner",
        "role",
        "recovery_id",
        "gen",
        "live",
        "join_arrivals",
        "waiting_recv",
        "suspended",
        "exits_reached",
    )

    def __init__(self, key, graph, owner, role, recovery_id=None):
        self.key = key
        self.graph = graph
        self.owner = owner
        self.role = role  # "nominal" | "recovery"
        self.recovery_id = recovery_id
        self.gen = 0
        self.live = 0
        self.join_arrivals: dict[str, int] = {}
        self.waiting_recv: dict[str, bool] = {}
        self.suspended = False
        self.exits_reached: list[str] = []

    @property
    def finished(self) -> bool:
        return self.live == 0

    def suspend(self) -> None:
        self.suspended = True
        self.gen += 1
        self.waiting_recv.clear()


class _Engine:
    def __init__(self, model: SosModel, config: SimConfig, sampler) -> None:
        self.model = model
        self.config = config
        self.sampler = sampler
        self.events: list[SimEvent] = []
        self.heap: list[tuple] = []
        self.seq = 0
        self.clock = 0
        self.instances: dict[str, _Instance] = {}
        self.mailbox: dict[tuple[str, str], list[tuple[int, str]]] = {}
        self.outcome: Outcome | None = None

        self.chain = model.chains[config.scenario] if config.scenario else None
        self.activation = (
            model.activation_for(config.scenario) if config.scenario else None
        )
        self.enabled = frozenset()
        if self.chain is not None:
            self.enabled = (
                config.enabled_detectors
                if config.enabled_detectors is not None
                else frozenset(self.chain.detectors)
            )
        self.injected = False
        self.error_time: int | None = None
        self.detected: DetectionSpec | None = None
        self.recovery_started_at: int | None = None
        self.recovery_finalize_scheduled = False

    # -- low-level plumbing

    def emit(self, time: int, kind: str, actor: str, **details) -> None:
        self.events.append(SimEvent(time, kind, actor, details))

    def push(self, time: int, actor: str, rank: int, kind: str, payload: tuple) -> None:
        heapq.heappush(self.heap, (time, actor, rank, self.seq, kind, payload))
        self.seq += 1

    # -- token movement

    def start_instance(self, inst: _Instance, time: int) -> None:
        self.instances[inst.key] = inst
        inst.live = 1
        self.enter_node(inst, inst.graph.entry, time)

    def enter_node(self, inst: _Instance, node_id: str, time: int) -> None:
        node = inst.graph.nodes[node_id]
        if node.kind is ActivityKind.JOIN:
            arrived = inst.join_arrivals.get(node_id, 0) + 1
            inst.join_arrivals[node_id] = arrived
            if arrived < len(inst.graph.in_edges(node_id)):
                inst.live -= 1
                return
        if inst.role == "nominal":
            details = {"activity": node_id, "graph": inst.graph.id}
            if node.name:
                details["name"] = node.name
            self.emit(time, "activity-start", inst.owner, **details)
            self.on_nominal_start(inst, node_id, time)
        if node.kind is ActivityKind.RECEIVE:
            box = self.mailbox.get((inst.owner, node.channel))
            if box:
                box.pop(0)
                self.schedule_completion(inst, node_id, time + node.duration)
            else:
                inst.waiting_recv[node_id] = True
            return
        self.schedule_completion(inst, node_id, time + node.effective_duration())

    def schedule_completion(self, inst: _Instance, node_id: str, time: int) -> None:
        self.push(time, inst.owner, _R_COMPLETE, "complete", (inst.key, inst.gen, node_id))

    def complete_node(self, inst: _Instance, node_id: str, time: int) -> None:
        node = inst.graph.nodes[node_id]
        if node.kind is ActivityKind.TIMER:
            self.emit(
                time,
                "timer-expired",
                inst.owner,
                activity=node_id,
                graph=inst.graph.id,
                bound=node.timer_bound,
            )
        details = {"activity": node_id, "graph": inst.graph.id}
        if node.name:
            details["name"] = node.name
        if inst.role == "nominal":
            self.emit(time, "activity-end", inst.owner, **details)
        else:
            details["recovery"] = inst.recovery_id
            self.emit(time, "recovery-step", inst.owner, **details)
        if node.kind is ActivityKind.SEND:
            self.send_message(inst, node, time)

        out = inst.graph.out_edges(node_id)
        if not out:
            inst.live -= 1
            inst.exits_reached.append(node_id)
            if inst.role == "recovery":
                self.on_recovery_exit(inst, node_id, time)
            return
        if node.kind is ActivityKind.DECISION:
            targets = [self.pick_branch(inst, node_id, out)]
        elif node.kind is ActivityKind.FORK:
            targets = [e.dst for e in out]
            inst.live += len(targets) - 1
        else:
            targets = [out[0].dst]
        for target in targets:
            self.enter_node(inst, target, time)

    def pick_branch(self, inst: _Instance, node_id: str, out) -> str:
        chosen = self.config.guard_inputs.get(node_id)
        default = None
        for edge in out:
            if edge.guard is None:
                default = edge.dst
            elif chosen is not None and edge.guard == chosen:
                return edge.dst
        if default is None:
            labels = sorted(e.guard for e in out if e.guard is not None)
            raise InvalidConfigError(
                f"decision {node_id!r} in graph {inst.graph.id!r} has no default "
                f"branch and no guard input matched; valid labels: {labels}"
            )
        return default

    def send_message(self, inst: _Instance, node, time: int) -> None:
        conn = self.model.connections[node.channel]
        receiver = conn.consumer if conn.provider == inst.owner else conn.provider
        self.emit(
            time,
            "message-sent",
            inst.owner,
            channel=conn.id,
            activity=node.id,
            graph=inst.graph.id,
        )
        if not _draw(self.sampler, conn.reliability):
            self.emit(
                time,
                "message-lost",
                inst.owner,
                channel=conn.id,
                activity=node.id,
                graph=inst.graph.id,
            )
            return
        self.push(
            time + conn.latency,
            receiver,
            _R_DELIVER,
            "deliver",
            (receiver, conn.id, inst.owner),
        )

    def deliver_message(self, receiver: str, channel: str, sender: str, time: int) -> None:
        self.emit(
            time, "message-delivered", receiver, channel=channel, sender=sender
        )
        for key in sorted(self.instances):
            inst = self.instances[key]
            if inst.owner != receiver or inst.suspended:
                continue
            for node_id in sorted(inst.waiting_recv):
                node = inst.graph.nodes[node_id]
                if node.channel == channel:
                    del inst.waiting_recv[node_id]
                    self.schedule_completion(inst, node_id, time + node.duration)
                    return
        self.mailbox.setdefault((receiver, channel), []).append((time, sender))

    # -- fault injection and detection

    def on_nominal_start(self, inst: _Instance, node_id: str, time: int) -> None:
        if self.injected or self.activation is None:
            return
        origin = self.activation.origin_constituent
        if inst.owner != origin or inst.role != "nominal":
            return
        trigger = self.activation.trigger
        if isinstance(trigger, OnEntry):
            if node_id == trigger.activity:
                self.push(time, origin, _R_INJECT, "inject", ())
                self.injected = True  # reserved; the event does the work
        elif isinstance(trigger, Probabilistic):
            if node_id in self.activation.region and _draw(
                self.sampler, trigger.probability
            ):
                self.push(time, origin, _R_INJECT, "inject", ())
                self.injected = True

    def inject_fault(self, time: int) -> None:
        chain = self.chain
        assert chain is not None and self.activation is not None
        origin = self.activation.origin_constituent
        fault = self.model.threat_nodes.get(chain.fault)
        self.injected = True
        self.emit(
            time,
            "fault-activated",
            origin,
            chain=chain.id,
            fault=chain.fault,
            description=fault.description if fault else "",
        )
        nominal = self.instances.get(f"nominal:{origin}")
        if nominal is not None:
            nominal.suspend()
        self.push(time + 1, origin, _R_ERROR, "raise-error", ())

    def raise_error(self, time: int) -> None:
        chain = self.chain
        assert chain is not None
        self.error_time = time
        self.emit(
            time,
            "error-raised",
            chain.origin,
            chain=chain.id,
            error=chain.error,
        )
        if not self.config.recovery_enabled:
            return
        candidates = self.model.detections_for(chain.id)
        state = RaceState(
            error_time=time,
            horizon=self.config.horizon,
            enabled=self.enabled,
            sampler=self.sampler,
        )
        result = detection_race(candidates, state)
        if result.winner is not None:
            self.detected = result.winner
            self.push(
                result.time,
                result.winner.detector,
                _R_DETECT,
                "detect",
                (result.winner.id,),
            )

    def on_detect(self, spec_id: str, time: int) -> None:
        spec = self.model.detections[spec_id]
        if isinstance(spec.condition, Timeout):
            self.emit(
                time,
                "timer-expired",
                spec.detector,
                detection=spec.id,
                watched=spec.condition.watched,
                bound=spec.condition.bound,
            )
        self.emit(
            time,
            "error-detected",
            spec.detector,
            chain=spec.threat,
            detection=spec.id,
            recovery=spec.recovery,
        )
        self.push(time + 1, spec.detector, _R_RECOVERY_START, "start-recovery", (spec.id,))

    def on_recovery_start(self, spec_id: str, time: int) -> None:
        spec = self.model.detections[spec_id]
        recovery = self.model.recoveries[spec.recovery]
        self.recovery_started_at = time
        self.emit(
            time,
            "recovery-started",
            spec.detector,
            recovery=recovery.id,
            detection=spec.id,
            chain=spec.threat,
        )
        for inst in self.instances.values():
            if inst.role == "nominal":
                inst.suspend()
        for cs_id, graph_id in recovery.graphs.items():
            inst = _Instance(
                key=f"recovery:{recovery.id}:{graph_id}",
                graph=self.model.processes[graph_id],
                owner=cs_id,
                role="recovery",
                recovery_id=recovery.id,
            )
            self.start_instance(inst, time)
        self.check_recovery_done(time)

    def on_recovery_exit(self, inst: _Instance, node_id: str, time: int) -> None:
        recovery = self.model.recoveries[inst.recovery_id]
        if node_id in recovery.abort_exits:
            self.observe_failure(time, aborted_by=node_id)
            return
        self.check_recovery_done(time)

    def check_recovery_done(self, time: int) -> None:
        if self.recovery_finalize_scheduled or self.outcome is not None:
            return
        rec = [i for i in self.instances.values() if i.role == "recovery"]
        if rec and all(i.finished for i in rec):
            assert self.recovery_started_at is not None
            when = max(time, self.recovery_started_at + 1)
            detector = self.detected.detector if self.detected else ""
            self.push(when, detector, _R_FINALIZE, "finalize", ())
            self.recovery_finalize_scheduled = True

    def on_finalize(self, time: int) -> None:
        assert self.detected is not None and self.chain is not None
        self.emit(
            time,
            "recovery-complete",
            self.detected.detector,
            recovery=self.detected.recovery,
            chain=self.chain.id,
        )
        self.outcome = Outcome(
            "recovered", by=self.detected.detector, recovery=self.detected.recovery
        )

    def observe_failure(self, time: int, aborted_by: str | None = None) -> None:
        chain = self.chain
        assert chain is not None
        failure = self.model.threat_nodes.get(chain.failure)
        details = {
            "chain": chain.id,
            "failure": chain.failure,
            "description": failure.description if failure else "",
            "observation": chain.failure_observation.value,
        }
        if aborted_by is not None:
            details["aborted_by"] = aborted_by
        self.emit(time, "failure-observed", chain.origin, **details)
        self.outcome = Outcome("failed-at-boundary")

    # -- main loop

    def run(self) -> SimTrace:
        for cs_id in self.model.constituents:
            graph = self.model.processes[self.model.constituents[cs_id].nominal_process]
            inst = _Instance(f"nominal:{cs_id}", graph, cs_id, "nominal")
            self.start_instance(inst, 0)
        if self.activation is not None and isinstance(self.activation.trigger, AtTime):
            self.push(
                self.activation.trigger.time,
                self.activation.origin_constituent,
                _R_INJECT,
                "inject",
                (),
            )
            self.injected = True

        injected_fired = False
        while self.heap and self.outcome is None:
            time, actor, rank, _seq, kind, payload = heapq.heappop(self.heap)
            if kind == "complete":
                key, gen, node_id = payload
                inst = self.instances[key]
                if gen != inst.gen or inst.suspended:
                    continue  # cancelled by a suspension; not progress
            if time > self.config.horizon:
                self.outcome = Outcome("horizon-exhausted")
                break
            self.clock = time
            if kind == "complete":
                self.complete_node(inst, node_id, time)
            elif kind == "deliver":
                receiver, channel, sender = payload
                self.deliver_message(receiver, channel, sender, time)
            elif kind == "inject":
                if not injected_fired:
                    injected_fired = True
                    self.inject_fault(time)
            elif kind == "raise-error":
                self.raise_error(time)
            elif kind == "detect":
                self.on_detect(payload[0], time)
            elif kind == "start-recovery":
                self.on_recovery_start(payload[0], time)
            elif kind == "finalize":
                self.on_finalize(time)

        if self.outcome is None:
            self.finish_at_quiescence(injected_fired)
        assert self.outcome is not None
        trace = SimTrace(self.config, tuple(self.events), {}, self.outcome)
        metrics = compute_metrics(trace, self.model.metrics.values())
        return dataclasses.replace(trace, metrics=metrics)

    def finish_at_quiescence(self, injected_fired: bool) -> None:
        if self.chain is None:
            nominal = [i for i in self.instances.values() if i.role == "nominal"]
            if all(i.finished for i in nominal):
                self.outcome = Outcome("nominal")
            else:
                self.outcome = Outcome("horizon-exhausted")
            return
        if not injected_fired:
            raise SimulationError(
                f"scenario {self.chain.id!r}: the activation trigger never fired"
            )
        # Undetected error, disabled recovery, or a recovery that stalled:
        # the failure reaches the boundary when no progress remains.
        self.observe_failure(self.clock)


# ---------------------------------------------------------------------------
# Public operations


def _validate(model: SosModel, config: SimConfig) -> None:
    findings = check(model)
    blocking = blocking_violations(findings, config.scenario or "")
    if blocking:
        raise ModelViolationsError(blocking)

    if config.scenario is not None:
        chain = model.chains.get(config.scenario)
        if chain is None:
            raise InvalidConfigError(f"unknown scenario chain {config.scenario!r}")
        if config.enabled_detectors is not None:
            extra = config.enabled_detectors - set(chain.detectors)
            if extra:
                raise InvalidConfigError(
                    f"enabled detectors {sorted(extra)} are not detectors of "
                    f"chain {chain.id!r}"
                )
        activation = model.activation_for(config.scenario)
        if activation is None:
            raise InvalidConfigError(
                f"chain {config.scenario!r} has no activation specification"
            )
        if (
            isinstance(activation.trigger, AtTime)
            and activation.trigger.time > config.horizon
        ):
            raise InvalidConfigError(
                f"activation time {activation.trigger.time} lies beyond the "
                f"horizon {config.horizon}"
            )
    all_decisions = {
        node_id
        for graph in model.processes.values()
        for node_id, node in graph.nodes.items()
        if node.kind is ActivityKind.DECISION
    }
    for key in config.guard_inputs:
        if key not in all_decisions:
            raise InvalidConfigError(f"guard input {key!r} names no decision node")


def run(model: SosModel, config: SimConfig) -> SimTrace:
    """Simulate one configuration; pure in (model, config)."""
    _validate(model, config)
    engine = _Engine(model, config, RandomSampler(config.seed))
    return engine.run()


def enumerate_outcomes(
    model: SosModel, config: SimConfig, bound: int = 12
) -> set[tuple[str | None, str]]:
    """Every reachable (detector, outcome) pair, by exhausting choices.

    Explores both branches of every Bernoulli choice the seeded run
    would sample, depth-first over choice prefixes.  Only usable on
    small models: any activity graph larger than ``bound`` nodes is
    rejected.
    """
    for graph in model.processes.values():
        if len(graph.nodes) > bound:
            raise BoundExceededError(
                f"graph {graph.id!r} has {len(graph.nodes)} activities; "
                f"bound is {bound}"
            )
    _validate(model, config)
    outcomes: set[tuple[str | None, str]] = set()
    stack: list[tuple[bool, ...]] = [()]
    explored = 0
    while stack:
        prefix = stack.pop()
        explored += 1
        if explored > 4096:
            raise BoundExceededError("choice space exceeds 4096 branches")
        engine = _Engine(model, config, ScriptedSampler(prefix))
        try:
            trace = engine.run()
        except NeedChoice:
            stack.append(prefix + (False,))
            stack.append(prefix + (True,))
            continue
        outcomes.add(summarize(trace))
    return outcomes


def _matches(event: SimEvent, kind: str, qualifier: str | None) -> bool:
    if event.kind != kind:
        return False
    if qualifier is None or event.actor == qualifier:
        return True
    return any(
        value == qualifier
        for value in event.details.values()
        if isinstance(value, str)
    )


def compute_metrics(
    trace: SimTrace, specs: Iterable[MetricSpec]
) -> dict[str, int | None]:
    """Evaluate metrics over a finished trace.

    Elapsed metrics whose endpoints never occur yield None, never zero.
    """

    def first(pattern: str) -> int | None:
        try:
            kind, qualifier = split_event_pattern(pattern)
        except DanglingReferenceError as e:
            raise UnknownEventPatternError(str(e)) from None
        for event in trace.events:
            if _matches(event, kind, qualifier):
                return event.time
        return None

    out: dict[str, int | None] = {}
    for spec in specs:
        if isinstance(spec.kind, ElapsedBetween):
            a = first(spec.kind.a)
            b = first(spec.kind.b)
            out[spec.id] = None if a is None or b is None else b - a
        elif isinstance(spec.kind, Count):
            try:
                kind, qualifier = split_event_pattern(spec.kind.pattern)
            except DanglingReferenceError as e:
                raise UnknownEventPatternError(str(e)) from None
            out[spec.id] = sum(
                1 for event in trace.events if _matches(event, kind, qualifier)
            )
    return out


def format_trace(trace: SimTrace) -> str:
    """One JSON record per event plus a trailing summary record."""
    lines = [
        json.dumps(
            {
                "time": e.time,
                "kind": e.kind,
                "actor": e.actor,
                "details": dict(e.details),
            },
            sort_keys=True,
        )
        for e in trace.events
    ]
    lines.append(
        json.dumps(
            {
                "summary": {
                    "outcome": trace.outcome.kind,
                    "by": trace.outcome.by,
                    "recovery": trace.outcome.recovery,
                    "metrics": dict(trace.metrics),
                    "events": len(trace.events),
                }
            },
            sort_keys=True,
        )
    )
    return "\n".join(lines) + "\n"


def write_trace(trace: SimTrace, path: str | Path) -> None:
    Path(path).write_text(format_trace(trace), encoding="utf-8")
