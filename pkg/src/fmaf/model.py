"""Core model types for system-of-systems fault tolerance models.

A model names the constituent systems and environment entities of an SoS,
the connections between them, the threat vocabulary (faults, errors,
failures) with fault-error-failure chains, the activity graphs describing
nominal and recovery behaviour, and the activation/detection/recovery
specifications that drive fault injection.

Constructors deliberately permit taxonomy-violating content (for example an
environment entity as a chain origin); the consistency checker reports such
content instead of the type system rejecting it. ``build_model`` enforces
only structural validity: unique identifiers, resolvable references and
well-formed activity graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence, Union


class FmafError(Exception):
    """Base class for all toolkit errors."""


class DuplicateIdError(FmafError):
    def __init__(self, category: str, ident: str, detail: str = "") -> None:
        self.category = category
        self.ident = ident
        msg = f"duplicate {category} id {ident!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class DanglingReferenceError(FmafError):
    def __init__(self, category: str, ref: str, context: str) -> None:
        self.category = category
        self.ref = ref
        self.context = context
        super().__init__(f"{context} references unknown {category} {ref!r}")


class KindMismatchError(FmafError):
    pass


class GraphStructureError(FmafError):
    def __init__(self, graph_id: str, detail: str) -> None:
        self.graph_id = graph_id
        super().__init__(f"activity graph {graph_id!r}: {detail}")


class DuplicateSuffixError(FmafError):
    pass


class ThreatKind(str, Enum):
    FAULT = "fault"
    ERROR = "error"
    FAILURE = "failure"


class FailureObservation(str, Enum):
    SOS_BOUNDARY = "sos-boundary"
    INTERNAL = "internal"


class ConnectionKind(str, Enum):
    NOMINAL = "nominal"
    RECOVERY_ONLY = "recovery-only"


class ActivityKind(str, Enum):
    ACTION = "action"
    SEND = "send"
    RECEIVE = "receive"
    FORK = "fork"
    JOIN = "join"
    DECISION = "decision"
    TIMER = "timer"


class DetectionStyle(str, Enum):
    SEPARATE_REGION = "separate-region"
    SHARED_REGION = "shared-region"


#: Every event kind a simulation trace may contain.  Metric event patterns
#: are validated against this vocabulary at model build time.
EVENT_KINDS: tuple[str, ...] = (
    "activity-start",
    "activity-end",
    "message-sent",
    "message-delivered",
    "message-lost",
    "fault-activated",
    "error-raised",
    "error-detected",
    "recovery-started",
    "recovery-step",
    "recovery-complete",
    "failure-observed",
    "timer-expired",
)

_IDENT_HEAD = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz")
_IDENT_TAIL = _IDENT_HEAD | set("0123456789_.")


def is_identifier(text: str) -> bool:
    return bool(text) and text[0] in _IDENT_HEAD and all(c in _IDENT_TAIL for c in text)


def _require_identifier(ident: str, what: str) -> None:
    if not is_identifier(ident):
        raise FmafError(f"{what} id {ident!r} is not a valid identifier")


@dataclass(frozen=True, slots=True)
class ConstituentSystem:
    id: str
    name: str
    nominal_process: str
    provided_interfaces: frozenset[str] = frozenset()
    required_interfaces: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _require_identifier(self.id, "constituent")


@dataclass(frozen=True, slots=True)
class EnvironmentEntity:
    id: str
    name: str
    connections_used: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _require_identifier(self.id, "environment entity")


@dataclass(frozen=True, slots=True)
class Connection:
    """A bidirectional link between two elements.

    ``latency`` is the delivery delay in ticks and ``reliability`` the
    per-send probability that a message survives the link.
    """

    id: str
    interface_id: str
    provider: str
    consumer: str
    kind: ConnectionKind = ConnectionKind.NOMINAL
    latency: int = 1
    reliability: float = 1.0

    def __post_init__(self) -> None:
        _require_identifier(self.id, "connection")
        if self.provider == self.consumer:
            raise FmafError(f"connection {self.id!r}: provider equals consumer")
        if self.latency < 0:
            raise FmafError(f"connection {self.id!r}: negative latency")
        if not 0.0 <= self.reliability <= 1.0:
            raise FmafError(f"connection {self.id!r}: reliability outside [0, 1]")

    def endpoints(self) -> frozenset[str]:
        return frozenset((self.provider, self.consumer))


@dataclass(frozen=True, slots=True)
class ThreatNode:
    id: str
    kind: ThreatKind
    description: str
    category: str | None = None

    def __post_init__(self) -> None:
        _require_identifier(self.id, "threat node")


@dataclass(frozen=True, slots=True)
class ThreatChain:
    """One fault-error-failure causal chain through the SoS."""

    id: str
    fault: str
    error: str
    failure: str
    origin: str
    detectors: tuple[str, ...]
    failure_observation: FailureObservation = FailureObservation.SOS_BOUNDARY
    unrecoverable: bool = False

    def __post_init__(self) -> None:
        _require_identifier(self.id, "threat chain")
        if not self.detectors and not self.unrecoverable:
            raise FmafError(
                f"chain {self.id!r}: detectors empty but chain not marked unrecoverable"
            )
        if len(set(self.detectors)) != len(self.detectors):
            raise FmafError(f"chain {self.id!r}: duplicate detector entries")


@dataclass(frozen=True, slots=True)
class Activity:
    id: str
    kind: ActivityKind
    name: str = ""
    duration: int = 0
    channel: str | None = None
    timer_bound: int | None = None

    def __post_init__(self) -> None:
        _require_identifier(self.id, "activity")
        if self.duration < 0:
            raise FmafError(f"activity {self.id!r}: negative duration")
        needs_channel = self.kind in (ActivityKind.SEND, ActivityKind.RECEIVE)
        if needs_channel and not self.channel:
            raise FmafError(f"activity {self.id!r}: {self.kind.value} requires a channel")
        if not needs_channel and self.channel is not None:
            raise FmafError(f"activity {self.id!r}: channel on non-messaging activity")
        if self.kind is ActivityKind.TIMER:
            if self.timer_bound is None or self.timer_bound < 0:
                raise FmafError(f"activity {self.id!r}: timer requires a non-negative bound")
        elif self.timer_bound is not None:
            raise FmafError(f"activity {self.id!r}: timer_bound on non-timer activity")

    @property
    def display_name(self) -> str:
        return self.name or self.id

    def effective_duration(self) -> int:
        if self.kind is ActivityKind.TIMER:
            return self.timer_bound or 0
        return self.duration


@dataclass(frozen=True, slots=True)
class Edge:
    src: str
    dst: str
    guard: str | None = None


@dataclass(frozen=True, slots=True)
class ActivityGraph:
    """A directed activity graph owned by one constituent.

    Activity ids are scoped to their graph; the graph is the namespace.
    Structural rules (checked by :func:`build_model`):

    * the entry reaches every node and every node reaches some exit;
    * exits are exactly the nodes without outgoing edges;
    * forks have at least two unguarded out-edges and a unique matching
      join (the fork's immediate post-dominator) whose in-degree equals
      the fork's out-degree;
    * out-edges of a decision carry mutually exclusive guard labels with
      at most one unguarded default;
    * any other node has at most one (unguarded) out-edge;
    * every cycle contains an activity that consumes time.
    """

    id: str
    owner: str
    nodes: Mapping[str, Activity]
    edges: tuple[Edge, ...]
    entry: str
    exits: frozenset[str]

    def __post_init__(self) -> None:
        _require_identifier(self.id, "activity graph")
        # Canonical internal order: declaration order must never leak into
        # equality or serialized form.
        object.__setattr__(
            self, "nodes", {k: self.nodes[k] for k in sorted(self.nodes)}
        )
        object.__setattr__(
            self,
            "edges",
            tuple(sorted(self.edges, key=lambda e: (e.src, e.dst, e.guard or ""))),
        )

    def out_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node_id]

    def in_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node_id]


@dataclass(frozen=True, slots=True)
class AtTime:
    """Inject at a fixed tick, wherever execution happens to be."""

    time: int

    def __post_init__(self) -> None:
        if self.time < 0:
            raise FmafError("at-time trigger: negative tick")


@dataclass(frozen=True, slots=True)
class OnEntry:
    """Inject when the named activity is first entered."""

    activity: str


@dataclass(frozen=True, slots=True)
class Probabilistic:
    """Inject with probability p at each entry of a region activity."""

    probability: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise FmafError("probabilistic trigger: probability outside [0, 1]")


Trigger = Union[AtTime, OnEntry, Probabilistic]


@dataclass(frozen=True, slots=True)
class ActivationSpec:
    id: str
    threat: str
    origin_constituent: str
    region: frozenset[str]
    trigger: Trigger

    def __post_init__(self) -> None:
        _require_identifier(self.id, "activation")
        if not self.region:
            raise FmafError(f"activation {self.id!r}: empty region")


@dataclass(frozen=True, slots=True)
class SelfReport:
    delay: int

    def __post_init__(self) -> None:
        if self.delay < 0:
            raise FmafError("self-report condition: negative delay")


@dataclass(frozen=True, slots=True)
class Timeout:
    bound: int
    watched: str

    def __post_init__(self) -> None:
        if self.bound < 0:
            raise FmafError("timeout condition: negative bound")


@dataclass(frozen=True, slots=True)
class ThirdPartyReport:
    probability: float
    delay: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise FmafError("third-party condition: probability outside [0, 1]")
        if self.delay < 0:
            raise FmafError("third-party condition: negative delay")


DetectionCondition = Union[SelfReport, Timeout, ThirdPartyReport]


@dataclass(frozen=True, slots=True)
class DetectionSpec:
    id: str
    threat: str
    detector: str
    condition: DetectionCondition
    recovery: str
    style: DetectionStyle = DetectionStyle.SEPARATE_REGION

    def __post_init__(self) -> None:
        _require_identifier(self.id, "detection")


@dataclass(frozen=True, slots=True)
class RecoverySpec:
    """Per-constituent recovery graphs plus exit classification.

    Exits not listed in either set count as successful terminations.
    """

    id: str
    name: str
    graphs: Mapping[str, str]
    success_exits: frozenset[str] = frozenset()
    abort_exits: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        _require_identifier(self.id, "recovery")
        if not self.graphs:
            raise FmafError(f"recovery {self.id!r}: no graphs")
        object.__setattr__(
            self, "graphs", {k: self.graphs[k] for k in sorted(self.graphs)}
        )
        overlap = self.success_exits & self.abort_exits
        if overlap:
            raise FmafError(
                f"recovery {self.id!r}: exits both success and abort: {sorted(overlap)}"
            )


@dataclass(frozen=True, slots=True)
class ElapsedBetween:
    """time(first event matching b) - time(first event matching a)."""

    a: str
    b: str


@dataclass(frozen=True, slots=True)
class Count:
    pattern: str


MetricKind = Union[ElapsedBetween, Count]


@dataclass(frozen=True, slots=True)
class MetricSpec:
    id: str
    kind: MetricKind
    name: str = ""
    target: int | None = None

    def __post_init__(self) -> None:
        _require_identifier(self.id, "metric")


@dataclass(frozen=True)
class SosModel:
    """An immutable system-of-systems fault tolerance model."""

    name: str
    constituents: Mapping[str, ConstituentSystem] = field(default_factory=dict)
    environment: Mapping[str, EnvironmentEntity] = field(default_factory=dict)
    connections: Mapping[str, Connection] = field(default_factory=dict)
    threat_nodes: Mapping[str, ThreatNode] = field(default_factory=dict)
    chains: Mapping[str, ThreatChain] = field(default_factory=dict)
    processes: Mapping[str, ActivityGraph] = field(default_factory=dict)
    activations: Mapping[str, ActivationSpec] = field(default_factory=dict)
    detections: Mapping[str, DetectionSpec] = field(default_factory=dict)
    recoveries: Mapping[str, RecoverySpec] = field(default_factory=dict)
    metrics: Mapping[str, MetricSpec] = field(default_factory=dict)

    def element(self, ident: str) -> ConstituentSystem | EnvironmentEntity | None:
        """A constituent or environment entity by id, if declared."""
        return self.constituents.get(ident) or self.environment.get(ident)

    def is_constituent(self, ident: str) -> bool:
        return ident in self.constituents

    def find_activity(self, activity_id: str) -> list[str]:
        """Ids of every graph declaring an activity with this id."""
        return sorted(g.id for g in self.processes.values() if activity_id in g.nodes)

    def detections_for(self, chain_id: str) -> list[DetectionSpec]:
        return sorted(
            (d for d in self.detections.values() if d.threat == chain_id),
            key=lambda d: d.id,
        )

    def activation_for(self, chain_id: str) -> ActivationSpec | None:
        for spec in sorted(self.activations.values(), key=lambda a: a.id):
            if spec.threat == chain_id:
                return spec
        return None


def _check_unique(category: str, items: Iterable[str]) -> None:
    seen: set[str] = set()
    for ident in items:
        if ident in seen:
            raise DuplicateIdError(category, ident)
        seen.add(ident)


def _reachable(start: str, forward: Mapping[str, list[str]]) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in forward.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _immediate_postdominators(graph: ActivityGraph) -> dict[str, str | None]:
    """Immediate post-dominator of each node, over a virtual common sink."""
    sink = object()
    nodes: list[object] = [sink] + sorted(graph.nodes)
    succ: dict[object, list[object]] = {n: [] for n in nodes}
    for edge in graph.edges:
        succ[edge.src].append(edge.dst)
    for ex in graph.exits:
        succ[ex].append(sink)
    # Iterative dominator dataflow on the reversed graph, rooted at the sink.
    postdom: dict[object, set[object]] = {n: set(nodes) for n in nodes}
    postdom[sink] = {sink}
    changed = True
    while changed:
        changed = False
        for n in nodes:
            if n is sink:
                continue
            succs = succ[n]
            if not succs:
                new = {n}
            else:
                new = set.intersection(*(postdom[s] for s in succs)) | {n}
            if new != postdom[n]:
                postdom[n] = new
                changed = True
    result: dict[str, str | None] = {}
    for n in nodes:
        if n is sink:
            continue
        candidates = postdom[n] - {n}
        # The immediate post-dominator is the candidate all others post-dominate.
        ipdom: object | None = None
        for c in candidates:
            if all(other is c or other in postdom[c] for other in candidates):
                ipdom = c
                break
        result[n] = None if ipdom is sink or ipdom is None else ipdom  # type: ignore[assignment]
    return result


def _validate_graph(graph: ActivityGraph) -> None:
    gid = graph.id
    if not graph.nodes:
        raise GraphStructureError(gid, "no activities")
    for node_id, activity in graph.nodes.items():
        if node_id != activity.id:
            raise GraphStructureError(gid, f"node key {node_id!r} != activity id {activity.id!r}")
    for edge in graph.edges:
        for end in (edge.src, edge.dst):
            if end not in graph.nodes:
                raise DanglingReferenceError("activity", end, f"edge in graph {gid!r}")
    if graph.entry not in graph.nodes:
        raise DanglingReferenceError("activity", graph.entry, f"entry of graph {gid!r}")
    for ex in graph.exits:
        if ex not in graph.nodes:
            raise DanglingReferenceError("activity", ex, f"exit of graph {gid!r}")

    forward: dict[str, list[str]] = {n: [] for n in graph.nodes}
    backward: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for edge in graph.edges:
        forward[edge.src].append(edge.dst)
        backward[edge.dst].append(edge.src)

    sinks = {n for n in graph.nodes if not forward[n]}
    if sinks != set(graph.exits):
        raise GraphStructureError(
            gid,
            f"exits {sorted(graph.exits)} must be exactly the sink nodes {sorted(sinks)}",
        )

    reachable = _reachable(graph.entry, forward)
    if reachable != set(graph.nodes):
        missing = sorted(set(graph.nodes) - reachable)
        raise GraphStructureError(gid, f"unreachable from entry: {missing}")
    reaches_exit: set[str] = set()
    for ex in graph.exits:
        reaches_exit |= _reachable(ex, backward)
    if reaches_exit != set(graph.nodes):
        stuck = sorted(set(graph.nodes) - reaches_exit)
        raise GraphStructureError(gid, f"cannot reach any exit: {stuck}")

    for node_id, activity in graph.nodes.items():
        outs = [e for e in graph.edges if e.src == node_id]
        ins = backward[node_id]
        if activity.kind is ActivityKind.FORK:
            if len(outs) < 2:
                raise GraphStructureError(gid, f"fork {node_id!r} needs >= 2 out-edges")
            if any(e.guard for e in outs):
                raise GraphStructureError(gid, f"fork {node_id!r} has guarded out-edges")
        elif activity.kind is ActivityKind.DECISION:
            guards = [e.guard for e in outs]
            labelled = [g for g in guards if g is not None]
            if len(set(labelled)) != len(labelled):
                raise GraphStructureError(gid, f"decision {node_id!r} has duplicate guards")
            if guards.count(None) > 1:
                raise GraphStructureError(gid, f"decision {node_id!r} has multiple defaults")
            if not outs:
                raise GraphStructureError(gid, f"decision {node_id!r} has no out-edges")
        else:
            if len(outs) > 1:
                raise GraphStructureError(
                    gid, f"{activity.kind.value} {node_id!r} has multiple out-edges"
                )
            if outs and outs[0].guard is not None:
                raise GraphStructureError(gid, f"guard on out-edge of non-decision {node_id!r}")
        if activity.kind is ActivityKind.JOIN and len(ins) < 2:
            raise GraphStructureError(gid, f"join {node_id!r} needs >= 2 in-edges")

    # Fork/join well-nesting: the immediate post-dominator of a fork must be a
    # join claimed by exactly that fork, arity-matched.
    forks = [n for n, a in graph.nodes.items() if a.kind is ActivityKind.FORK]
    joins = {n for n, a in graph.nodes.items() if a.kind is ActivityKind.JOIN}
    if forks or joins:
        ipdom = _immediate_postdominators(graph)
        claimed: dict[str, str] = {}
        for fork in sorted(forks):
            match = ipdom[fork]
            if match is None or match not in joins:
                raise GraphStructureError(gid, f"fork {fork!r} has no matching join")
            if match in claimed:
                raise GraphStructureError(
                    gid, f"join {match!r} matches forks {claimed[match]!r} and {fork!r}"
                )
            if len(backward[match]) != len(forward[fork]):
                raise GraphStructureError(
                    gid,
                    f"join {match!r} in-degree differs from fork {fork!r} out-degree",
                )
            claimed[match] = fork
        unclaimed = joins - set(claimed)
        if unclaimed:
            raise GraphStructureError(gid, f"join without matching fork: {sorted(unclaimed)}")

    # Zero-time cycles would let simulated time stand still forever.
    zero = {n for n, a in graph.nodes.items() if a.effective_duration() == 0}
    zero_forward = {n: [m for m in forward[n] if m in zero] for n in zero}
    state: dict[str, int] = {}

    def visit(node: str) -> None:
        state[node] = 1
        for nxt in zero_forward[node]:
            mark = state.get(nxt)
            if mark == 1:
                raise GraphStructureError(gid, "cycle with no time-consuming activity")
            if mark is None:
                visit(nxt)
        state[node] = 2

    for n in sorted(zero):
        if n not in state:
            visit(n)


_PATTERN_CONTEXT = "metric event pattern"


def split_event_pattern(pattern: str) -> tuple[str, str | None]:
    """Split ``kind`` or ``kind:qualifier``; raises on unknown event kinds."""
    kind, _, qualifier = pattern.partition(":")
    if kind not in EVENT_KINDS:
        raise DanglingReferenceError("event kind", kind, _PATTERN_CONTEXT)
    return kind, (qualifier or None)


def _validate_metric_pattern(model: SosModel, metric_id: str, pattern: str) -> None:
    kind, qualifier = split_event_pattern(pattern)
    if qualifier is None:
        return
    vocabulary: set[str] = set(model.threat_nodes) | set(model.constituents)
    vocabulary |= set(model.environment) | set(model.connections) | set(model.chains)
    for graph in model.processes.values():
        vocabulary |= set(graph.nodes)
    if qualifier not in vocabulary:
        raise DanglingReferenceError(
            "event label", qualifier, f"metric {metric_id!r} pattern {pattern!r}"
        )


def build_model(
    name: str = "Empty",
    constituents: Sequence[ConstituentSystem] = (),
    environment: Sequence[EnvironmentEntity] = (),
    connections: Sequence[Connection] = (),
    threat_nodes: Sequence[ThreatNode] = (),
    chains: Sequence[ThreatChain] = (),
    processes: Sequence[ActivityGraph] = (),
    activations: Sequence[ActivationSpec] = (),
    detections: Sequence[DetectionSpec] = (),
    recoveries: Sequence[RecoverySpec] = (),
    metrics: Sequence[MetricSpec] = (),
) -> SosModel:
    """Assemble model fragments into a validated :class:`SosModel`.

    Raises :class:`DuplicateIdError` when an id is declared twice within a
    category, :class:`DanglingReferenceError` when a cross-reference does
    not resolve, and :class:`GraphStructureError` for ill-formed activity
    graphs. Taxonomy rules are deliberately NOT enforced here; the checker
    reports them.
    """

    _require_identifier(name, "model")
    _check_unique("constituent", (c.id for c in constituents))
    _check_unique("environment entity", (e.id for e in environment))
    _check_unique("connection", (c.id for c in connections))
    _check_unique("threat node", (n.id for n in threat_nodes))
    _check_unique("threat chain", (c.id for c in chains))
    _check_unique("activity graph", (g.id for g in processes))
    _check_unique("activation", (a.id for a in activations))
    _check_unique("detection", (d.id for d in detections))
    _check_unique("recovery", (r.id for r in recoveries))
    _check_unique("metric", (m.id for m in metrics))
    element_ids = {c.id for c in constituents} | {e.id for e in environment}
    overlap = {c.id for c in constituents} & {e.id for e in environment}
    if overlap:
        raise DuplicateIdError("element", sorted(overlap)[0], "constituent vs environment")

    model = SosModel(
        name=name,
        constituents={c.id: c for c in sorted(constituents, key=lambda x: x.id)},
        environment={e.id: e for e in sorted(environment, key=lambda x: x.id)},
        connections={c.id: c for c in sorted(connections, key=lambda x: x.id)},
        threat_nodes={n.id: n for n in sorted(threat_nodes, key=lambda x: x.id)},
        chains={c.id: c for c in sorted(chains, key=lambda x: x.id)},
        processes={g.id: g for g in sorted(processes, key=lambda x: x.id)},
        activations={a.id: a for a in sorted(activations, key=lambda x: x.id)},
        detections={d.id: d for d in sorted(detections, key=lambda x: x.id)},
        recoveries={r.id: r for r in sorted(recoveries, key=lambda x: x.id)},
        metrics={m.id: m for m in sorted(metrics, key=lambda x: x.id)},
    )

    for conn in model.connections.values():
        for end in (conn.provider, conn.consumer):
            if end not in element_ids:
                raise DanglingReferenceError("element", end, f"connection {conn.id!r}")

    all_activity_ids: set[str] = set()
    for graph in model.processes.values():
        _validate_graph(graph)
        all_activity_ids |= set(graph.nodes)
        if graph.owner not in model.constituents:
            raise DanglingReferenceError("constituent", graph.owner, f"graph {graph.id!r}")
        for activity in graph.nodes.values():
            if activity.channel is None:
                continue
            conn = model.connections.get(activity.channel)
            if conn is None:
                raise DanglingReferenceError(
                    "connection", activity.channel, f"activity {activity.id!r} in {graph.id!r}"
                )
            if graph.owner not in conn.endpoints():
                raise GraphStructureError(
                    graph.id,
                    f"activity {activity.id!r} uses channel {conn.id!r} "
                    f"whose endpoints exclude owner {graph.owner!r}",
                )

    for cs in model.constituents.values():
        graph = model.processes.get(cs.nominal_process)
        if graph is None:
            raise DanglingReferenceError(
                "activity graph", cs.nominal_process, f"constituent {cs.id!r}"
            )
        if graph.owner != cs.id:
            raise GraphStructureError(
                graph.id, f"nominal process of {cs.id!r} is owned by {graph.owner!r}"
            )

    for chain in model.chains.values():
        for role, ref, want in (
            ("fault", chain.fault, ThreatKind.FAULT),
            ("error", chain.error, ThreatKind.ERROR),
            ("failure", chain.failure, ThreatKind.FAILURE),
        ):
            node = model.threat_nodes.get(ref)
            if node is None:
                raise DanglingReferenceError("threat node", ref, f"chain {chain.id!r}")
            if node.kind is not want:
                raise KindMismatchError(
                    f"chain {chain.id!r}: {role} slot references {node.kind.value} node {ref!r}"
                )
        if chain.origin not in element_ids:
            raise DanglingReferenceError("element", chain.origin, f"chain {chain.id!r}")
        for det in chain.detectors:
            if det not in element_ids:
                raise DanglingReferenceError("element", det, f"chain {chain.id!r} detectors")

    for spec in model.activations.values():
        if spec.threat not in model.chains:
            raise DanglingReferenceError("threat chain", spec.threat, f"activation {spec.id!r}")
        if spec.origin_constituent not in element_ids:
            raise DanglingReferenceError(
                "element", spec.origin_constituent, f"activation {spec.id!r}"
            )
        for act_id in spec.region:
            if act_id not in all_activity_ids:
                raise DanglingReferenceError(
                    "activity", act_id, f"activation {spec.id!r} region"
                )
        if isinstance(spec.trigger, OnEntry) and spec.trigger.activity not in all_activity_ids:
            raise DanglingReferenceError(
                "activity", spec.trigger.activity, f"activation {spec.id!r} trigger"
            )

    for det in model.detections.values():
        chain = model.chains.get(det.threat)
        if chain is None:
            raise DanglingReferenceError("threat chain", det.threat, f"detection {det.id!r}")
        if det.detector not in element_ids:
            raise DanglingReferenceError("element", det.detector, f"detection {det.id!r}")
        if det.detector not in chain.detectors:
            raise FmafError(
                f"detection {det.id!r}: detector {det.detector!r} not in "
                f"chain {chain.id!r} detectors"
            )
        if isinstance(det.condition, Timeout) and det.condition.watched not in element_ids:
            raise DanglingReferenceError(
                "element", det.condition.watched, f"detection {det.id!r} watch target"
            )
        if det.recovery not in model.recoveries:
            raise DanglingReferenceError("recovery", det.recovery, f"detection {det.id!r}")

    for rec in model.recoveries.values():
        exit_pool: set[str] = set()
        for cs_id, graph_id in rec.graphs.items():
            if cs_id not in model.constituents:
                raise DanglingReferenceError("constituent", cs_id, f"recovery {rec.id!r}")
            graph = model.processes.get(graph_id)
            if graph is None:
                raise DanglingReferenceError(
                    "activity graph", graph_id, f"recovery {rec.id!r}"
                )
            if graph.owner != cs_id:
                raise GraphStructureError(
                    graph_id, f"recovery {rec.id!r} maps it to {cs_id!r} but owner is {graph.owner!r}"
                )
            collision = exit_pool & set(graph.exits)
            if collision:
                raise DuplicateIdError(
                    "recovery exit", sorted(collision)[0], f"within recovery {rec.id!r}"
                )
            exit_pool |= set(graph.exits)
        for ex in rec.success_exits | rec.abort_exits:
            if ex not in exit_pool:
                raise DanglingReferenceError(
                    "graph exit", ex, f"recovery {rec.id!r} exit classification"
                )

    for metric in model.metrics.values():
        if isinstance(metric.kind, ElapsedBetween):
            _validate_metric_pattern(model, metric.id, metric.kind.a)
            _validate_metric_pattern(model, metric.id, metric.kind.b)
        else:
            _validate_metric_pattern(model, metric.id, metric.kind.pattern)

    return model


def lift_cs_failure(model: SosModel, cs_failure: ThreatNode, cs: str) -> ThreatNode:
    """Lift a constituent-level failure to an SoS-level fault.

    At the level of a single constituent the event is a failure; at the
    level of the whole SoS the same event acts as a fault. The returned
    node is freshly derived but deterministic: calling twice yields equal
    values. The model is never modified.
    """

    if cs_failure.kind is not ThreatKind.FAILURE:
        raise KindMismatchError(
            f"lift_cs_failure requires a failure node, got {cs_failure.kind.value!r}"
        )
    if cs not in model.constituents:
        raise DanglingReferenceError("constituent", cs, "lift_cs_failure")
    return ThreatNode(
        id=f"{cs_failure.id}.lifted.{cs}",
        kind=ThreatKind.FAULT,
        description=f"{cs_failure.description} (failure of {cs})",
        category=cs_failure.category,
    )


@dataclass(frozen=True, slots=True)
class PartitionResult:
    """Chains produced by :func:`partition_fault` plus derived activations.

    One ActivationSpec is derived per variant that named a region; its
    trigger is a placeholder (entry of the region's first activity) that
    callers typically replace.
    """

    chains: tuple[ThreatChain, ...]
    activations: tuple[ActivationSpec, ...]


def partition_fault(
    model: SosModel,
    base: str,
    variants: Sequence[tuple[str, str, Iterable[str], Iterable[str]]],
) -> PartitionResult:
    """Split a base chain into sub-fault variants.

    Each variant is ``(suffix, origin, region, detectors)``. Variant chains
    share the base chain's threat nodes and observation point and get ids
    ``base + suffix``. The base chain stays in the model untouched, acting
    as the variants' abstract parent. Pure: the model is never modified.
    """

    base_chain = model.chains.get(base)
    if base_chain is None:
        raise DanglingReferenceError("threat chain", base, "partition_fault")
    seen_suffixes: set[str] = set()
    all_activity_ids: set[str] = set()
    for graph in model.processes.values():
        all_activity_ids |= set(graph.nodes)

    out_chains: list[ThreatChain] = []
    out_activations: list[ActivationSpec] = []
    for suffix, origin, region, detectors in variants:
        if suffix in seen_suffixes:
            raise DuplicateSuffixError(f"partition_fault: duplicate suffix {suffix!r}")
        seen_suffixes.add(suffix)
        if origin not in model.constituents and origin not in model.environment:
            raise DanglingReferenceError("element", origin, "partition_fault variant origin")
        detector_tuple = tuple(detectors)
        for det in detector_tuple:
            if det not in model.constituents and det not in model.environment:
                raise DanglingReferenceError(
                    "element", det, "partition_fault variant detector"
                )
        region_set = frozenset(region)
        for act_id in region_set:
            if act_id not in all_activity_ids:
                raise DanglingReferenceError(
                    "activity", act_id, "partition_fault variant region"
                )
        chain_id = base_chain.id + suffix
        out_chains.append(
            ThreatChain(
                id=chain_id,
                fault=base_chain.fault,
                error=base_chain.error,
                failure=base_chain.failure,
                origin=origin,
                detectors=detector_tuple,
                failure_observation=base_chain.failure_observation,
                unrecoverable=not detector_tuple,
            )
        )
        if region_set:
            out_activations.append(
                ActivationSpec(
                    id=f"{chain_id}.activation",
                    threat=chain_id,
                    origin_constituent=origin,
                    region=region_set,
                    trigger=OnEntry(sorted(region_set)[0]),
                )
            )
    return PartitionResult(chains=tuple(out_chains), activations=tuple(out_activations))
