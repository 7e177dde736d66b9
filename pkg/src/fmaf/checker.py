"""Consistency checker for SoS fault tolerance models.

The rule catalog enforces the dependability taxonomy and the coherence
between the modelled viewpoints: where failures are observed, what may
originate a fault, which constituents the detection/recovery structure
may rely on, and how detection hands over to recovery.  ``check``
evaluates every rule and returns deterministic, ordered findings;
``explain`` documents any single rule.

Model constructors deliberately accept taxonomy-violating content (an
environment entity as a chain origin, for instance) precisely so that
this module can report it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .model import FmafError, SosModel

__all__ = [
    "Severity",
    "Finding",
    "Rule",
    "CATALOG",
    "UnknownRuleError",
    "check",
    "explain",
    "has_violations",
    "blocking_violations",
    "format_report",
    "to_records",
]


class UnknownRuleError(FmafError):
    def __init__(self, rule_id: str) -> None:
        self.rule_id = rule_id
        super().__init__(f"unknown rule {rule_id!r}")


class Severity(str, Enum):
    VIOLATION = "violation"
    WARNING = "warning"


@dataclass(frozen=True, slots=True)
class Finding:
    """One rule hit on one subject element.

    ``chain`` scopes the finding to a fault-error-failure chain when the
    defect only concerns that chain's analysis; findings with ``chain``
    None are global.  The simulator refuses to run a scenario whose
    chain has blocking violations, while sibling chains in the same
    model stay runnable.
    """

    rule_id: str
    severity: Severity
    subject: str
    message: str
    chain: str | None = None

    def sort_key(self) -> tuple[int, str, str]:
        return (int(self.rule_id[1:]), self.subject, self.message)

    def __str__(self) -> str:
        scope = f" [chain {self.chain}]" if self.chain else ""
        return f"{self.rule_id} {self.severity.value} {self.subject}: {self.message}{scope}"


@dataclass(frozen=True, slots=True)
class Rule:
    rule_id: str
    title: str
    severity: Severity
    statement: str
    rationale: str


CATALOG: dict[str, Rule] = {
    r.rule_id: r
    for r in (
        Rule(
            "R1",
            "failure-at-boundary",
            Severity.VIOLATION,
            "Every fault-error-failure chain must declare its failure as "
            "observable at the SoS boundary.",
            "A failure is the event at which the delivered service deviates "
            "from the SoS mission, so failures are observable at the external "
            "boundary of the SoS; a deviation that never reaches the boundary "
            "is an error state, not a failure.",
        ),
        Rule(
            "R2",
            "fault-origin-is-cs",
            Severity.VIOLATION,
            "Chain origins and activation origins must be constituent "
            "systems, never environment entities.",
            "Environment entities sit outside the dependability boundary: "
            "a fault should be introduced by a CS, while the environment can "
            "only stimulate behaviour the SoS already has.",
        ),
        Rule(
            "R3",
            "connections-cover-structure",
            Severity.VIOLATION,
            "Every constituent taking part in a chain's detection or "
            "recovery must appear as an endpoint of at least one declared "
            "connection.",
            "The fault tolerance structure includes all the constituents "
            "that detection and recovery rely on, and their coordination "
            "travels over connections; a participant that is no connection "
            "endpoint cannot coordinate.",
        ),
        Rule(
            "R4",
            "threats-defined",
            Severity.VIOLATION,
            "Every threat node a chain references must exist in the model's "
            "threat definitions.",
            "The fault, error and failure definitions are the threat "
            "vocabulary of the SoS; a chain over undefined nodes describes "
            "nothing.",
        ),
        Rule(
            "R5",
            "detection-triggers-recovery",
            Severity.VIOLATION,
            "Every detection must name a declared recovery, and every "
            "detector a chain lists must have at least one detection "
            "specification.",
            "Each detection event prompts the beginning of the recovery "
            "process; a detector with no detection specification, or a "
            "detection with no recovery behind it, breaks that causal chain.",
        ),
        Rule(
            "R6",
            "recovery-connectivity",
            Severity.VIOLATION,
            "Every send or receive activity in a recovery graph must use a "
            "connection declared in the model, nominal or recovery-only.",
            "Recovery coordination often needs channels the nominal flow "
            "never uses, such as phoning the original caller back over a "
            "line reserved for recovery; those channels must still be "
            "declared connections of the model.",
        ),
        Rule(
            "R7",
            "region-in-owner",
            Severity.WARNING,
            "An activation region should lie inside the nominal activity "
            "graph of the activation's origin constituent.",
            "A fault corrupts the behaviour of the constituent it arises "
            "in; a region naming another constituent's activities usually "
            "indicates a misplaced declaration.",
        ),
        Rule(
            "R8",
            "recovery-connection-used",
            Severity.WARNING,
            "A connection marked recovery-only should be used as the "
            "channel of at least one activity in some recovery graph.",
            "A connection reserved for recovery that no recovery behaviour "
            "references is either dead weight or a sign that a recovery "
            "graph names the wrong channel.",
        ),
    )
}


def explain(rule_id: str) -> str:
    """The rule's statement and the taxonomy rationale behind it."""
    rule = CATALOG.get(rule_id)
    if rule is None:
        raise UnknownRuleError(rule_id)
    return (
        f"{rule.rule_id} {rule.title} ({rule.severity.value}): "
        f"{rule.statement}\nRationale: {rule.rationale}"
    )


def _r1(model: SosModel, out: list[Finding]) -> None:
    for chain in model.chains.values():
        if chain.failure_observation.value != "sos-boundary":
            out.append(
                Finding(
                    "R1",
                    Severity.VIOLATION,
                    chain.id,
                    f"chain {chain.id!r} marks its failure {chain.failure!r} as "
                    f"internally observed; failures are observable at the SoS "
                    f"boundary",
                    chain=chain.id,
                )
            )


def _r2(model: SosModel, out: list[Finding]) -> None:
    for chain in model.chains.values():
        if not model.is_constituent(chain.origin):
            kind = (
                "environment entity"
                if chain.origin in model.environment
                else "non-constituent"
            )
            out.append(
                Finding(
                    "R2",
                    Severity.VIOLATION,
                    chain.id,
                    f"chain {chain.id!r} originates its fault in {kind} "
                    f"{chain.origin!r}; a fault must be introduced by a "
                    f"constituent system",
                    chain=chain.id,
                )
            )
    for act in model.activations.values():
        if not model.is_constituent(act.origin_constituent):
            out.append(
                Finding(
                    "R2",
                    Severity.VIOLATION,
                    act.id,
                    f"activation {act.id!r} places its fault in "
                    f"{act.origin_constituent!r}, which is not a constituent "
                    f"system",
                    chain=act.threat,
                )
            )


def _r3(model: SosModel, out: list[Finding]) -> None:
    endpoints: set[str] = set()
    for conn in model.connections.values():
        endpoints |= {conn.provider, conn.consumer}
    seen: set[tuple[str, str | None]] = set()
    for det in model.detections.values():
        participants = []
        if model.is_constituent(det.detector):
            participants.append(det.detector)
        recovery = model.recoveries.get(det.recovery)
        if recovery is not None:
            participants.extend(
                cs for cs in recovery.graphs if model.is_constituent(cs)
            )
        for cs in participants:
            if cs in endpoints or (cs, det.threat) in seen:
                continue
            seen.add((cs, det.threat))
            out.append(
                Finding(
                    "R3",
                    Severity.VIOLATION,
                    cs,
                    f"constituent {cs!r} takes part in detection or recovery "
                    f"of chain {det.threat!r} but is not an endpoint of any "
                    f"connection",
                    chain=det.threat,
                )
            )


def _r4(model: SosModel, out: list[Finding]) -> None:
    for chain in model.chains.values():
        for role, ref in (
            ("fault", chain.fault),
            ("error", chain.error),
            ("failure", chain.failure),
        ):
            if ref not in model.threat_nodes:
                out.append(
                    Finding(
                        "R4",
                        Severity.VIOLATION,
                        chain.id,
                        f"chain {chain.id!r} references undefined threat node "
                        f"{ref!r} as its {role}",
                        chain=chain.id,
                    )
                )


def _r5(model: SosModel, out: list[Finding]) -> None:
    for det in model.detections.values():
        if det.recovery not in model.recoveries:
            out.append(
                Finding(
                    "R5",
                    Severity.VIOLATION,
                    det.id,
                    f"detection {det.id!r} names unknown recovery "
                    f"{det.recovery!r}; detection must prompt a declared "
                    f"recovery process",
                    chain=det.threat,
                )
            )
    by_chain: dict[str, set[str]] = {}
    for det in model.detections.values():
        by_chain.setdefault(det.threat, set()).add(det.detector)
    for chain in model.chains.values():
        covered = by_chain.get(chain.id, set())
        for detector in chain.detectors:
            if detector not in covered:
                out.append(
                    Finding(
                        "R5",
                        Severity.VIOLATION,
                        chain.id,
                        f"detector {detector!r} of chain {chain.id!r} has no "
                        f"detection specification",
                        chain=chain.id,
                    )
                )


def _recovery_chain_context(model: SosModel, recovery_id: str) -> str | None:
    chains = {
        det.threat
        for det in model.detections.values()
        if det.recovery == recovery_id
    }
    if len(chains) == 1:
        return next(iter(chains))
    return None


def _r6(model: SosModel, out: list[Finding]) -> None:
    for recovery in model.recoveries.values():
        ctx = _recovery_chain_context(model, recovery.id)
        for graph_id in recovery.graphs.values():
            graph = model.processes.get(graph_id)
            if graph is None:
                continue
            for node in graph.nodes.values():
                if node.channel is not None and node.channel not in model.connections:
                    out.append(
                        Finding(
                            "R6",
                            Severity.VIOLATION,
                            recovery.id,
                            f"recovery {recovery.id!r} graph {graph_id!r}: "
                            f"activity {node.id!r} uses undeclared connection "
                            f"{node.channel!r}",
                            chain=ctx,
                        )
                    )


def _r7(model: SosModel, out: list[Finding]) -> None:
    for act in model.activations.values():
        origin = model.constituents.get(act.origin_constituent)
        if origin is None:
            continue  # R2 reports this one
        nominal = model.processes.get(origin.nominal_process)
        if nominal is None:
            continue
        stray = sorted(act.region - set(nominal.nodes))
        if stray:
            out.append(
                Finding(
                    "R7",
                    Severity.WARNING,
                    act.id,
                    f"activation {act.id!r} region names activities outside "
                    f"the nominal graph of {origin.id!r}: {stray}",
                    chain=act.threat,
                )
            )


def _r8(model: SosModel, out: list[Finding]) -> None:
    used: set[str] = set()
    for recovery in model.recoveries.values():
        for graph_id in recovery.graphs.values():
            graph = model.processes.get(graph_id)
            if graph is None:
                continue
            used |= {
                node.channel
                for node in graph.nodes.values()
                if node.channel is not None
            }
    for conn in model.connections.values():
        if conn.kind.value == "recovery-only" and conn.id not in used:
            out.append(
                Finding(
                    "R8",
                    Severity.WARNING,
                    conn.id,
                    f"recovery-only connection {conn.id!r} is not used by any "
                    f"recovery graph",
                )
            )


_RULE_FUNCS = (_r1, _r2, _r3, _r4, _r5, _r6, _r7, _r8)


def check(model: SosModel) -> list[Finding]:
    """Evaluate the whole catalog; ordered by (rule number, subject, message)."""
    out: list[Finding] = []
    for fn in _RULE_FUNCS:
        fn(model, out)
    out.sort(key=Finding.sort_key)
    return out


def has_violations(findings) -> bool:
    return any(f.severity is Severity.VIOLATION for f in findings)


def blocking_violations(findings, chain_id: str) -> list[Finding]:
    """Violations that forbid simulating the given chain.

    Chain-scoped violations block only their own chain; unscoped ones
    block everything.
    """
    return [
        f
        for f in findings
        if f.severity is Severity.VIOLATION
        and (f.chain is None or f.chain == chain_id)
    ]


def format_report(findings) -> str:
    """Line-oriented text report, one finding per line."""
    return "".join(f"{f}\n" for f in findings)


def to_records(findings) -> list[dict]:
    """JSON-ready records, one per finding."""
    return [
        {
            "rule": f.rule_id,
            "severity": f.severity.value,
            "subject": f.subject,
            "chain": f.chain,
            "message": f.message,
        }
        for f in findings
    ]
