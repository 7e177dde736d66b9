"""Fault modelling toolkit for systems of systems.

The package bundles a textual modelling language (.fmaf), a
dependability-taxonomy consistency checker, a deterministic
fault-injection simulator, viewpoint projections to DOT, and a set of
emergency-response case-study models.
"""

from fmaf.checker import (
    CATALOG,
    Finding,
    Rule,
    Severity,
    blocking_violations,
    check,
    explain,
    format_report,
    has_violations,
)
from fmaf.dsl import Diagnostic, ParseResult, SourceSpan, parse, parse_file, serialize
from fmaf.model import (
    ActivationSpec,
    Activity,
    ActivityGraph,
    ActivityKind,
    AtTime,
    Connection,
    ConnectionKind,
    ConstituentSystem,
    Count,
    DetectionSpec,
    DetectionStyle,
    Edge,
    ElapsedBetween,
    EnvironmentEntity,
    FailureObservation,
    FmafError,
    MetricSpec,
    OnEntry,
    Probabilistic,
    RecoverySpec,
    SelfReport,
    SosModel,
    ThirdPartyReport,
    ThreatChain,
    ThreatKind,
    ThreatNode,
    Timeout,
    build_model,
    lift_cs_failure,
    partition_fault,
)
from fmaf.casestudy import (
    BUNDLE_NAMES,
    ScenarioBundle,
    UnknownBundleError,
    load_bundle,
)
from fmaf.viewgen import (
    VIEW_KINDS,
    ViewCluster,
    ViewEdge,
    ViewGraph,
    ViewNode,
    project,
    to_dot,
)
from fmaf.simulator import (
    Outcome,
    SimConfig,
    SimEvent,
    SimTrace,
    compute_metrics,
    detection_race,
    enumerate_outcomes,
    format_trace,
    run,
    summarize,
    write_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BUNDLE_NAMES",
    "CATALOG",
    "Diagnostic",
    "Finding",
    "Outcome",
    "ParseResult",
    "Rule",
    "Severity",
    "SimConfig",
    "SimEvent",
    "SimTrace",
    "ScenarioBundle",
    "UnknownBundleError",
    "SourceSpan",
    "blocking_violations",
    "check",
    "compute_metrics",
    "detection_race",
    "enumerate_outcomes",
    "explain",
    "format_report",
    "format_trace",
    "has_violations",
    "load_bundle",
    "parse",
    "parse_file",
    "run",
    "serialize",
    "summarize",
    "write_trace",
    "VIEW_KINDS",
    "ViewCluster",
    "ViewEdge",
    "ViewGraph",
    "ViewNode",
    "project",
    "to_dot",
    "ActivationSpec",
    "Activity",
    "ActivityGraph",
    "ActivityKind",
    "AtTime",
    "Connection",
    "ConnectionKind",
    "ConstituentSystem",
    "Count",
    "DetectionSpec",
    "DetectionStyle",
    "Edge",
    "ElapsedBetween",
    "EnvironmentEntity",
    "FailureObservation",
    "FmafError",
    "MetricSpec",
    "OnEntry",
    "Probabilistic",
    "RecoverySpec",
    "SelfReport",
    "SosModel",
    "ThirdPartyReport",
    "ThreatChain",
    "ThreatKind",
    "ThreatNode",
    "Timeout",
    "build_model",
    "lift_cs_failure",
    "partition_fault",
    "__version__",
]
