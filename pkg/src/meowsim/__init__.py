"""meowsim: deterministic simulator for a multi-master EtherCAT control plane
driving optical circuit switches.

The package models one controller host running up to six EtherCAT masters,
each owning a daisy chain of switch-port devices, and reproduces the
configuration-latency behavior of such a control plane: PDO-boundary
waiting, cascade traversal, device latching, and the resulting jitter.
"""

from .bench import (
    PdoComparison,
    RunResult,
    SweepResult,
    extrapolate_worst,
    pdo_reduction_analysis,
    run_scenario,
    sweep_devices,
)
from .codec import (
    EcatCmd,
    EcatDatagram,
    EcatFrame,
    SlaveMapping,
    apply_datagram,
    decode_frame,
    encode_frame,
)
from .controller import (
    CompletionReport,
    ConfigureRequest,
    DeviceController,
    RequestTrace,
    Target,
)
from .engine import Engine, EventKind, SplitMix64, TimedEvent
from .netctl import (
    BlockKind,
    FlowStats,
    NetworkController,
    OcsResourceModel,
    OpticalPathEntry,
    PathState,
    ProactiveRule,
    detect_large_flow_reactive,
    match_proactive_rules,
)
from .scenario import Scenario, load_preset, load_scenario, resolve_scenario
from .simulation import (
    DeviceState,
    MasterState,
    analytic_latency,
    boundary_at_or_after,
    next_pdo_boundary,
)
from .southbound import SouthboundServer, SouthboundSession
from .stats import RunStats, compute_stats
from .topology import SegmentSpec, TimingParams, Topology, build_topology

__version__ = "0.1.0"

__all__ = [
    "BlockKind",
    "CompletionReport",
    "ConfigureRequest",
    "DeviceController",
    "DeviceState",
    "EcatCmd",
    "EcatDatagram",
    "EcatFrame",
    "Engine",
    "EventKind",
    "FlowStats",
    "MasterState",
    "NetworkController",
    "OcsResourceModel",
    "OpticalPathEntry",
    "PathState",
    "PdoComparison",
    "ProactiveRule",
    "RequestTrace",
    "RunResult",
    "RunStats",
    "Scenario",
    "SegmentSpec",
    "SlaveMapping",
    "SouthboundServer",
    "SouthboundSession",
    "SplitMix64",
    "SweepResult",
    "Target",
    "TimedEvent",
    "TimingParams",
    "Topology",
    "analytic_latency",
    "apply_datagram",
    "boundary_at_or_after",
    "build_topology",
    "compute_stats",
    "decode_frame",
    "detect_large_flow_reactive",
    "encode_frame",
    "extrapolate_worst",
    "load_preset",
    "load_scenario",
    "match_proactive_rules",
    "next_pdo_boundary",
    "pdo_reduction_analysis",
    "resolve_scenario",
    "run_scenario",
    "sweep_devices",
]
