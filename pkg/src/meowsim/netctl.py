"""Network controller: path table, large-flow detection, OCS allocation.

Mirrors the experiment's simple network controller: it watches flows,
promotes large ones to the optical network, allocates a cross-connect
word on a switch device, and asks the device controller to configure it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .controller import ConfigureRequest, DeviceController, Target
from .errors import NoCapacity, UnknownPath, WrongState
from .topology import Topology


class PathState(Enum):
    RESERVED = "Reserved"
    CONFIGURING = "Configuring"
    ACTIVE = "Active"
    RELEASED = "Released"


class BlockKind(Enum):
    WAVELENGTH_SWITCH = "WavelengthSwitch"
    SPACE_SWITCH = "SpaceSwitch"


@dataclass(frozen=True)
class FlowStats:
    flow_id: str
    src_tor: str
    dst_tor: str
    rate_bps: int
    service_tag: str | None = None

    def __post_init__(self):
        if self.rate_bps < 0:
            raise ValueError(f"rate_bps must be >= 0, got {self.rate_bps}")


@dataclass(frozen=True)
class ProactiveRule:
    """Predefined large-flow rule; None fields match anything."""

    rule_id: str
    priority: int
    src_tor: str | None = None
    dst_tor: str | None = None
    service_tag: str | None = None

    def matches(self, flow: FlowStats) -> bool:
        return (
            (self.src_tor is None or self.src_tor == flow.src_tor)
            and (self.dst_tor is None or self.dst_tor == flow.dst_tor)
            and (self.service_tag is None or self.service_tag == flow.service_tag)
        )


@dataclass
class OpticalPathEntry:
    path_id: int
    src_tor: str
    dst_tor: str
    hops: tuple  # ((segment, device, output word), ...)
    state: PathState = PathState.RESERVED
    config_time_ns: int | None = None
    request_id: int | None = None

    def __post_init__(self):
        if not self.hops:
            raise ValueError("path needs at least one hop")


def detect_large_flow_reactive(stats, threshold_bps: int):
    """Flows at or above the rate threshold, in input order (>= convention)."""
    if threshold_bps <= 0:
        raise ValueError(f"threshold_bps must be positive, got {threshold_bps}")
    return [f.flow_id for f in stats if f.rate_bps >= threshold_bps]


def match_proactive_rules(flow: FlowStats, rules):
    """Rule id of the highest-priority matching rule, or None.

    Priorities must be unique; ties are a configuration error.
    """
    rules = list(rules)
    priorities = [r.priority for r in rules]
    if len(set(priorities)) != len(priorities):
        raise ValueError("rule priorities must be unique")
    matching = [r for r in rules if r.matches(flow)]
    if not matching:
        return None
    return max(matching, key=lambda r: r.priority).rule_id


class OcsResourceModel:
    """Free cross-connect words per switch device; word 0 stays idle."""

    def __init__(self, topology: Topology, words_per_device: int = 16):
        if not 1 <= words_per_device <= 0xFFFF:
            raise ValueError("words_per_device must be in [1, 65535]")
        self.words_per_device = words_per_device
        self.free: dict[tuple[int, int], set[int]] = {}
        self.block_kind: dict[tuple[int, int], BlockKind] = {}
        for s, d in topology.all_targets():
            self.free[(s, d)] = set(range(1, words_per_device + 1))
            # alternate kinds along the chain: paired wavelength/space stages
            self.block_kind[(s, d)] = (
                BlockKind.WAVELENGTH_SWITCH if d % 2 == 0 else BlockKind.SPACE_SWITCH
            )

    @property
    def total_words(self) -> int:
        return self.words_per_device * len(self.free)

    def first_fit(self):
        """Lowest free (segment, device, word), or None."""
        for key in sorted(self.free):
            words = self.free[key]
            if words:
                return key[0], key[1], min(words)
        return None

    def take(self, segment: int, device: int, word: int) -> None:
        self.free[(segment, device)].remove(word)

    def give_back(self, segment: int, device: int, word: int) -> None:
        assert word not in self.free[(segment, device)], "double free"
        self.free[(segment, device)].add(word)

    def snapshot(self) -> dict:
        return {key: frozenset(words) for key, words in self.free.items()}


def allocate_path(table: dict, resources: OcsResourceModel, src_tor: str,
                  dst_tor: str, path_id: int) -> OpticalPathEntry:
    """First-fit allocation of one cross-connect word; entry starts Reserved."""
    if src_tor == dst_tor:
        raise ValueError(f"src and dst must differ, both {src_tor!r}")
    hop = resources.first_fit()
    if hop is None:
        raise NoCapacity("no free cross-connect word on any device")
    resources.take(*hop)
    entry = OpticalPathEntry(
        path_id=path_id, src_tor=src_tor, dst_tor=dst_tor, hops=(hop,)
    )
    table[path_id] = entry
    return entry


def activate_path(table: dict, path_id: int, controller: DeviceController,
                  request_id: int) -> ConfigureRequest:
    """Reserved -> Configuring; emits the configure request for the hops."""
    entry = table.get(path_id)
    if entry is None:
        raise UnknownPath(f"no path {path_id}")
    if entry.state is not PathState.RESERVED:
        raise WrongState(f"path {path_id} is {entry.state.value}, not Reserved")
    request = ConfigureRequest(
        request_id=request_id,
        targets=tuple(Target(s, d, w) for s, d, w in entry.hops),
    )
    controller.submit(request, controller.engine.now)
    entry.state = PathState.CONFIGURING
    entry.request_id = request_id
    return request


def release_path(table: dict, resources: OcsResourceModel, path_id: int) -> None:
    """Active -> Released; the hops' words return to the free sets."""
    entry = table.get(path_id)
    if entry is None:
        raise UnknownPath(f"no path {path_id}")
    if entry.state is not PathState.ACTIVE:
        raise WrongState(f"path {path_id} is {entry.state.value}, not Active")
    for s, d, w in entry.hops:
        resources.give_back(s, d, w)
    entry.state = PathState.RELEASED


class NetworkController:
    """Ties the path table and resource model to one device controller."""

    def __init__(self, resources: OcsResourceModel,
                 device_controller: DeviceController | None = None):
        self.resources = resources
        self.device_controller = device_controller
        self.table: dict[int, OpticalPathEntry] = {}
        self.rules: dict[str, ProactiveRule] = {}
        self._next_path_id = 1
        self._next_request_id = 1
        self._request_to_path: dict[int, int] = {}
        if device_controller is not None:
            device_controller.completion_callbacks.append(self._on_completion)

    # -- flow detection ----------------------------------------------------

    def add_rule(self, rule: ProactiveRule) -> None:
        if rule.rule_id in self.rules:
            raise ValueError(f"duplicate rule id {rule.rule_id!r}")
        if any(r.priority == rule.priority for r in self.rules.values()):
            raise ValueError(f"duplicate rule priority {rule.priority}")
        self.rules[rule.rule_id] = rule

    def detect_flows(self, stats, threshold_bps: int):
        """Classify flows: proactive rule match first, rate threshold second."""
        rules = list(self.rules.values())
        reactive = set(detect_large_flow_reactive(stats, threshold_bps))
        report = []
        for flow in stats:
            rule_id = match_proactive_rules(flow, rules)
            if rule_id is not None:
                report.append({"flow_id": flow.flow_id, "mode": "proactive",
                               "rule_id": rule_id})
            elif flow.flow_id in reactive:
                report.append({"flow_id": flow.flow_id, "mode": "reactive",
                               "rule_id": None})
        return report

    # -- path lifecycle ------------------------------------------------------

    def allocate(self, src_tor: str, dst_tor: str) -> OpticalPathEntry:
        path_id = self._next_path_id
        entry = allocate_path(self.table, self.resources, src_tor, dst_tor, path_id)
        self._next_path_id += 1
        return entry

    def activate(self, path_id: int) -> int:
        """Returns the configure request id; completion flips the path Active."""
        if self.device_controller is None:
            raise ValueError("no device controller attached")
        request_id = self._next_request_id
        request = activate_path(self.table, path_id, self.device_controller,
                                request_id)
        self._next_request_id += 1
        self._request_to_path[request.request_id] = path_id
        return request.request_id

    def activate_and_wait(self, path_id: int) -> OpticalPathEntry:
        request_id = self.activate(path_id)
        self.device_controller.run_until_complete(request_id)
        entry = self.table[path_id]
        assert entry.state is PathState.ACTIVE
        return entry

    def release(self, path_id: int) -> None:
        release_path(self.table, self.resources, path_id)

    def _on_completion(self, report) -> None:
        path_id = self._request_to_path.get(report.request_id)
        if path_id is None:
            return
        entry = self.table[path_id]
        assert entry.state is PathState.CONFIGURING
        entry.state = PathState.ACTIVE
        entry.config_time_ns = report.config_time_ns

    # -- introspection -------------------------------------------------------

    def dump_table(self):
        return [
            {
                "path_id": e.path_id,
                "src_tor": e.src_tor,
                "dst_tor": e.dst_tor,
                "hops": [list(h) for h in e.hops],
                "state": e.state.value,
                "config_time_ns": e.config_time_ns,
            }
            for _, e in sorted(self.table.items())
        ]

    def check_conservation(self) -> None:
        """Free words plus words held by non-Released entries == every word."""
        held: dict[tuple[int, int], set[int]] = {}
        for entry in self.table.values():
            if entry.state is PathState.RELEASED:
                continue
            for s, d, w in entry.hops:
                assert w not in held.setdefault((s, d), set()), \
                    f"word {w} on ({s},{d}) held twice"
                held[(s, d)].add(w)
        for key, free_words in self.resources.free.items():
            held_words = held.get(key, set())
            assert not (free_words & held_words), \
                f"{key}: words both free and held"
            total = set(range(1, self.resources.words_per_device + 1))
            assert free_words | held_words == total, \
                f"{key}: words leaked ({sorted(total - free_words - held_words)})"
