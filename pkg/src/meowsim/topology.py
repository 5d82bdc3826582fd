"""Topology and timing model for a multi-segment EtherCAT control plane.

A control plane is one controller host driving up to six EtherCAT masters.
Each master owns one segment: a daisy chain of switch-port devices hanging
off a 100 Mbps link. All timing is integer nanoseconds.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

from .errors import (
    EmptySegment,
    IndexOutOfRange,
    NegativeTiming,
    SegmentCountExceeded,
)

MAX_SEGMENTS = 6
OUTPUT_WORD_BYTES = 2  # one 16-bit digital-output word per device
MAX_PDO_CYCLE_NS = 100_000


@dataclass(frozen=True)
class TimingParams:
    """Calibrated delay model, all fields in nanoseconds (link rate aside).

    pdo_cycle_ns      cyclic process-data period of every master
    d_sb_ns           southbound delivery, network controller -> device controller
    d_mm_ns           per-request multi-master dispatch overhead (charged only
                      when the controller drives more than one segment)
    d_jitter_max_ns   upper bound of the uniform dispatch jitter draw
    d_frame_head_ns   frame serialization head: first bytes on the wire after
                      the PDO boundary
    d_hop_ns          round-trip cascade cost per device hop
    d_latch_ns        device-local latch delay from frame arrival to output pins
    link_mbps         segment link rate, informational
    """

    pdo_cycle_ns: int
    d_sb_ns: int = 70_000
    d_mm_ns: int = 0
    d_jitter_max_ns: int = 0
    d_frame_head_ns: int = 12_000
    d_hop_ns: int = 900
    d_latch_ns: int = 800
    link_mbps: int = 100

    def __post_init__(self):
        for name in (
            "pdo_cycle_ns", "d_sb_ns", "d_mm_ns", "d_jitter_max_ns",
            "d_frame_head_ns", "d_hop_ns", "d_latch_ns", "link_mbps",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise NegativeTiming(f"{name} must be >= 0, got {value}")
        if not 0 < self.pdo_cycle_ns <= MAX_PDO_CYCLE_NS:
            raise ValueError(
                f"pdo_cycle_ns must be in (0, {MAX_PDO_CYCLE_NS}], got {self.pdo_cycle_ns}"
            )


@dataclass(frozen=True)
class SegmentSpec:
    """One EtherCAT segment: a chain of device_count slaves behind one master."""

    device_count: int
    phase_ns: int = 0  # PDO boundary phase offset of this segment's master

    def __post_init__(self):
        if not isinstance(self.device_count, int) or isinstance(self.device_count, bool):
            raise TypeError(f"device_count must be an integer, got {self.device_count!r}")
        if self.device_count < 1:
            raise EmptySegment(f"segment needs at least one device, got {self.device_count}")
        if not isinstance(self.phase_ns, int) or isinstance(self.phase_ns, bool):
            raise TypeError(f"phase_ns must be an integer, got {self.phase_ns!r}")
        if self.phase_ns < 0:
            raise NegativeTiming(f"phase_ns must be >= 0, got {self.phase_ns}")


@dataclass(frozen=True)
class Topology:
    """Immutable control-plane shape: segments plus the shared timing model."""

    segments: tuple[SegmentSpec, ...]
    timing: TimingParams

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if len(segments) == 0:
            raise ValueError("topology needs at least one segment")
        if len(segments) > MAX_SEGMENTS:
            raise SegmentCountExceeded(
                f"at most {MAX_SEGMENTS} segments per controller, got {len(segments)}"
            )

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    @property
    def total_devices(self) -> int:
        return sum(seg.device_count for seg in self.segments)

    def device_count(self, segment: int) -> int:
        self.validate_segment(segment)
        return self.segments[segment].device_count

    def validate_segment(self, segment: int) -> None:
        if not 0 <= segment < len(self.segments):
            raise IndexOutOfRange(f"segment {segment} not in topology")

    def validate_target(self, segment: int, device: int) -> None:
        self.validate_segment(segment)
        if not 0 <= device < self.segments[segment].device_count:
            raise IndexOutOfRange(
                f"device {device} not in segment {segment} "
                f"(has {self.segments[segment].device_count})"
            )

    def logical_offset(self, segment: int, device: int) -> int:
        """Byte offset of a device's output word in its segment's logical image."""
        self.validate_target(segment, device)
        return device * OUTPUT_WORD_BYTES

    def image_size(self, segment: int) -> int:
        """Size in bytes of one segment's process-data output image."""
        self.validate_segment(segment)
        return self.segments[segment].device_count * OUTPUT_WORD_BYTES

    def device_rank(self, segment: int, device: int) -> int:
        """1-based chain position used by the latency model (1 = nearest)."""
        self.validate_target(segment, device)
        return device + 1

    def all_targets(self):
        """Yield every (segment, device) pair in chain order."""
        for s, seg in enumerate(self.segments):
            for d in range(seg.device_count):
                yield s, d

    def to_dict(self) -> dict:
        return {
            "segments": [asdict(seg) for seg in self.segments],
            "timing": asdict(self.timing),
        }


def build_topology(spec: dict) -> Topology:
    """Build a Topology from its plain-dict form (as found in scenario files).

    Unknown keys are rejected so config typos fail loudly.
    """
    if not isinstance(spec, dict):
        raise TypeError(f"topology spec must be a dict, got {type(spec).__name__}")
    unknown = set(spec) - {"segments", "timing"}
    if unknown:
        raise ValueError(f"unknown topology keys: {sorted(unknown)}")
    if "segments" not in spec or "timing" not in spec:
        raise ValueError("topology spec needs 'segments' and 'timing'")

    seg_fields = {"device_count", "phase_ns"}
    segments = []
    for i, raw in enumerate(spec["segments"]):
        if not isinstance(raw, dict):
            raise TypeError(f"segment {i} must be a dict")
        unknown = set(raw) - seg_fields
        if unknown:
            raise ValueError(f"segment {i}: unknown keys {sorted(unknown)}")
        segments.append(SegmentSpec(**raw))

    timing_fields = {f for f in TimingParams.__dataclass_fields__}
    raw_timing = spec["timing"]
    if not isinstance(raw_timing, dict):
        raise TypeError("timing must be a dict")
    unknown = set(raw_timing) - timing_fields
    if unknown:
        raise ValueError(f"unknown timing keys: {sorted(unknown)}")
    timing = TimingParams(**raw_timing)

    return Topology(segments=tuple(segments), timing=timing)
