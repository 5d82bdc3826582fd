"""Device controller: southbound configure requests fanned out to the masters.

One controller drives up to six masters over a single event engine. The
life of a request:

  RequestGenerated   at the network controller          (marker 1)
  SouthboundArrived  +d_sb_ns at the device controller
  OutputsStaged      +d_mm_ns (+drawn jitter) per targeted segment
  MasterEmit         next PDO boundary of each master   (marker 2)
  FrameAtDevice      +d_frame_head_ns + rank*d_hop_ns per device
  DeviceLatched      +d_latch_ns, only when a word changes (marker 3)
  RequestComplete    at the last target's latch time
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Engine, EventKind, TimedEvent
from .errors import (
    DuplicateRequestId,
    NotYetComplete,
    TooManySegments,
    UnknownRequest,
    UnknownTarget,
)
from .simulation import (
    DeviceState,
    MasterState,
    StagedWrite,
    boundary_at_or_after,
    next_pdo_boundary,
)
from .codec import SlaveMapping, apply_datagram
from .topology import MAX_SEGMENTS, OUTPUT_WORD_BYTES, Topology


@dataclass(frozen=True)
class Target:
    segment: int
    device: int
    word: int

    def __post_init__(self):
        if not 0 <= self.word <= 0xFFFF:
            raise ValueError(f"output word must fit 16 bits, got {self.word:#x}")


@dataclass(frozen=True)
class ConfigureRequest:
    request_id: int
    targets: tuple[Target, ...]

    def __post_init__(self):
        targets = tuple(self.targets)
        object.__setattr__(self, "targets", targets)
        if not targets:
            raise ValueError("request needs at least one target")
        pairs = [(t.segment, t.device) for t in targets]
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate (segment, device) in one request")

    @property
    def segments(self) -> tuple[int, ...]:
        return tuple(sorted({t.segment for t in self.targets}))


@dataclass
class SegmentTrace:
    staged_ns: int
    jitter_ns: int
    emit_ns: int | None = None


@dataclass
class RequestTrace:
    """Per-request timing record; the markers 1/2/3 of the trace format."""

    request_id: int
    t_generated_ns: int
    targets: tuple[Target, ...]
    segments: dict[int, SegmentTrace] = field(default_factory=dict)
    t_latched_ns: dict[tuple[int, int], int] = field(default_factory=dict)
    pending: set = field(default_factory=set)
    complete: bool = False
    config_time_ns: int | None = None

    @property
    def t_master_emit_ns(self) -> dict[int, int]:
        return {s: st.emit_ns for s, st in self.segments.items()}

    def check_ordering(self) -> None:
        for seg, st in self.segments.items():
            assert st.emit_ns is not None, f"segment {seg} never emitted"
            assert self.t_generated_ns <= st.emit_ns
        for (seg, _dev), t_latch in self.t_latched_ns.items():
            assert self.segments[seg].emit_ns <= t_latch


@dataclass(frozen=True)
class CompletionReport:
    request_id: int
    t_generated_ns: int
    t_master_emit_ns: dict[int, int]
    t_latched_ns: dict[tuple[int, int], int]
    config_time_ns: int


class DeviceController:
    """Accepts configure requests and drives the masters' cyclic emission."""

    def __init__(self, engine: Engine, topology: Topology):
        self.engine = engine
        self.topology = topology
        self.timing = topology.timing
        self.masters = [
            MasterState(
                segment=s,
                phase_ns=seg.phase_ns,
                cycle_ns=topology.timing.pdo_cycle_ns,
                device_count=seg.device_count,
            )
            for s, seg in enumerate(topology.segments)
        ]
        self.devices = {
            (s, d): DeviceState(s, d) for s, d in topology.all_targets()
        }
        self.traces: dict[int, RequestTrace] = {}
        self.completion_callbacks = []
        self._order = 0
        self._started = False

        engine.on(EventKind.REQUEST_GENERATED, self._on_request_generated)
        engine.on(EventKind.SOUTHBOUND_ARRIVED, self._on_southbound_arrived)
        engine.on(EventKind.OUTPUTS_STAGED, self._on_outputs_staged)
        engine.on(EventKind.MASTER_EMIT, self._on_master_emit)
        engine.on(EventKind.FRAME_AT_DEVICE, self._on_frame_at_device)
        engine.on(EventKind.DEVICE_LATCHED, self._on_device_latched)
        engine.on(EventKind.REQUEST_COMPLETE, self._on_request_complete)

    # -- submission ------------------------------------------------------

    def start(self) -> None:
        """Begin cyclic emission on every master (idle frames included)."""
        if self._started:
            return
        self._started = True
        for m in self.masters:
            first = boundary_at_or_after(self.engine.now, m.phase_ns, m.cycle_ns)
            self.engine.schedule(first, EventKind.MASTER_EMIT, {"segment": m.segment})

    def submit(self, request: ConfigureRequest, t_generated_ns: int) -> None:
        """Schedule a request's generation at the network controller side."""
        self.validate_request(request)
        if request.request_id in self.traces:
            raise DuplicateRequestId(f"request {request.request_id} already submitted")
        self.engine.schedule(
            t_generated_ns,
            EventKind.REQUEST_GENERATED,
            {"request": request, "t_generated_ns": t_generated_ns},
        )

    def validate_request(self, request: ConfigureRequest) -> None:
        if len(request.segments) > MAX_SEGMENTS:
            raise TooManySegments(
                f"request spans {len(request.segments)} segments, max {MAX_SEGMENTS}"
            )
        for t in request.targets:
            try:
                self.topology.validate_target(t.segment, t.device)
            except Exception as exc:
                raise UnknownTarget(
                    f"target segment {t.segment} device {t.device} not in topology"
                ) from exc

    # -- event handlers ---------------------------------------------------

    def _on_request_generated(self, ev: TimedEvent) -> None:
        self.engine.schedule(
            ev.time_ns + self.timing.d_sb_ns,
            EventKind.SOUTHBOUND_ARRIVED,
            ev.payload,
        )

    def _on_southbound_arrived(self, ev: TimedEvent) -> None:
        self.handle_configure(
            ev.payload["request"], ev.time_ns, ev.payload.get("t_generated_ns")
        )

    def handle_configure(
        self,
        request: ConfigureRequest,
        t_arrival_ns: int,
        t_generated_ns: int | None = None,
    ) -> RequestTrace:
        """Stage a request on its masters; nothing is staged on error."""
        self.validate_request(request)
        if request.request_id in self.traces:
            raise DuplicateRequestId(f"request {request.request_id} already handled")
        if not self._started:
            self.start()
        if t_generated_ns is None:
            t_generated_ns = t_arrival_ns - self.timing.d_sb_ns

        trace = RequestTrace(
            request_id=request.request_id,
            t_generated_ns=t_generated_ns,
            targets=request.targets,
            pending={(t.segment, t.device) for t in request.targets},
        )

        multi = self.timing.d_mm_ns if self.topology.segment_count > 1 else 0
        # dispatch order is fixed: lowest segment first
        for seg in request.segments:
            jitter = self.engine.rng.uniform_draw(0, self.timing.d_jitter_max_ns)
            stage_ns = t_arrival_ns + multi + jitter
            master = self.masters[seg]
            writes = tuple(
                (
                    self.topology.logical_offset(t.segment, t.device),
                    t.word.to_bytes(OUTPUT_WORD_BYTES, "little"),
                )
                for t in sorted(
                    (t for t in request.targets if t.segment == seg),
                    key=lambda t: t.device,
                )
            )
            pickup = boundary_at_or_after(stage_ns, master.phase_ns, master.cycle_ns)
            last = master.last_emission
            if last is not None and last.boundary_ns >= pickup:
                # this boundary's frame is already on the wire: ride the next
                pickup = next_pdo_boundary(
                    last.boundary_ns, master.phase_ns, master.cycle_ns
                )
            master.stage(
                StagedWrite(
                    stage_ns=stage_ns,
                    order=self._order,
                    request_id=request.request_id,
                    writes=writes,
                    pickup_ns=pickup,
                )
            )
            self._order += 1
            trace.segments[seg] = SegmentTrace(staged_ns=stage_ns, jitter_ns=jitter)
            self.engine.schedule(
                stage_ns,
                EventKind.OUTPUTS_STAGED,
                {"request_id": request.request_id, "segment": seg},
            )

        self.traces[request.request_id] = trace
        return trace

    def _on_outputs_staged(self, ev: TimedEvent) -> None:
        # trace marker only: the staging itself happened in handle_configure
        trace = self.traces[ev.payload["request_id"]]
        assert trace.segments[ev.payload["segment"]].staged_ns == ev.time_ns

    def _on_master_emit(self, ev: TimedEvent) -> None:
        seg = ev.payload["segment"]
        master = self.masters[seg]
        boundary = ev.time_ns
        record = master.build_frame(boundary)
        for rid in record.riders:
            seg_trace = self.traces[rid].segments[seg]
            assert seg_trace.emit_ns is None
            seg_trace.emit_ns = boundary
        head = self.timing.d_frame_head_ns
        hop = self.timing.d_hop_ns
        for p in range(master.device_count):
            self.engine.schedule(
                boundary + head + (p + 1) * hop,
                EventKind.FRAME_AT_DEVICE,
                {"segment": seg, "position": p, "record": record},
            )
        self.engine.schedule(
            next_pdo_boundary(boundary, master.phase_ns, master.cycle_ns),
            EventKind.MASTER_EMIT,
            {"segment": seg},
        )

    def _on_frame_at_device(self, ev: TimedEvent) -> None:
        seg = ev.payload["segment"]
        p = ev.payload["position"]
        record = ev.payload["record"]
        device = self.devices[(seg, p)]
        dgram = record.frame.datagrams[0]
        mapping = SlaveMapping(logical_start=p * OUTPUT_WORD_BYTES)
        new_word, _, wkc_inc = apply_datagram(device.word, dgram, mapping)
        record.wkc += wkc_inc
        t_latch = ev.time_ns + self.timing.d_latch_ns
        if new_word != device.word:
            self.engine.schedule(
                t_latch,
                EventKind.DEVICE_LATCHED,
                {"segment": seg, "position": p, "word": new_word},
            )
        for rid in record.riders:
            trace = self.traces[rid]
            if (seg, p) in trace.pending:
                trace.t_latched_ns[(seg, p)] = t_latch
                trace.pending.discard((seg, p))
                if not trace.pending:
                    self.engine.schedule(
                        t_latch, EventKind.REQUEST_COMPLETE, {"request_id": rid}
                    )

    def _on_device_latched(self, ev: TimedEvent) -> None:
        device = self.devices[(ev.payload["segment"], ev.payload["position"])]
        device.latch(ev.payload["word"], ev.time_ns)

    def _on_request_complete(self, ev: TimedEvent) -> None:
        trace = self.traces[ev.payload["request_id"]]
        trace.config_time_ns = max(trace.t_latched_ns.values()) - trace.t_generated_ns
        trace.complete = True
        trace.check_ordering()
        if self.completion_callbacks:
            report = self.completion_report(trace.request_id)
            for callback in self.completion_callbacks:
                callback(report)

    # -- reporting ---------------------------------------------------------

    def completion_report(self, request_id: int) -> CompletionReport:
        if request_id not in self.traces:
            raise UnknownRequest(f"no request {request_id}")
        trace = self.traces[request_id]
        if not trace.complete:
            raise NotYetComplete(f"request {request_id} still in flight")
        return CompletionReport(
            request_id=request_id,
            t_generated_ns=trace.t_generated_ns,
            t_master_emit_ns=dict(trace.t_master_emit_ns),
            t_latched_ns=dict(trace.t_latched_ns),
            config_time_ns=trace.config_time_ns,
        )

    def request_span_ns(self) -> int:
        """Upper bound on one request's life from generation to completion."""
        t = self.timing
        worst_chain = max(seg.device_count for seg in self.topology.segments)
        multi = t.d_mm_ns if self.topology.segment_count > 1 else 0
        return (
            t.d_sb_ns
            + multi
            + t.d_jitter_max_ns
            + t.pdo_cycle_ns
            + max(seg.phase_ns for seg in self.topology.segments)
            + t.d_frame_head_ns
            + worst_chain * t.d_hop_ns
            + t.d_latch_ns
        )

    def run_until_complete(self, request_id: int) -> CompletionReport:
        """Drive the engine until the given request finishes."""
        if request_id not in self.traces:
            # not yet arrived southbound: run ahead in cycle steps until it is
            deadline = self.engine.now + 4 * self.timing.pdo_cycle_ns + self.request_span_ns()
            while request_id not in self.traces and self.engine.now < deadline:
                self.engine.run_until(self.engine.now + self.timing.pdo_cycle_ns)
            if request_id not in self.traces:
                raise UnknownRequest(f"no request {request_id}")
        trace = self.traces[request_id]
        deadline = self.engine.now + self.request_span_ns() + 4 * self.timing.pdo_cycle_ns
        while not trace.complete and self.engine.now < deadline:
            self.engine.run_until(self.engine.now + self.timing.pdo_cycle_ns)
        if not trace.complete:
            raise NotYetComplete(f"request {request_id} missed its latency bound")
        return self.completion_report(request_id)
