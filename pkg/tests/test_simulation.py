"""PDO boundary math, the latency oracle, master/device state."""

import pytest

from meowsim.codec import EcatCmd
from meowsim.simulation import (
    DeviceState,
    MasterState,
    StagedWrite,
    analytic_latency,
    boundary_at_or_after,
    next_pdo_boundary,
    structural_worst_latency,
)
from meowsim.topology import TimingParams


class TestNextPdoBoundary:
    def test_mid_cycle(self):
        assert next_pdo_boundary(5_000, 0, 32_000) == 32_000

    def test_exactly_on_boundary_is_strictly_after(self):
        assert next_pdo_boundary(32_000, 0, 32_000) == 64_000

    def test_with_phase(self):
        assert next_pdo_boundary(95_500, 16_000, 32_000) == 112_000

    def test_before_phase(self):
        assert next_pdo_boundary(10, 16_000, 32_000) == 16_000

    def test_zero_cycle_rejected(self):
        with pytest.raises(ValueError):
            next_pdo_boundary(0, 0, 0)


class TestBoundaryAtOrAfter:
    def test_on_boundary_stays(self):
        assert boundary_at_or_after(96_000, 0, 32_000) == 96_000

    def test_mid_cycle_rounds_up(self):
        assert boundary_at_or_after(96_001, 0, 32_000) == 128_000

    def test_agreement_off_boundary(self):
        for t in (1, 4_999, 31_999, 33_000):
            assert boundary_at_or_after(t, 0, 32_000) == next_pdo_boundary(t, 0, 32_000)


def exp1_timing():
    return TimingParams(pdo_cycle_ns=32_000)


def exp2_timing():
    return TimingParams(pdo_cycle_ns=80_000, d_mm_ns=15_400, d_jitter_max_ns=7_000)


class TestAnalyticLatency:
    def test_single_segment_best_case(self):
        assert analytic_latency(exp1_timing(), 1, 8, 0, 0) == 90_000

    def test_multi_master_best_case(self):
        assert analytic_latency(exp2_timing(), 4, 2, 0, 0) == 100_000

    def test_multi_master_worst_case(self):
        eps = 100
        assert analytic_latency(exp2_timing(), 4, 2, 80_000 - eps, 7_000) == 187_000 - eps

    def test_single_device(self):
        assert analytic_latency(exp1_timing(), 1, 1, 0, 0) == 83_700

    def test_d_mm_charged_only_multi(self):
        t = TimingParams(pdo_cycle_ns=32_000, d_mm_ns=15_400)
        assert analytic_latency(t, 1, 8, 0, 0) == 90_000
        assert analytic_latency(t, 2, 8, 0, 0) == 105_400

    def test_wait_domain(self):
        with pytest.raises(ValueError):
            analytic_latency(exp1_timing(), 1, 8, 32_000, 0)
        with pytest.raises(ValueError):
            analytic_latency(exp1_timing(), 1, 8, -1, 0)

    def test_jitter_domain(self):
        with pytest.raises(ValueError):
            analytic_latency(exp1_timing(), 1, 8, 0, 1)  # d_jitter_max is 0
        with pytest.raises(ValueError):
            analytic_latency(exp2_timing(), 4, 2, 0, 7_001)

    def test_structural_worst(self):
        assert structural_worst_latency(exp2_timing(), 4, 2, 100) == 186_900
        assert structural_worst_latency(exp1_timing(), 1, 8, 100) == 121_900


class TestMasterState:
    def master(self):
        return MasterState(segment=0, phase_ns=0, cycle_ns=32_000, device_count=2)

    def staged(self, stage_ns, order, rid, word, device=0, pickup=32_000):
        return StagedWrite(
            stage_ns=stage_ns,
            order=order,
            request_id=rid,
            writes=((device * 2, word.to_bytes(2, "little")),),
            pickup_ns=pickup,
        )

    def test_image_snapshot(self):
        m = self.master()
        m.stage(self.staged(10_000, 0, 1, 0xBEEF))
        record = m.build_frame(32_000)
        assert record.frame.datagrams[0].data == b"\xEF\xBE\x00\x00"
        assert record.frame.datagrams[0].cmd is EcatCmd.LWR
        assert record.riders == (1,)

    def test_last_writer_wins_coalescing(self):
        m = self.master()
        m.stage(self.staged(10_000, 0, 1, 0x1111))
        m.stage(self.staged(20_000, 1, 2, 0x2222))
        record = m.build_frame(32_000)
        assert record.frame.datagrams[0].data[:2] == b"\x22\x22"
        assert record.riders == (1, 2)

    def test_coalescing_order_by_stage_time_not_insertion(self):
        m = self.master()
        m.stage(self.staged(20_000, 0, 1, 0x1111))
        m.stage(self.staged(10_000, 1, 2, 0x2222))
        record = m.build_frame(32_000)
        # the later-staged write (request 1) lands on top
        assert record.frame.datagrams[0].data[:2] == b"\x11\x11"

    def test_future_writes_stay_pending(self):
        m = self.master()
        m.stage(self.staged(40_000, 0, 1, 0x1111, pickup=64_000))
        record = m.build_frame(32_000)
        assert record.riders == ()
        assert record.frame.datagrams[0].data == bytes(4)
        assert len(m.pending) == 1

    def test_idle_frames_still_emitted(self):
        m = self.master()
        first = m.build_frame(32_000)
        second = m.build_frame(64_000)
        assert first.riders == second.riders == ()
        assert m.emit_count == 2
        assert second.frame.datagrams[0].idx == 1

    def test_write_outside_image_rejected(self):
        m = self.master()
        with pytest.raises(ValueError):
            m.stage(self.staged(0, 0, 1, 0xFFFF, device=2))


class TestDeviceState:
    def test_rising_bits_logged(self):
        d = DeviceState(0, 0)
        assert d.latch(0b0101, 90_000) == [0, 2]
        assert d.activation_log == [(0, 90_000), (2, 90_000)]

    def test_unchanged_word_no_entry(self):
        d = DeviceState(0, 0)
        d.latch(0b1, 100)
        assert d.latch(0b1, 200) == []
        assert d.activation_log == [(0, 100)]

    def test_falling_bits_not_logged(self):
        d = DeviceState(0, 0)
        d.latch(0b11, 100)
        assert d.latch(0b10, 200) == []
        assert d.activation_log == [(0, 100), (1, 100)]

    def test_per_bit_times_strictly_increase(self):
        d = DeviceState(0, 0)
        d.latch(0b1, 100)
        d.latch(0b0, 200)
        d.latch(0b1, 300)
        times = [t for bit, t in d.activation_log if bit == 0]
        assert times == sorted(times) and len(set(times)) == len(times)
