import pytest

from conftest import make_rig, one_buffer
from gpupage.engine import Counters, Engine
from gpupage.nic import (G2H, H2G, NicDevice, NicTimingModel, ProtocolError,
                         fit_gdr_setup_ns, gdr_baseline_throughput,
                         little_law_queue_depth)
from gpupage.runtime import READ

GIB = 2 ** 30


def make_nic(queues=4, depth=64, batch=1, nic_count=1):
    engine = Engine()
    counters = Counters()
    model = NicTimingModel(nic_count=nic_count)
    return engine, counters, NicDevice(engine, model, queues, depth, batch, counters)


# -- Little's-law sizing -------------------------------------------------------

def test_little_law_matches_measured_sizing():
    # 23us at the 12 GB/s PCIe-3 target
    assert little_law_queue_depth(23_000, 12 * GIB, 4096) == 72
    assert little_law_queue_depth(23_000, 12 * GIB, 8192) == 36


def test_little_law_unit_case():
    assert little_law_queue_depth(1_000_000_000, 1, 1) == 1


def test_little_law_rejects_nonpositive():
    with pytest.raises(ValueError):
        little_law_queue_depth(0, 1, 1)


# -- posting protocol ----------------------------------------------------------

def test_post_assigns_sequential_numbers():
    engine, counters, nic = make_nic(batch=64)
    pns = [nic.post_work_request(0, page, 0, 4096, H2G) for page in range(3)]
    assert pns == [0, 1, 2]
    assert [wr.post_number for wr, _ in nic.queues[0].pending] == [0, 1, 2]


def test_post_to_locked_queue_is_a_protocol_error():
    engine, counters, nic = make_nic(batch=2)
    nic.post_work_request(0, 0, 0, 4096, H2G)
    nic.post_work_request(0, 1, 1, 4096, H2G)   # fills the batch, rings, locks
    assert nic.queues[0].locked
    with pytest.raises(ProtocolError, match="locked"):
        nic.post_work_request(0, 2, 2, 4096, H2G)


def test_queue_overflow_is_a_protocol_error():
    engine, counters, nic = make_nic(depth=4, batch=4)
    nic.queues[0].batch_limit = 8   # batch never fills, so no doorbell fires
    for page in range(4):
        nic.post_work_request(0, page, page, 4096, H2G)
    with pytest.raises(ProtocolError, match="overflow"):
        nic.post_work_request(0, 4, 4, 4096, H2G)


def test_distinct_posters_get_consecutive_numbers():
    engine, counters, nic = make_nic(queues=2, batch=64)
    a = nic.post_work_request(0, 0, 0, 4096, H2G)
    b = nic.post_work_request(1, 1, 1, 4096, H2G)
    assert (a, b) == (0, 1)


# -- doorbells ------------------------------------------------------------------

def test_batch_of_one_rings_immediately():
    engine, counters, nic = make_nic(batch=1)
    nic.post_work_request(0, 0, 0, 4096, H2G)
    assert counters.doorbells == 1
    assert nic.queues[0].locked


def test_incomplete_batch_cannot_ring():
    engine, counters, nic = make_nic(batch=8)
    for page in range(7):
        nic.post_work_request(0, page, page, 4096, H2G)
    with pytest.raises(ProtocolError, match="batch"):
        nic.ring_doorbell(0)


def test_one_doorbell_per_batch():
    engine, counters, nic = make_nic(batch=8)
    for page in range(8):
        nic.post_work_request(0, page, page, 4096, H2G)
    assert counters.doorbells == 1
    assert len(nic.doorbell_records) == 1
    assert nic.doorbell_records[0].request_count == 8
    engine.run_until_idle()
    assert counters.doorbells == 1


def test_doorbell_on_empty_queue_is_an_error():
    engine, counters, nic = make_nic()
    with pytest.raises(ProtocolError, match="empty"):
        nic.ring_doorbell(0)


def test_flush_rings_partial_batches():
    engine, counters, nic = make_nic(batch=8)
    nic.post_work_request(0, 0, 0, 4096, H2G)
    nic.flush_partial_batches()
    assert counters.doorbells == 1


# -- service timing ---------------------------------------------------------------

def test_single_idle_request_timing():
    engine, counters, nic = make_nic()
    done = []
    nic.submit(0, 0, 0, 8192, H2G, lambda wr, t: done.append(t))
    engine.run_until_idle()
    # base latency plus the page crossing one 6.5 GB/s NIC
    assert done == [23_000 + 1_261]


def test_zero_length_request_costs_base_latency_only():
    engine, counters, nic = make_nic()
    done = []
    nic.submit(0, 0, 0, 0, H2G, lambda wr, t: done.append(t))
    engine.run_until_idle()
    assert done == [23_000]


def test_completion_never_beats_base_latency():
    engine, counters, nic = make_nic(queues=8)
    done = []
    for q in range(8):
        nic.submit(q, q, q, 4096, H2G, lambda wr, t: done.append(t))
    engine.run_until_idle()
    assert all(t >= 23_000 for t in done)


def test_sustained_72_requests_two_nics_reach_plateau():
    """72 concurrent 4KB requests over 2 NICs sit just under 12 GB/s."""
    rig = make_rig(total_pages=8192, frames=8192, page_size=4096, queues=72,
                   nic_count=2)
    buf = one_buffer(8192, 4096)
    phase = {}
    per_warp = 8192 // 72
    for w in range(72):
        steps = []
        for k in range(per_warp):
            page = w * per_warp + k
            steps.append((0, READ, page * 512, 1, 1))
        phase[w] = steps
    from gpupage.workloads import AccessProgram
    rig.rt.run_program(AccessProgram([buf], [phase]))
    thr = rig.counters.bytes_h2g / (rig.counters.completion_ns * 1e-9)
    assert 11e9 <= thr <= 12e9


def test_poll_completion_lifecycle():
    engine, counters, nic = make_nic()
    pn = nic.post_work_request(0, 0, 0, 4096, H2G)
    assert nic.poll_completion(0, pn) is None
    engine.run_until_idle()
    assert nic.poll_completion(0, pn) == 23_000 + 631


def test_poll_unknown_post_number_is_an_error():
    engine, counters, nic = make_nic()
    with pytest.raises(ProtocolError, match="unknown"):
        nic.poll_completion(0, 99)


def test_post_numbers_are_gap_free_across_queues():
    engine, counters, nic = make_nic(queues=8)
    for k in range(50):
        nic.submit(k % 8, k, k, 4096, H2G, None)
    engine.run_until_idle()
    seen = sorted(pn for cq in nic.cqs for pn in cq.completed)
    assert seen == list(range(50))


def test_bandwidth_cap_holds_over_every_window():
    engine, counters, nic = make_nic(queues=16, nic_count=2)
    for k in range(64):
        nic.submit(k % 16, k, k, 8192, H2G, None)
    engine.run_until_idle()
    cap = nic.model.total_cap()
    times = sorted(t for t, _ in nic._completion_log)
    for lo in times:
        for hi in times:
            if hi <= lo:
                continue
            moved = nic.completed_bytes_in_window(lo, hi)
            slack = 8192  # one in-flight request may straddle the window
            assert moved <= cap * (hi - lo) / 1e9 + slack


def test_direction_splits_byte_counters():
    engine, counters, nic = make_nic(queues=2)
    nic.submit(0, 0, 0, 4096, H2G, None)
    nic.submit(1, 1, 1, 4096, G2H, None)
    engine.run_until_idle()
    assert counters.bytes_h2g == 4096
    assert counters.bytes_g2h == 4096


# -- host-initiated baseline ---------------------------------------------------------

def test_gdr_throughput_monotone_in_request_size():
    model = NicTimingModel()
    assert gdr_baseline_throughput(1 << 20, 16, model) > gdr_baseline_throughput(4096, 16, model)


def test_gdr_fit_hits_small_request_anchor():
    model = NicTimingModel()
    thr = gdr_baseline_throughput(4096, 16, model)
    assert thr == pytest.approx(0.064e9, rel=1e-6)


def test_gdr_plateau_is_the_per_nic_bandwidth():
    model = NicTimingModel()
    thr = gdr_baseline_throughput(1 << 20, 512, model)
    assert thr == pytest.approx(6.5e9, rel=1e-3)


def test_gdr_zero_streams_is_zero():
    assert gdr_baseline_throughput(4096, 0, NicTimingModel()) == 0.0


def test_gdr_setup_fit_is_near_a_millisecond():
    # the measured small-request curve implies ~1ms per request
    setup = fit_gdr_setup_ns(NicTimingModel())
    assert 0.9e6 < setup < 1.1e6
