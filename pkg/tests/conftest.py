"""Shared builders for simulator test rigs."""

import sys
from pathlib import Path
from types import SimpleNamespace

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from gpupage.engine import Counters, Engine
from gpupage.nic import NicDevice, NicTimingModel
from gpupage.paging import FrameRing, PageTable
from gpupage.runtime import READ, WRITE, GpuPagingRuntime, ManagedBuffer
from gpupage.trace import TraceLog
from gpupage.workloads import AccessProgram


def make_rig(total_pages=64, frames=8, page_size=8192, queues=4, depth=64,
             batch=1, nic_count=1, resident_cost_ns=0, protocol_ns=1_000,
             with_trace=False, watchdog_ns=10_000_000):
    engine = Engine(watchdog_ns)
    counters = Counters()
    trace = TraceLog() if with_trace else None
    pt = PageTable(total_pages, page_size)
    ring = FrameRing(frames)
    model = NicTimingModel(nic_count=nic_count)
    nic = NicDevice(engine, model, queues, depth, batch, counters, trace)
    rt = GpuPagingRuntime(engine, pt, ring, nic, counters,
                          resident_access_cost_ns=resident_cost_ns,
                          protocol_overhead_ns=protocol_ns, trace=trace)
    return SimpleNamespace(engine=engine, counters=counters, pt=pt, ring=ring,
                           model=model, nic=nic, rt=rt, trace=trace,
                           page_size=page_size)


def one_buffer(total_pages, page_size=8192, element_size=8):
    return ManagedBuffer(0, element_size, total_pages * page_size // element_size, 0)


def random_single_page_program(seed, max_warps=64, max_pages=256,
                               max_accesses=10_000, page_size=4096):
    """Random trace for coalescing / eviction-safety checks: every step
    touches one page, warps and pages drawn per seed."""
    rng = np.random.default_rng(seed)
    warps = int(rng.integers(1, max_warps + 1))
    pages = int(rng.integers(2, max_pages + 1))
    # mostly small traces with a heavy tail up to the cap
    hi = np.log10(max_accesses)
    shape = rng.uniform(1.7, 3.0) if rng.random() < 0.95 else rng.uniform(3.0, hi)
    n = min(int(10 ** shape), max_accesses)
    elements_per_page = page_size // 8
    buf = ManagedBuffer(0, 8, pages * elements_per_page, 0)
    warp_col = rng.integers(0, warps, size=n)
    page_col = rng.integers(0, pages, size=n)
    offset_col = rng.integers(0, elements_per_page, size=n)
    write_col = rng.random(size=n) < 0.1
    lanes_col = np.minimum(rng.integers(1, 33, size=n),
                           elements_per_page - offset_col)
    phase = {}
    for k in range(n):
        rw = WRITE if write_col[k] else READ
        base = int(page_col[k]) * elements_per_page + int(offset_col[k])
        phase.setdefault(int(warp_col[k]), []).append((0, rw, base, 1, int(lanes_col[k])))
    frames = int(rng.integers(2, max(3, pages // 2 + 2)))
    program = AccessProgram([buf], [phase], {"kind": "random", "seed": seed})
    return program, frames
