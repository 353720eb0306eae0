"""Host-driver (UVM-style) paging baseline.

Faults are 4KB, rounded out to a 64KB migration by speculative prefetch; the
driver collects faults for a batching window and services them in rounds
whose cost splits into an OS component (page-table work, interpolated over
measured anchor points) and a transfer component.  Eviction frees one 2MiB
virtual-address block at a time, chosen least-recently-faulted, dropping
every resident 4KB page inside it, including pages that were prefetched but
never read: that is the coarse-granularity behaviour the GPU-driven runtime
is compared against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from gpupage.engine import EV_DRIVER_SERVICE, EV_WARP_STEP
from gpupage.runtime import check_step_bounds, step_pages

UVM_PAGE = 4096
GPU_PAGE = 65536  # fault + prefetch complete one 64KB "GPU page"

# Measured (bytes, ns) anchors for a single migration round.
OS_COST_ANCHORS = ((65536, 89_050), (131072, 94_858), (262144, 109_296), (524288, 122_713))
TRANSFER_ANCHORS = ((65536, 11_007), (131072, 15_039), (262144, 25_023), (524288, 45_055))


@dataclass
class UvmConfig:
    fault_granularity: int = UVM_PAGE
    prefetch_bytes: int = GPU_PAGE - UVM_PAGE
    eviction_block: int = 2 * 1024 * 1024
    os_cost_curve: tuple = OS_COST_ANCHORS
    transfer_curve: tuple = TRANSFER_ANCHORS
    read_mostly: bool = False
    memadvise_setup_ns: int = 2_250_000_000
    batching_window_ns: int = 20_000
    resident_access_cost_ns: int = 0
    # one service round never migrates more than the largest batch the cost
    # curves were measured at; bigger demand just takes more rounds
    service_round_bytes: int = OS_COST_ANCHORS[-1][0]

    def __post_init__(self):
        if self.fault_granularity + self.prefetch_bytes != GPU_PAGE:
            raise ValueError("fault granularity plus prefetch must complete a 64KB GPU page")

    def transfer_tail(self) -> tuple[int, int]:
        """(intercept_ns, bytes_per_s) of the affine extension beyond the
        last transfer anchor; also the fit reported alongside results."""
        (x0, y0), (x1, y1) = self.transfer_curve[-2], self.transfer_curve[-1]
        bandwidth = round((x1 - x0) * 1e9 / (y1 - y0))
        intercept = y1 - round(x1 * 1e9) // bandwidth
        return intercept, bandwidth


def _interpolate(curve, x: int, extend_high: bool) -> int:
    """Piecewise-linear over integer (bytes, ns) anchors; clamps below the
    first anchor, and either clamps or extends linearly above the last."""
    if x <= curve[0][0]:
        return curve[0][1]
    for (x0, y0), (x1, y1) in zip(curve, curve[1:]):
        if x <= x1:
            return y0 + (x - x0) * (y1 - y0) // (x1 - x0)
    x1, y1 = curve[-1]
    if not extend_high:
        return y1
    x0, y0 = curve[-2]
    return y1 + (x - x1) * (y1 - y0) // (x1 - x0)


def uvm_fault_service_time(batch_bytes: int, cfg: UvmConfig) -> tuple[int, int]:
    """(os_ns, transfer_ns) for servicing one batch of `batch_bytes`."""
    if batch_bytes <= 0:
        raise ValueError("batch_bytes must be positive")
    os_ns = _interpolate(cfg.os_cost_curve, batch_bytes, extend_high=False)
    transfer_ns = _interpolate(cfg.transfer_curve, batch_bytes, extend_high=True)
    return os_ns, transfer_ns


def apply_memadvise(cfg: UvmConfig, read_mostly: bool) -> int:
    """Setup cost of the read-mostly hint; reported as setup time, never
    folded into kernel time."""
    return cfg.memadvise_setup_ns if read_mostly else 0


class _PageInfo:
    __slots__ = ("dirty", "accessed", "duplicated")

    def __init__(self):
        self.dirty = False
        self.accessed = False
        self.duplicated = False


class _Block:
    __slots__ = ("pages", "last_fault_ns")

    def __init__(self):
        self.pages: dict[int, _PageInfo] = {}
        self.last_fault_ns = 0


class _UvmWarp:
    __slots__ = ("warp_id", "steps", "pos", "pending")

    def __init__(self, warp_id: int):
        self.warp_id = warp_id
        self.steps: list = []
        self.pos = 0
        self.pending = 0


@dataclass
class _PendingFault:
    page: int
    arrival_ns: int
    wrote: bool = False
    waiters: list = field(default_factory=list)
    first_warp: int = 0


class UvmRuntime:
    """Executes the same access programs as the GPU-driven runtime, but with
    OS-mediated fault service, 64KB migrations, and 2MiB block eviction."""

    def __init__(self, engine, cfg: UvmConfig, gpu_bytes: int, counters,
                 batch_capacity: int = 1024):
        self.engine = engine
        self.cfg = cfg
        self.counters = counters
        self.gpu_bytes = gpu_bytes
        self.free_bytes = gpu_bytes
        self.batch_capacity = batch_capacity
        self.buffers: dict[int, object] = {}
        self.blocks: dict[int, _Block] = {}
        self.resident: dict[int, _Block] = {}         # uvm page -> its block
        self.pending: dict[int, _PendingFault] = {}
        self.inflight: dict[int, _PendingFault] = {}  # mid-migration this round
        self.fault_fifo: deque[int] = deque()
        self.driver_busy = False
        self.driver_armed = False
        self._warps: dict[int, _UvmWarp] = {}
        self._phase_remaining = 0
        engine.set_stall_reporter(self._stall_diagnosis)

    # -- program execution -------------------------------------------------

    def run_program(self, program) -> int:
        for b in program.buffers:
            self.buffers[b.buffer_id] = b
        for phase in program.phases:
            self._phase_remaining = len(phase)
            for warp_id in sorted(phase):
                w = self._warps.setdefault(warp_id, _UvmWarp(warp_id))
                w.steps = phase[warp_id]
                w.pos = 0
                self.engine.schedule(self.engine.now, EV_WARP_STEP,
                                     self._continuation(w))
            self.engine.run_until_idle()
            if self._phase_remaining:
                raise RuntimeError("phase barrier reached with warps unfinished")
        self.counters.completion_ns = self.engine.now
        return self.engine.now

    def _continuation(self, w: _UvmWarp):
        return lambda: self._continue_warp(w)

    def _continue_warp(self, w: _UvmWarp) -> None:
        self.engine.note_progress()
        while w.pos < len(w.steps):
            step = w.steps[w.pos]
            w.pos += 1
            waits = self._do_step(w, step)
            if waits:
                w.pending += waits
                return
        self._phase_remaining -= 1

    def _do_step(self, w: _UvmWarp, step) -> int:
        bid, rw, base, stride, nlanes = step
        buf = self.buffers[bid]
        check_step_bounds(buf, base, stride, nlanes)
        waits = 0
        for page in step_pages(buf, base, stride, nlanes, UVM_PAGE):
            waits += self._touch(w, page, rw)
        return waits

    def _touch(self, w: _UvmWarp, page: int, rw: str) -> int:
        blk = self.resident.get(page)
        if blk is not None:
            info = blk.pages[page]
            info.accessed = True
            if rw == "w":
                info.dirty = True
            return 0
        pf = self.pending.get(page) or self.inflight.get(page)
        if pf is None:
            pf = _PendingFault(page, self.engine.now, first_warp=w.warp_id)
            self.pending[page] = pf
            self.fault_fifo.append(page)
            self.counters.faults += 1
            self.counters.add_warp_fault(w.warp_id)
            self._arm_driver()
        else:
            self.counters.coalesced += 1
            self.counters.add_warp_fault(w.warp_id)
        if rw == "w":
            pf.wrote = True
        pf.waiters.append(w)
        return 1

    # -- fault service -------------------------------------------------------

    def _arm_driver(self) -> None:
        if self.driver_busy or self.driver_armed:
            return
        self.driver_armed = True
        self.engine.schedule_in(self.cfg.batching_window_ns, EV_DRIVER_SERVICE,
                                self._service)

    def _service(self) -> None:
        self.driver_armed = False
        if not self.fault_fifo:
            return
        self.driver_busy = True
        # Take faults FIFO, rounding each out to its 64KB region (only the
        # missing pages migrate), until the round would exceed the largest
        # batch the cost curves cover.
        pages_per_region = GPU_PAGE // UVM_PAGE
        round_cap = min(self.cfg.service_round_bytes, self.gpu_bytes)
        faults: list[_PendingFault] = []
        migrate: list[int] = []
        seen: set[int] = set()
        migrate_bytes = 0
        while self.fault_fifo and len(faults) < self.batch_capacity:
            page = self.fault_fifo[0]
            region_first = (page * UVM_PAGE // GPU_PAGE) * pages_per_region
            new_pages = [p for p in range(region_first, region_first + pages_per_region)
                         if p not in seen and p not in self.resident]
            if faults and migrate_bytes + len(new_pages) * UVM_PAGE > round_cap:
                break
            self.fault_fifo.popleft()
            pf = self.pending.pop(page)
            self.inflight[page] = pf
            faults.append(pf)
            seen.update(new_pages)
            migrate.extend(new_pages)
            migrate_bytes += len(new_pages) * UVM_PAGE

        writeback_bytes = 0
        while self.free_bytes < migrate_bytes:
            _, dirty_bytes = self._evict_block()
            writeback_bytes += dirty_bytes

        total = migrate_bytes + writeback_bytes
        os_ns, transfer_ns = uvm_fault_service_time(total, self.cfg) if total else (0, 0)
        done = self.engine.now + os_ns + transfer_ns
        self.engine.schedule(done, EV_DRIVER_SERVICE,
                             lambda: self._service_done(faults, migrate, migrate_bytes,
                                                        writeback_bytes))

    def _service_done(self, faults, migrate, migrate_bytes, writeback_bytes) -> None:
        now = self.engine.now
        read_mostly = self.cfg.read_mostly
        for page in migrate:
            block_id = page * UVM_PAGE // self.cfg.eviction_block
            blk = self.blocks.get(block_id)
            if blk is None:
                blk = _Block()
                self.blocks[block_id] = blk
            info = _PageInfo()
            info.duplicated = read_mostly
            blk.pages[page] = info
            blk.last_fault_ns = now
            self.resident[page] = blk
        self.free_bytes -= migrate_bytes
        self.counters.bytes_h2g += migrate_bytes
        self.counters.bytes_g2h += writeback_bytes
        self.counters.migrations += 1
        for pf in faults:
            del self.inflight[pf.page]
            blk = self.resident[pf.page]
            info = blk.pages[pf.page]
            info.accessed = True
            if pf.wrote:
                info.dirty = True
                info.duplicated = False
            for w in pf.waiters:
                w.pending -= 1
                if w.pending == 0:
                    self.engine.schedule(now, EV_WARP_STEP, self._continuation(w))
        self.driver_busy = False
        if self.fault_fifo:
            first_arrival = self.pending[self.fault_fifo[0]].arrival_ns
            at = max(now, first_arrival + self.cfg.batching_window_ns)
            self.driver_armed = True
            self.engine.schedule(at, EV_DRIVER_SERVICE, self._service)

    # -- eviction --------------------------------------------------------------

    def vablock_evict(self) -> list[int]:
        """Drop one least-recently-faulted 2MiB block; returns its pages."""
        evicted, _ = self._evict_block()
        return evicted

    def _evict_block(self) -> tuple[list[int], int]:
        victim_id = self._pick_victim()
        if victim_id is None:
            raise RuntimeError("eviction requested but no resident blocks exist")
        blk = self.blocks.pop(victim_id)
        evicted = sorted(blk.pages)
        dirty_bytes = 0
        for page in evicted:
            info = blk.pages[page]
            if info.dirty:
                dirty_bytes += UVM_PAGE
                self.counters.dirty_evictions += 1
            if not info.accessed:
                self.counters.wasted_prefetch_bytes += UVM_PAGE
            del self.resident[page]
        self.free_bytes += len(evicted) * UVM_PAGE
        self.counters.evictions += len(evicted)
        return evicted, dirty_bytes

    def _pick_victim(self) -> int | None:
        best = None
        best_dup = None
        for block_id, blk in self.blocks.items():
            if not blk.pages:
                continue
            all_dup = all(p.duplicated for p in blk.pages.values())
            key = (blk.last_fault_ns, block_id)
            if all_dup:
                if best_dup is None or key < best_dup[0]:
                    best_dup = (key, block_id)
            else:
                if best is None or key < best[0]:
                    best = (key, block_id)
        # Duplicated (read-mostly) blocks are kept while anything else can go.
        if best is not None:
            return best[1]
        if best_dup is not None:
            return best_dup[1]
        return None

    # -- diagnostics -------------------------------------------------------------

    def _stall_diagnosis(self) -> str | None:
        blocked = [w for w in self._warps.values() if w.pending > 0]
        if not blocked and not self.pending:
            return None
        return (f"{len(blocked)} warp(s) blocked on {len(self.pending)} pending "
                f"fault(s); driver_busy={self.driver_busy} armed={self.driver_armed}")
