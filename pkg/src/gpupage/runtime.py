"""GPU-driven access path.

A warp step is up to 32 lanes touching one buffer.  Lanes landing on the same
page elect a leader (lowest active lane); across warps, the first toucher of
a non-resident page becomes the single fault leader and everyone else
registers as a follower on the open episode, so one work request is posted
per (page, episode) no matter how many warps pile on.

The fault leader walks the whole protocol: claim the next frame in cursor
order, wait for the previous owner's references to drain, evict (writing the
page back first if dirty), post the fetch, participate in the batch/doorbell
protocol, and on completion install the mapping and wake every waiter.

Warps hold a reference on every page a step touches from first contact until
the step finishes, so a page can never be evicted between its fetch
completing and its requesters actually using it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from gpupage.engine import EV_REF_RELEASE, EV_WARP_STEP
from gpupage.nic import G2H, H2G, NicDevice
from gpupage.paging import FrameRing, PageState, PageTable

READ = "r"
WRITE = "w"

LANES = 32


@dataclass
class Warp:
    warp_id: int
    sm_id: int = 0
    lane_count: int = LANES
    active_mask: int = 0xFFFFFFFF


@dataclass
class ManagedBuffer:
    """Array-like buffer living in the paged host address space.

    Element i starts at byte base_byte + i * element_size; its page is the
    page containing that byte.  Elements may not straddle pages, which every
    power-of-two element size up to the page size satisfies.
    """

    buffer_id: int
    element_size: int
    length: int
    base_byte: int

    def nbytes(self) -> int:
        return self.length * self.element_size

    def element_byte(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(f"index {index} out of range for buffer {self.buffer_id}")
        return self.base_byte + index * self.element_size

    def element_page(self, index: int, page_size: int) -> int:
        return self.element_byte(index) // page_size

    def element_offset(self, index: int, page_size: int) -> int:
        return self.element_byte(index) % page_size


class FaultPhase(Enum):
    ELECTED = 0
    FRAME_PENDING = 1
    POSTED = 2
    POLLING = 3
    DONE = 4


@dataclass
class FaultContext:
    page: int
    leader_warp: int
    phase: FaultPhase = FaultPhase.ELECTED
    queue_index: int | None = None
    post_number: int | None = None
    frame: int | None = None
    followers: list = field(default_factory=list)
    waiters: list = field(default_factory=list)   # _WarpState objects to wake
    wrote: bool = False
    claimed_owner: int | None = None              # page we're waiting to drain

    def advance(self, phase: FaultPhase) -> None:
        if phase.value < self.phase.value:
            raise RuntimeError(f"fault phase moved backwards: {self.phase} -> {phase}")
        self.phase = phase


def check_step_bounds(buf: ManagedBuffer, base, stride, nlanes) -> None:
    if stride is None:
        if base and (min(base) < 0 or max(base) >= buf.length):
            raise IndexError(f"gather index out of range for buffer {buf.buffer_id}")
        return
    last = base + (nlanes - 1) * stride
    if base < 0 or last >= buf.length:
        raise IndexError(
            f"elements [{base}, {last}] out of range for buffer {buf.buffer_id} "
            f"(length {buf.length})")


def step_pages(buf: ManagedBuffer, base, stride, nlanes, page_size: int):
    """Distinct pages touched by one warp step, in ascending lane order.

    Affine steps (lane l -> element base + l*stride) resolve without looping
    when the lane stride is page-aligned or the step fits one page; gather
    steps (stride None, base a tuple of indices) dedupe lane by lane.
    """
    es = buf.element_size
    if stride is None:
        out, seen = [], set()
        for idx in base:
            p = (buf.base_byte + idx * es) // page_size
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out
    first = buf.base_byte + base * es
    if nlanes == 1:
        return (first // page_size,)
    step_b = stride * es
    last = first + (nlanes - 1) * step_b
    p0, pl = first // page_size, last // page_size
    if p0 == pl:
        return (p0,)
    if step_b % page_size == 0:
        return range(p0, pl + 1, step_b // page_size)
    out = [p0]
    for lane in range(1, nlanes):
        p = (first + lane * step_b) // page_size
        if p != out[-1]:
            out.append(p)
    return out


def elect_warp_leaders(warp: Warp, lane_pages: list) -> list[dict]:
    """Partition active lanes by page (match-any); leader is the lowest lane.

    lane_pages[i] must be None exactly for inactive lanes.
    """
    groups: dict[int, dict] = {}
    for lane, page in enumerate(lane_pages):
        if page is None:
            continue
        g = groups.get(page)
        if g is None:
            groups[page] = {"page": page, "leader_lane": lane, "member_lanes": [lane]}
        else:
            g["member_lanes"].append(lane)
    return sorted(groups.values(), key=lambda g: g["leader_lane"])


@dataclass
class AccessOutcome:
    latency_ns: int
    fault: bool
    bytes_transferred: int


class _WarpState:
    __slots__ = ("warp_id", "steps", "pos", "pending", "held", "start_ns",
                 "fault_seen", "bytes_caused")

    def __init__(self, warp_id: int):
        self.warp_id = warp_id
        self.steps: list = []
        self.pos = 0
        self.pending = 0
        self.held: list = []
        self.start_ns = 0
        self.fault_seen = False
        self.bytes_caused = 0


class GpuPagingRuntime:
    """Drives warp access programs against the page table and NIC."""

    def __init__(self, engine, page_table: PageTable, ring: FrameRing,
                 nic: NicDevice, counters, resident_access_cost_ns: int = 0,
                 protocol_overhead_ns: int = 1_000, trace=None):
        self.engine = engine
        self.pt = page_table
        self.ring = ring
        self.nic = nic
        self.counters = counters
        self.resident_access_cost_ns = resident_access_cost_ns
        self.protocol_overhead_ns = protocol_overhead_ns
        self.trace = trace
        self.buffers: dict[int, ManagedBuffer] = {}
        self.episodes: dict[int, FaultContext] = {}
        self._warps: dict[int, _WarpState] = {}
        self._queue_rr = 0
        self._phase_remaining = 0
        engine.set_stall_reporter(self._stall_diagnosis)
        engine.add_idle_hook(nic.flush_partial_batches)

    # -- program execution ------------------------------------------------

    def register_buffers(self, buffers) -> None:
        for b in buffers:
            self.buffers[b.buffer_id] = b

    def run_program(self, program) -> int:
        """Execute all phases (a phase is a global barrier) and return the
        completion time."""
        self.register_buffers(program.buffers)
        for phase in program.phases:
            self._phase_remaining = len(phase)
            for warp_id in sorted(phase):
                ws = self._warp(warp_id)
                ws.steps = phase[warp_id]
                ws.pos = 0
                self.engine.schedule(self.engine.now, EV_WARP_STEP,
                                     self._continuation(ws))
            self.engine.run_until_idle()
            if self._phase_remaining:
                raise RuntimeError("phase barrier reached with warps unfinished")
        self.counters.completion_ns = self.engine.now
        return self.engine.now

    def assign_queue(self) -> int:
        """Round-robin queue index off a global counter; one per episode."""
        q = self._queue_rr % len(self.nic.queues)
        self._queue_rr += 1
        return q

    # -- single-access API (scenario tests) --------------------------------

    def issue_access(self, warp_id: int, buffer: ManagedBuffer, index: int,
                     rw: str, nlanes: int = 1) -> _WarpState:
        self.buffers.setdefault(buffer.buffer_id, buffer)
        ws = self._warp(warp_id)
        ws.steps = [(buffer.buffer_id, rw, index, 1, nlanes)]
        ws.pos = 0
        ws.fault_seen = False
        ws.bytes_caused = 0
        ws.start_ns = self.engine.now
        self._phase_remaining += 1
        self.engine.schedule(self.engine.now, EV_WARP_STEP, self._continuation(ws))
        return ws

    def access(self, warp_id: int, buffer: ManagedBuffer, index: int,
               rw: str, nlanes: int = 1) -> AccessOutcome:
        """Issue one access and run the engine until it (and anything it
        triggered) completes."""
        ws = self.issue_access(warp_id, buffer, index, rw, nlanes)
        self.engine.run_until_idle()
        return AccessOutcome(self.engine.now - ws.start_ns, ws.fault_seen,
                             ws.bytes_caused)

    # -- warp stepping ------------------------------------------------------

    def _warp(self, warp_id: int) -> _WarpState:
        ws = self._warps.get(warp_id)
        if ws is None:
            ws = _WarpState(warp_id)
            self._warps[warp_id] = ws
        return ws

    def _continuation(self, ws: _WarpState):
        return lambda: self._continue_warp(ws)

    def _continue_warp(self, ws: _WarpState) -> None:
        if ws.held:
            for page in ws.held:
                self.pt.release_ref(page)
            ws.held = []
        self.engine.note_progress()
        cost = self.resident_access_cost_ns
        while ws.pos < len(ws.steps):
            step = ws.steps[ws.pos]
            ws.pos += 1
            waits = self._do_step(ws, step)
            if waits:
                return     # resumed by the last completion we registered on
            if cost:
                # Refs for this step stay held across the simulated use time.
                self.engine.schedule_in(cost, EV_WARP_STEP, self._continuation(ws))
                return
            for page in ws.held:
                self.pt.release_ref(page)
            ws.held = []
        self._phase_remaining -= 1

    def _do_step(self, ws: _WarpState, step) -> int:
        bid, rw, base, stride, nlanes = step
        buf = self.buffers[bid]
        check_step_bounds(buf, base, stride, nlanes)
        pages = step_pages(buf, base, stride, nlanes, self.pt.page_size)
        waits = 0
        for page in pages:
            waits += self._touch(ws, page, rw)
        ws.pending += waits
        return waits

    def _touch(self, ws: _WarpState, page: int, rw: str) -> int:
        """Touch one page on behalf of one warp; returns 1 if the warp must
        wait for a fetch, 0 on a resident hit."""
        if self.trace is not None:
            self.trace.access(self.engine.now, ws.warp_id, page, rw)
        state, _ = self.pt.translate(page)
        if state == PageState.RESIDENT:
            self.pt.add_ref(page)
            ws.held.append(page)
            if rw == WRITE:
                self.pt.mark_dirty(page)
            return 0
        if state == PageState.FAULTING:
            ctx = self.episodes[page]
            ctx.followers.append(ws.warp_id)
            ctx.waiters.append(ws)
            if rw == WRITE:
                ctx.wrote = True
            self.pt.add_ref(page)
            ws.held.append(page)
            ws.fault_seen = True
            self.counters.coalesced += 1
            # the histogram counts stalls a warp experiences, not leaderships
            self.counters.add_warp_fault(ws.warp_id)
            return 1
        # Unmapped: this warp's leader takes the page-entry lock and runs
        # the fault; any warp arriving later sees Faulting and coalesces.
        self.pt.begin_fault(page)
        self.pt.add_ref(page)
        ws.held.append(page)
        ws.fault_seen = True
        ws.bytes_caused += self.pt.page_size
        ctx = FaultContext(page, ws.warp_id)
        ctx.waiters.append(ws)
        if rw == WRITE:
            ctx.wrote = True
        self.episodes[page] = ctx
        self.counters.faults += 1
        self.counters.add_warp_fault(ws.warp_id)
        self._handle_fault(ctx)
        return 1

    # -- fault protocol -----------------------------------------------------

    def _handle_fault(self, ctx: FaultContext) -> None:
        ctx.advance(FaultPhase.FRAME_PENDING)
        frame, owner = self.ring.advance()
        ctx.frame = frame
        # Claim the frame now: the next cursor lap waits on *our* page.
        self.ring.assign(frame, ctx.page)
        if owner is None:
            self._post_fetch(ctx)
            return
        ctx.claimed_owner = owner
        self._await_owner(ctx, owner)

    def _await_owner(self, ctx: FaultContext, owner: int) -> None:
        def on_drained():
            self.engine.schedule(self.engine.now, EV_REF_RELEASE,
                                 lambda: self._owner_drained(ctx, owner))
        self.pt.on_zero_ref(owner, on_drained)

    def _owner_drained(self, ctx: FaultContext, owner: int) -> None:
        # A hit may have re-referenced the owner between the drain and this
        # event; if so, go back to waiting.
        if self.pt.entry(owner).ref_count > 0:
            self._await_owner(ctx, owner)
            return
        ctx.claimed_owner = None
        was_dirty = self.pt.evict(owner)
        if self.trace is not None:
            self.trace.evict(self.engine.now, owner)
        self.counters.evictions += 1
        if was_dirty:
            self.counters.dirty_evictions += 1
            self.counters.write_backs += 1
            queue = self._episode_queue(ctx)
            self.nic.submit(queue, owner, ctx.frame, self.pt.page_size, G2H,
                            lambda wr, done: self._post_fetch(ctx))
        else:
            self._post_fetch(ctx)

    def _episode_queue(self, ctx: FaultContext) -> int:
        if ctx.queue_index is None:
            ctx.queue_index = self.assign_queue()
        return ctx.queue_index

    def _post_fetch(self, ctx: FaultContext) -> None:
        ctx.advance(FaultPhase.POSTED)
        queue = self._episode_queue(ctx)
        self.nic.submit(queue, ctx.page, ctx.frame, self.pt.page_size, H2G,
                        lambda wr, done: self._fetch_complete(ctx, wr))

    def _fetch_complete(self, ctx: FaultContext, wr) -> None:
        ctx.post_number = wr.post_number
        ctx.advance(FaultPhase.POLLING)
        self.engine.schedule_in(self.protocol_overhead_ns, EV_WARP_STEP,
                                lambda: self._finish_fault(ctx))

    def _finish_fault(self, ctx: FaultContext) -> None:
        self.pt.install_mapping(ctx.page, ctx.frame)
        if self.trace is not None:
            self.trace.install(self.engine.now, ctx.page, ctx.frame)
        self.pt.complete_fault(ctx.page)
        if ctx.wrote:
            self.pt.mark_dirty(ctx.page)
        ctx.advance(FaultPhase.DONE)
        del self.episodes[ctx.page]
        for ws in ctx.waiters:
            ws.pending -= 1
            if ws.pending == 0:
                self.engine.schedule(self.engine.now, EV_WARP_STEP,
                                     self._continuation(ws))

    # -- diagnostics ----------------------------------------------------------

    def _stall_diagnosis(self) -> str | None:
        blocked = [ws for ws in self._warps.values() if ws.pending > 0]
        if not blocked and not self.episodes:
            return None
        lines = [f"{len(blocked)} warp(s) blocked, {len(self.episodes)} open fault episode(s)"]
        for ctx in self.episodes.values():
            line = (f"page {ctx.page}: phase={ctx.phase.name} frame={ctx.frame} "
                    f"leader=warp{ctx.leader_warp} waiters={len(ctx.waiters)}")
            if ctx.claimed_owner is not None:
                refs = self.pt.entry(ctx.claimed_owner).ref_count
                line += f" waiting on owner page {ctx.claimed_owner} (ref_count={refs})"
            lines.append(line)
        return "; ".join(lines)
