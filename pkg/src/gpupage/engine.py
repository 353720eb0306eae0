"""Deterministic discrete-event engine.

Simulated time is an integer number of nanoseconds.  Events are dispatched
in (time, insertion sequence) order, so two engines fed the same schedule
produce the same trace on any platform: there is no floating point anywhere
in the event queue.

The engine knows nothing about paging or NICs.  Models register callbacks;
the only extra machinery here is a stall watchdog (a run that stops making
progress while actors are still blocked is an error, not a quiet hang) and
an optional event-log hasher used by replay checks.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field

# Event kinds, kept as small ints so they can be hashed into the event log.
EV_WARP_STEP = 0
EV_NIC_COMPLETE = 1
EV_DRIVER_SERVICE = 2
EV_REF_RELEASE = 3
EV_WRITEBACK_DONE = 4
EV_WATCHDOG = 5

EVENT_KIND_NAMES = {
    EV_WARP_STEP: "WarpStep",
    EV_NIC_COMPLETE: "NicComplete",
    EV_DRIVER_SERVICE: "DriverService",
    EV_REF_RELEASE: "RefRelease",
    EV_WRITEBACK_DONE: "WriteBackDone",
    EV_WATCHDOG: "Watchdog",
}

DEFAULT_WATCHDOG_NS = 10_000_000  # 10 simulated ms without progress


class SimulationError(Exception):
    """Base class for errors raised by the simulation models."""


class StallError(SimulationError):
    """The run can no longer make progress; carries a diagnosis string."""


@dataclass
class Counters:
    """Raw counters accumulated during one run.

    All fields are integers (bytes, counts, nanoseconds) so that the digest
    is bit-stable across platforms.
    """

    faults: int = 0
    coalesced: int = 0          # follower waits served by someone else's fetch
    bytes_h2g: int = 0
    bytes_g2h: int = 0
    evictions: int = 0
    dirty_evictions: int = 0
    doorbells: int = 0
    posted: int = 0
    write_backs: int = 0
    migrations: int = 0         # host-driver service rounds (UVM mode)
    wasted_prefetch_bytes: int = 0
    completion_ns: int = 0
    per_warp_faults: dict = field(default_factory=dict)

    def add_warp_fault(self, warp_id: int) -> None:
        self.per_warp_faults[warp_id] = self.per_warp_faults.get(warp_id, 0) + 1

    def to_dict(self) -> dict:
        d = {
            "faults": self.faults,
            "coalesced": self.coalesced,
            "bytes_h2g": self.bytes_h2g,
            "bytes_g2h": self.bytes_g2h,
            "evictions": self.evictions,
            "dirty_evictions": self.dirty_evictions,
            "doorbells": self.doorbells,
            "posted": self.posted,
            "write_backs": self.write_backs,
            "migrations": self.migrations,
            "wasted_prefetch_bytes": self.wasted_prefetch_bytes,
            "completion_ns": self.completion_ns,
            "per_warp_faults": {str(k): v for k, v in sorted(self.per_warp_faults.items())},
        }
        return d

    def digest(self) -> str:
        h = hashlib.sha256()
        for key, value in sorted(self.to_dict().items()):
            h.update(key.encode())
            h.update(repr(value if not isinstance(value, dict) else sorted(value.items())).encode())
        return h.hexdigest()


class Engine:
    """Single-run event scheduler.

    One engine instance drives one experiment; independent experiments run
    on independent engines and share no mutable state.
    """

    def __init__(self, watchdog_ns: int = DEFAULT_WATCHDOG_NS, hash_events: bool = False):
        self.now = 0
        self.watchdog_ns = watchdog_ns
        self._heap: list = []
        self._seq = 0
        self._idle_hooks: list = []
        self._stall_reporter = None
        self._last_progress_ns = 0
        self._hasher = hashlib.blake2b(digest_size=16) if hash_events else None

    # -- scheduling ----------------------------------------------------

    def schedule(self, at: int, kind: int, fn) -> None:
        if at < self.now:
            raise SimulationError(f"event scheduled in the past ({at} < {self.now})")
        heapq.heappush(self._heap, (at, self._seq, kind, fn))
        self._seq += 1

    def schedule_in(self, delay: int, kind: int, fn) -> None:
        self.schedule(self.now + delay, kind, fn)

    def add_idle_hook(self, fn) -> None:
        """fn() is called when the queue drains; it may schedule new events."""
        self._idle_hooks.append(fn)

    def set_stall_reporter(self, fn) -> None:
        """fn() -> diagnosis string or None; None means the quiet state is a
        normal end of run, a string means blocked actors remain."""
        self._stall_reporter = fn

    def note_progress(self) -> None:
        self._last_progress_ns = self.now

    # -- running -------------------------------------------------------

    def run_until_idle(self) -> int:
        while True:
            while self._heap:
                at, seq, kind, fn = heapq.heappop(self._heap)
                self.now = at
                if self._hasher is not None:
                    self._hasher.update(at.to_bytes(8, "little"))
                    self._hasher.update(seq.to_bytes(8, "little"))
                    self._hasher.update(kind.to_bytes(1, "little"))
                self._check_watchdog()
                fn()
            # Queue drained: give hooks (e.g. partial-batch flush) a chance
            # to inject more work before deciding the run is over.
            injected = False
            for hook in self._idle_hooks:
                before = len(self._heap)
                hook()
                injected = injected or len(self._heap) > before
            if not injected:
                break
        if self._stall_reporter is not None:
            diagnosis = self._stall_reporter()
            if diagnosis:
                raise StallError(diagnosis)
        return self.now

    def _check_watchdog(self) -> None:
        if self._stall_reporter is None:
            return
        if self.now - self._last_progress_ns <= self.watchdog_ns:
            return
        diagnosis = self._stall_reporter()
        if diagnosis:
            raise StallError(
                f"no progress for {self.now - self._last_progress_ns} ns "
                f"(watchdog horizon {self.watchdog_ns} ns): {diagnosis}"
            )
        # Quiet but nothing blocked: long gaps between events are legal.
        self._last_progress_ns = self.now

    def event_log_digest(self) -> str:
        if self._hasher is None:
            raise SimulationError("engine was created without hash_events=True")
        return self._hasher.hexdigest()
