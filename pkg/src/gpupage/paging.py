"""Device-side paging state: page table, reference counters, frame ring.

The host address space is a flat array of fixed-size pages; device memory is
a ring of page-sized frames handed out in strict cursor order, which is what
makes eviction FIFO.  A page entry moves Unmapped -> Faulting -> Resident and
back to Unmapped on eviction.  Reference counts are per warp: a warp counts
once per page it currently needs, no matter how many of its lanes touch it.

Nothing in this module schedules events.  Waiting for a reference count to
drain is expressed through zero-ref callbacks that the runtime wires to the
engine.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction


class PagingError(Exception):
    """Violation of a paging-protocol precondition (a model bug, not data)."""


class PageState(Enum):
    UNMAPPED = 0
    FAULTING = 1
    RESIDENT = 2


@dataclass
class PageTableEntry:
    state: PageState = PageState.UNMAPPED
    frame: int | None = None
    ref_count: int = 0
    dirty: bool = False


class PageTable:
    """Per-page state for the whole host address space.

    An optional observer callable receives ("evict" | "install" | "ref" |
    "state", ...) tuples; tests attach shadow checkers through it.
    """

    def __init__(self, total_pages: int, page_size: int = 8192):
        if page_size < 512 or page_size & (page_size - 1):
            raise ValueError(f"page_size must be a power of two >= 512, got {page_size}")
        self.page_size = page_size
        self.entries = [PageTableEntry() for _ in range(total_pages)]
        self.resident_count = 0
        self.observer = None
        self._zero_ref_waiters: dict[int, list] = {}

    # -- lookups ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.entries)

    def entry(self, page: int) -> PageTableEntry:
        if not 0 <= page < len(self.entries):
            raise IndexError(f"page {page} out of range (total {len(self.entries)})")
        return self.entries[page]

    def translate(self, page: int) -> tuple[PageState, int | None]:
        """Pure read: (state, frame-or-None)."""
        e = self.entry(page)
        return e.state, e.frame

    # -- reference counting ----------------------------------------------

    def add_ref(self, page: int) -> int:
        e = self.entry(page)
        if e.state == PageState.UNMAPPED:
            raise PagingError(f"add_ref on unmapped page {page}")
        e.ref_count += 1
        self._notify("ref", page, e.ref_count)
        return e.ref_count

    def release_ref(self, page: int) -> int:
        e = self.entry(page)
        if e.ref_count == 0:
            raise PagingError(f"ref count underflow on page {page}")
        e.ref_count -= 1
        self._notify("ref", page, e.ref_count)
        if e.ref_count == 0:
            waiters = self._zero_ref_waiters.pop(page, None)
            if waiters:
                for fn in waiters:
                    fn()
        return e.ref_count

    def on_zero_ref(self, page: int, fn) -> None:
        """Run fn as soon as the page's ref count reaches zero (immediately
        if it already is zero)."""
        if self.entry(page).ref_count == 0:
            fn()
        else:
            self._zero_ref_waiters.setdefault(page, []).append(fn)

    # -- state transitions -------------------------------------------------

    def begin_fault(self, page: int) -> None:
        e = self.entry(page)
        if e.state != PageState.UNMAPPED:
            raise PagingError(f"begin_fault on page {page} in state {e.state.name}")
        e.state = PageState.FAULTING
        self._notify("state", page, PageState.UNMAPPED, PageState.FAULTING)

    def install_mapping(self, page: int, frame: int) -> None:
        e = self.entry(page)
        if e.state == PageState.RESIDENT:
            raise PagingError(f"install over resident page {page}")
        if e.state != PageState.FAULTING:
            raise PagingError(f"install on page {page} not in Faulting state")
        e.frame = frame
        self._notify("install", page, frame)

    def complete_fault(self, page: int) -> None:
        e = self.entry(page)
        if e.state != PageState.FAULTING or e.frame is None:
            raise PagingError(f"complete_fault on page {page} without installed frame")
        e.state = PageState.RESIDENT
        self.resident_count += 1
        self._notify("state", page, PageState.FAULTING, PageState.RESIDENT)

    def mark_dirty(self, page: int) -> None:
        e = self.entry(page)
        if e.state != PageState.RESIDENT:
            raise PagingError(f"write to page {page} in state {e.state.name}")
        e.dirty = True

    def evict(self, page: int) -> bool:
        """Resident -> Unmapped; returns whether the page was dirty."""
        e = self.entry(page)
        if e.state != PageState.RESIDENT:
            raise PagingError(f"evict of page {page} in state {e.state.name}")
        if e.ref_count > 0:
            raise PagingError(f"evict of page {page} with ref_count={e.ref_count}")
        was_dirty = e.dirty
        self._notify("evict", page, e.frame, was_dirty)
        e.state = PageState.UNMAPPED
        e.frame = None
        e.dirty = False
        self.resident_count -= 1
        self._notify("state", page, PageState.RESIDENT, PageState.UNMAPPED)
        return was_dirty

    def _notify(self, *event) -> None:
        if self.observer is not None:
            self.observer(event)


class FrameRing:
    """Circular frame allocator with a global head cursor.

    The k-th call to advance() returns frame k mod frame_count, always.  The
    caller is responsible for draining the previous owner's references and
    evicting it before reusing the frame.
    """

    def __init__(self, frame_count: int):
        if frame_count <= 0:
            raise ValueError("frame_count must be positive")
        self.frame_count = frame_count
        self.head_cursor = 0
        self.frame_owner: list[int | None] = [None] * frame_count

    def advance(self) -> tuple[int, int | None]:
        """Return (frame, current owner page or None) and move the cursor."""
        frame = self.head_cursor % self.frame_count
        self.head_cursor += 1
        return frame, self.frame_owner[frame]

    def assign(self, frame: int, page: int) -> None:
        self.frame_owner[frame] = page

    def clear(self, frame: int) -> None:
        self.frame_owner[frame] = None


def oversubscription_level(workload_bytes: int, gpu_bytes: int) -> Fraction:
    """Memory pressure: workload_bytes / gpu_bytes - 1, as an exact rational."""
    if gpu_bytes <= 0:
        raise ValueError("gpu_bytes must be positive")
    return Fraction(workload_bytes, gpu_bytes) - 1


def gpu_bytes_for_level(workload_bytes: int, level) -> int:
    """Invert the pressure formula: memory that puts the workload at `level`."""
    frac = Fraction(level) + 1
    if frac <= 0:
        raise ValueError("oversubscription level must be > -1")
    return int(Fraction(workload_bytes) / frac)
