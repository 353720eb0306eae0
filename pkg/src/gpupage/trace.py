"""Structured run traces.

A TraceLog captures the raw timeline of a run (accesses, posts, completions,
evictions) so that tests can re-derive protocol facts, e.g. recount fault
episodes, independently of the runtime's own counters.  Logging is optional;
big runs leave it off.
"""

from __future__ import annotations


class TraceLog:
    """Append-only record lists; every record carries a global sequence
    number so same-timestamp records keep their dispatch order."""

    def __init__(self):
        self._seq = 0
        self.accesses: list = []      # (seq, ns, warp_id, page, rw)
        self.posts: list = []         # (seq, ns, post_number, page, direction)
        self.completions: list = []   # (seq, ns, post_number, page, direction)
        self.evictions: list = []     # (seq, ns, page)
        self.installs: list = []      # (seq, ns, page, frame)

    def _next(self) -> int:
        seq = self._seq
        self._seq += 1
        return seq

    def access(self, ns: int, warp_id: int, page: int, rw: str) -> None:
        self.accesses.append((self._next(), ns, warp_id, page, rw))

    def post(self, ns: int, post_number: int, page: int, direction: str) -> None:
        self.posts.append((self._next(), ns, post_number, page, direction))

    def complete(self, ns: int, post_number: int, page: int, direction: str) -> None:
        self.completions.append((self._next(), ns, post_number, page, direction))

    def evict(self, ns: int, page: int) -> None:
        self.evictions.append((self._next(), ns, page))

    def install(self, ns: int, page: int, frame: int) -> None:
        self.installs.append((self._next(), ns, page, frame))
