"""Workload generators: kernels become per-warp access programs.

An access program is a list of phases (global barriers); each phase maps a
warp id to an ordered list of steps.  A step is a tuple

    (buffer_id, rw, base, stride, nlanes)     affine: lane l -> base + l*stride
    (buffer_id, rw, (i0, i1, ...), None, n)   gather: explicit element indices

Generators are pure functions of (inputs, seed), so the same arguments always
produce the same program on any platform.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from gpupage.runtime import LANES, READ, WRITE, ManagedBuffer

BUFFER_ALIGN = 2 * 1024 * 1024   # keeps 2MiB eviction blocks buffer-private


class EdgeListError(Exception):
    """Malformed edge-list input; message carries the line number."""


# ---------------------------------------------------------------------------
# access programs
# ---------------------------------------------------------------------------

@dataclass
class AccessProgram:
    buffers: list
    phases: list                       # [{warp_id: [step, ...]}, ...]
    meta: dict = field(default_factory=dict)

    @property
    def workload_bytes(self) -> int:
        return sum(b.nbytes() for b in self.buffers)

    @property
    def span_bytes(self) -> int:
        return max(b.base_byte + b.nbytes() for b in self.buffers)

    def warp_ids(self) -> list[int]:
        ids = set()
        for phase in self.phases:
            ids.update(phase)
        return sorted(ids)

    def steps(self):
        """Flat iterator of (phase, warp_id, buffer_id, rw, base, stride, nlanes)."""
        for k, phase in enumerate(self.phases):
            for warp_id in sorted(phase):
                for bid, rw, base, stride, nlanes in phase[warp_id]:
                    yield k, warp_id, bid, rw, base, stride, nlanes

    def touched_element_masks(self) -> dict[int, np.ndarray]:
        """Per buffer, a boolean mask of every element any step touches."""
        masks = {b.buffer_id: np.zeros(b.length, dtype=bool) for b in self.buffers}
        for _, _, bid, _, base, stride, nlanes in self.steps():
            m = masks[bid]
            if stride is None:
                m[list(base)] = True
            else:
                m[base:base + nlanes * stride:stride] = True
        return masks

    def unique_bytes(self) -> int:
        """Union size of all byte ranges the program needs (elements are the
        touch granularity)."""
        by_buffer = {b.buffer_id: b for b in self.buffers}
        return sum(int(mask.sum()) * by_buffer[bid].element_size
                   for bid, mask in self.touched_element_masks().items())


def layout_buffers(specs: list[tuple[int, int]]) -> list[ManagedBuffer]:
    """Place buffers [(element_size, length), ...] at 2MiB-aligned bases."""
    buffers = []
    base = 0
    for buffer_id, (element_size, length) in enumerate(specs):
        base = (base + BUFFER_ALIGN - 1) // BUFFER_ALIGN * BUFFER_ALIGN
        buffers.append(ManagedBuffer(buffer_id, element_size, length, base))
        base += element_size * length
    return buffers


def _striped_steps(buffer_id: int, rw: str, n: int, warps: int, owner_offset=0):
    """Yield (warp, step) pairs striping 32-element runs round-robin."""
    for s in range((n + LANES - 1) // LANES):
        base = s * LANES
        nlanes = min(LANES, n - base)
        yield (s + owner_offset) % warps, (buffer_id, rw, base, 1, nlanes)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def gen_vecadd(n: int, warps: int, element_size: int = 8) -> AccessProgram:
    """C[i] = A[i] + B[i]: two reads and one write per 32-element stripe.

    Each warp owns a contiguous run of stripes, the way concurrently
    resident thread blocks cover a contiguous index range, so `warps`
    separate pages are in flight at a time.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    a, b, c = layout_buffers([(element_size, n)] * 3)
    stripes = (n + LANES - 1) // LANES
    per_warp = -(-stripes // warps)
    phase: dict[int, list] = {}
    for w in range(warps):
        steps = []
        for k in range(per_warp):
            s = w * per_warp + k
            if s >= stripes:
                break
            base = s * LANES
            nlanes = min(LANES, n - base)
            steps.append((a.buffer_id, READ, base, 1, nlanes))
            steps.append((b.buffer_id, READ, base, 1, nlanes))
            steps.append((c.buffer_id, WRITE, base, 1, nlanes))
        if steps:
            phase[w] = steps
    return AccessProgram([a, b, c], [phase], {"kind": "vecadd", "n": n, "warps": warps})


def gen_stream(total_bytes: int, warps: int, element_size: int = 8) -> AccessProgram:
    """Pure sequential read stream; each warp owns one contiguous block so
    `warps` pages are in flight at once."""
    n = total_bytes // element_size
    if n < warps * LANES:
        raise ValueError("stream too small for the warp count")
    buf = layout_buffers([(element_size, n)])[0]
    per_warp = (n // warps) // LANES * LANES       # whole stripes per warp
    phase: dict[int, list] = {}
    for w in range(warps):
        lo = w * per_warp
        hi = n if w == warps - 1 else lo + per_warp
        steps = []
        base = lo
        while base < hi:
            nlanes = min(LANES, hi - base)
            steps.append((buf.buffer_id, READ, base, 1, nlanes))
            base += nlanes
        phase[w] = steps
    return AccessProgram([buf], [phase],
                         {"kind": "stream", "total_bytes": total_bytes, "warps": warps})


def gen_column_walk(rows: int, cols: int, warps: int, kernel: str = "mvt",
                    element_size: int = 8) -> AccessProgram:
    """Matrix kernels whose second pass walks columns of a row-major matrix,
    so consecutive accesses sit a full row apart.

    mvt/atax: a row-order pass producing a row-length vector, then the
    column-order pass.  bigc: column-order pass only.  Columns are dealt
    round-robin; with warps == cols the column pass is a single synchronized
    sweep, with fewer warps each warp revisits the matrix once per owned
    column.
    """
    if rows <= 0 or cols <= 0:
        raise ValueError("rows and cols must be positive")
    if kernel not in ("mvt", "atax", "bigc"):
        raise ValueError(f"unknown column-walk kernel {kernel!r}")
    if rows % LANES:
        raise ValueError("rows must be a multiple of 32")
    two_pass = kernel in ("mvt", "atax")
    if two_pass:
        # matrix, row-pass input x, row-pass output (column-pass input), output
        mat, xvec, rvec, out = layout_buffers(
            [(element_size, rows * cols), (element_size, cols),
             (element_size, rows), (element_size, cols)])
        buffers = [mat, xvec, rvec, out]
    else:
        mat, out = layout_buffers([(element_size, rows * cols), (element_size, cols)])
        xvec = rvec = None
        buffers = [mat, out]
    phases = []

    if two_pass:
        row_phase: dict[int, list] = {w: [] for w in range(warps)}
        for w, step in _striped_steps(xvec.buffer_id, READ, cols, warps):
            row_phase[w].append(step)
        steps_per_row = (cols + LANES - 1) // LANES
        for r in range(rows):
            w = r % warps
            for s in range(steps_per_row):
                base = r * cols + s * LANES
                nlanes = min(LANES, cols - s * LANES)
                row_phase[w].append((mat.buffer_id, READ, base, 1, nlanes))
        # each warp writes its own rows' outputs, 32 at a time (stride = warps)
        for w in range(warps):
            own = range(w, rows, warps)
            for k in range(0, len(own), LANES):
                group = own[k:k + LANES]
                row_phase[w].append((rvec.buffer_id, WRITE, group[0], warps, len(group)))
        phases.append({w: s for w, s in row_phase.items() if s})

    col_phase: dict[int, list] = {w: [] for w in range(warps)}
    blocks = rows // LANES
    for sweep in range((cols + warps - 1) // warps):
        for blk in range(blocks):
            base_row = blk * LANES
            for w in range(warps):
                col = sweep * warps + w
                if col >= cols:
                    continue
                if w == 0 and sweep == 0 and rvec is not None:
                    col_phase[0].append((rvec.buffer_id, READ, base_row, 1, LANES))
                col_phase[w].append((mat.buffer_id, READ, base_row * cols + col, cols, LANES))
        for w in range(warps):
            col = sweep * warps + w
            if col < cols:
                col_phase[w].append((out.buffer_id, WRITE, col, 1, 1))
    phases.append({w: s for w, s in col_phase.items() if s})

    meta = {"kind": "column_walk", "kernel": kernel, "rows": rows, "cols": cols,
            "warps": warps}
    return AccessProgram(buffers, phases, meta)


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

@dataclass
class CsrGraph:
    vertex_count: int
    edge_count: int
    offsets: np.ndarray          # int64, len vertex_count + 1
    edges: np.ndarray            # int64, len edge_count
    weights: np.ndarray | None = None

    def validate(self) -> None:
        if len(self.offsets) != self.vertex_count + 1:
            raise ValueError("offsets length must be vertex_count + 1")
        if np.any(np.diff(self.offsets) < 0):
            raise ValueError("offsets must be non-decreasing")
        if int(self.offsets[-1]) != self.edge_count:
            raise ValueError("offsets[-1] must equal edge_count")
        if self.edge_count and int(self.edges.max()) >= self.vertex_count:
            raise ValueError("edge destination out of range")

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.edges[int(self.offsets[v]):int(self.offsets[v + 1])]


def edges_to_csr(src: np.ndarray, dst: np.ndarray,
                 weights: np.ndarray | None = None,
                 vertex_count: int | None = None) -> CsrGraph:
    """Stable CSR build: per-vertex edge order follows input order; self
    loops and duplicates are kept."""
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if vertex_count is None:
        vertex_count = int(max(src.max(initial=-1), dst.max(initial=-1)) + 1) if len(src) else 0
    order = np.argsort(src, kind="stable")
    offsets = np.zeros(vertex_count + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    g = CsrGraph(vertex_count, len(src), offsets, dst[order],
                 weights[order] if weights is not None else None)
    g.validate()
    return g


def load_edge_list(path) -> CsrGraph:
    """Parse "src dst [weight]" lines; '#' starts a comment."""
    srcs, dsts, wts = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) not in (2, 3):
                raise EdgeListError(f"{path}:{lineno}: expected 'src dst [weight]', got {line!r}")
            try:
                s, d = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else None
            except ValueError as exc:
                raise EdgeListError(f"{path}:{lineno}: {exc}") from None
            if s < 0 or d < 0:
                raise EdgeListError(f"{path}:{lineno}: negative vertex id")
            if s >= 2 ** 63 or d >= 2 ** 63:
                raise EdgeListError(f"{path}:{lineno}: vertex id overflow")
            srcs.append(s)
            dsts.append(d)
            if w is not None:
                wts.append(w)
    if wts and len(wts) != len(srcs):
        raise EdgeListError(f"{path}: weights present on some lines but not all")
    if not srcs:
        return CsrGraph(0, 0, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    return edges_to_csr(np.array(srcs, dtype=np.int64), np.array(dsts, dtype=np.int64),
                        np.array(wts, dtype=np.float64) if wts else None)


BCSR_MAGIC = b"BCSR1"


def save_csr_binary(g: CsrGraph, path) -> None:
    """Magic "BCSR1", then little-endian u64 vertex_count, edge_count, flags
    (bit0 = weights), then offsets, edges as u64 and weights as f64."""
    flags = 1 if g.weights is not None else 0
    with open(path, "wb") as fh:
        fh.write(BCSR_MAGIC)
        fh.write(struct.pack("<QQQ", g.vertex_count, g.edge_count, flags))
        fh.write(g.offsets.astype("<u8").tobytes())
        fh.write(g.edges.astype("<u8").tobytes())
        if g.weights is not None:
            fh.write(g.weights.astype("<f8").tobytes())


def load_csr_binary(path) -> CsrGraph:
    with open(path, "rb") as fh:
        magic = fh.read(5)
        if magic != BCSR_MAGIC:
            raise EdgeListError(f"{path}: bad magic {magic!r}")
        v, e, flags = struct.unpack("<QQQ", fh.read(24))
        offsets = np.frombuffer(fh.read(8 * (v + 1)), dtype="<u8").astype(np.int64)
        edges = np.frombuffer(fh.read(8 * e), dtype="<u8").astype(np.int64)
        weights = None
        if flags & 1:
            weights = np.frombuffer(fh.read(8 * e), dtype="<f8").astype(np.float64)
    g = CsrGraph(int(v), int(e), offsets, edges, weights)
    g.validate()
    return g


@dataclass
class BalancedCsrGraph:
    """CSR with long neighbor lists split into fixed-size edge chunks.

    Vertices at or under chunk_size keep their single implicit chunk; only
    split vertices pay chunk-table entries (owner + slice start; the end is
    the next chunk boundary or the vertex's own offset end).
    """

    original: CsrGraph
    chunk_size: int
    chunk_owner: np.ndarray       # per conceptual chunk
    chunk_start: np.ndarray
    chunk_end: np.ndarray
    explicit_chunks: int

    @property
    def chunk_count(self) -> int:
        return len(self.chunk_owner)

    def chunk_table_bytes(self, entry_bytes: int = 16) -> int:
        return self.explicit_chunks * entry_bytes

    def overhead_ratio(self, edge_id_bytes: int = 8, entry_bytes: int = 16) -> float:
        if self.original.edge_count == 0:
            return 0.0
        return self.chunk_table_bytes(entry_bytes) / (self.original.edge_count * edge_id_bytes)


def csr_to_balanced(g: CsrGraph, chunk_size: int) -> BalancedCsrGraph:
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    owners, starts, ends = [], [], []
    explicit = 0
    for v in range(g.vertex_count):
        lo, hi = int(g.offsets[v]), int(g.offsets[v + 1])
        if lo == hi:
            continue
        if hi - lo > chunk_size:
            explicit += -(-(hi - lo) // chunk_size)
        for start in range(lo, hi, chunk_size):
            owners.append(v)
            starts.append(start)
            ends.append(min(start + chunk_size, hi))
    return BalancedCsrGraph(g, chunk_size,
                            np.array(owners, dtype=np.int64),
                            np.array(starts, dtype=np.int64),
                            np.array(ends, dtype=np.int64), explicit)


# ---------------------------------------------------------------------------
# traversal programs
# ---------------------------------------------------------------------------

BUF_OFFSETS, BUF_EDGES, BUF_WEIGHTS, BUF_STATE, BUF_CHUNKS = range(5)


def _edge_slices(g, v: int, balanced: BalancedCsrGraph | None):
    """Chunks of vertex v as (start, end, reads_chunk_table) triples."""
    if balanced is None:
        lo, hi = int(g.offsets[v]), int(g.offsets[v + 1])
        if lo < hi:
            yield lo, hi, False
        return
    lo, hi = int(g.offsets[v]), int(g.offsets[v + 1])
    split = hi - lo > balanced.chunk_size
    for start in range(lo, hi, balanced.chunk_size):
        yield start, min(start + balanced.chunk_size, hi), split


class _TraversalBuilder:
    """Turns one frontier iteration into per-warp access steps.

    CSR uses the naive kernel's static ownership (vertex v belongs to warp
    (v // vertices_per_warp) mod warps), so one heavy neighbor list lands
    entirely on one warp.  Balanced CSR splits the iteration's chunk list
    contiguously across the warps instead, which is what spreads a hub's
    edges, and faults, over every worker.
    """

    def __init__(self, g: CsrGraph, warps: int, vertices_per_warp: int,
                 balanced: BalancedCsrGraph | None, weighted: bool):
        self.g = g
        self.warps = warps
        self.balanced = balanced
        self.weighted = weighted
        self.vertices_per_warp = vertices_per_warp
        if balanced is not None:
            self._chunk_index = {}
            for idx, (v, lo) in enumerate(zip(balanced.chunk_owner,
                                              balanced.chunk_start)):
                self._chunk_index[(int(v), int(lo))] = idx

    def emit_iteration(self, phase: dict, frontier, improvements: dict) -> None:
        """improvements[v] holds the neighbors vertex v actually updates."""
        jobs = []
        for v in frontier:
            for lo, hi, via_table in _edge_slices(self.g, v, self.balanced):
                jobs.append((v, lo, hi, via_table))
        for idx, (v, lo, hi, via_table) in enumerate(jobs):
            if self.balanced is None:
                w = (v // self.vertices_per_warp) % self.warps
            else:
                w = idx * self.warps // len(jobs)
            self._emit_job(phase.setdefault(w, []), v, lo, hi, via_table,
                           improvements.get(v, ()))

    def _emit_job(self, steps: list, v: int, lo: int, hi: int,
                  via_table: bool, improved) -> None:
        if via_table:
            steps.append((BUF_CHUNKS, READ, self._chunk_index[(v, lo)], 1, 1))
        else:
            steps.append((BUF_OFFSETS, READ, v, 1, 2))
        for base in range(lo, hi, LANES):
            n = min(LANES, hi - base)
            steps.append((BUF_EDGES, READ, base, 1, n))
            if self.weighted:
                steps.append((BUF_WEIGHTS, READ, base, 1, n))
            nbrs = tuple(int(u) for u in self.g.edges[base:base + n])
            steps.append((BUF_STATE, READ, nbrs, None, len(nbrs)))
            updated = tuple(u for u in nbrs if u in improved)
            if updated:
                steps.append((BUF_STATE, WRITE, updated, None, len(updated)))


def gen_graph_traversal(g_or_balanced, algo: str, sources=None, warps: int = 8,
                        vertices_per_warp: int = 32) -> tuple[AccessProgram, dict]:
    """Frontier-synchronous BFS / CC / SSSP over CSR or Balanced CSR.

    Returns (program, results); results maps each source (or "cc") to the
    per-vertex output array (BFS levels, SSSP distances, CC labels).  Each
    frontier iteration is one program phase, so warps rejoin a barrier
    between levels.
    """
    if isinstance(g_or_balanced, BalancedCsrGraph):
        balanced, g = g_or_balanced, g_or_balanced.original
    else:
        balanced, g = None, g_or_balanced
    if algo not in ("bfs", "cc", "sssp"):
        raise ValueError(f"unknown traversal algo {algo!r}")
    weighted = algo == "sssp"
    if weighted and g.weights is None:
        raise ValueError("sssp needs edge weights")

    builder = _TraversalBuilder(g, warps, vertices_per_warp, balanced, weighted)
    buffers = _traversal_buffers(g, balanced, weighted)
    phases: list[dict] = []
    results: dict = {}

    if algo == "cc":
        labels = list(range(g.vertex_count))
        frontier = [v for v in range(g.vertex_count) if g.degree(v)]
        while frontier:
            phase: dict[int, list] = {}
            changed: dict[int, int] = {}
            improvements: dict[int, dict] = {}
            for v in frontier:
                improved = {}
                for u in g.neighbors(v):
                    u = int(u)
                    if labels[v] < labels[u] and labels[v] < improved.get(u, labels[u]):
                        improved[u] = labels[v]
                improvements[v] = improved
                for u, lab in improved.items():
                    if lab < changed.get(u, labels[u]):
                        changed[u] = lab
            builder.emit_iteration(phase, frontier, improvements)
            for u, lab in changed.items():
                labels[u] = lab
            frontier = sorted(changed)
            if phase:
                phases.append(phase)
        results["cc"] = labels
        return _finish_traversal(buffers, phases, g, balanced, algo, warps), results

    frontier_sizes: dict[str, list] = {}
    for source in (sources if sources is not None else [0]):
        if not 0 <= source < g.vertex_count:
            raise ValueError(f"source {source} out of range")
        dist = [None] * g.vertex_count
        dist[source] = 0
        frontier = [source]
        sizes = []
        while frontier:
            phase: dict[int, list] = {}
            updates: dict[int, object] = {}
            improvements: dict[int, dict] = {}
            for v in frontier:
                improved = {}
                for k, u in enumerate(g.neighbors(v)):
                    u = int(u)
                    if algo == "bfs":
                        cand = dist[v] + 1
                    else:
                        cand = dist[v] + float(g.weights[int(g.offsets[v]) + k])
                    best = dist[u]
                    if u in updates and (best is None or updates[u] < best):
                        best = updates[u]
                    if u in improved and (best is None or improved[u] < best):
                        best = improved[u]
                    if best is None or cand < best:
                        improved[u] = cand
                improvements[v] = improved
                for u, cand in improved.items():
                    best = updates.get(u, dist[u])
                    if best is None or cand < best:
                        updates[u] = cand
            builder.emit_iteration(phase, frontier, improvements)
            for u, cand in updates.items():
                dist[u] = cand
            frontier = sorted(updates)
            if frontier:
                sizes.append(len(frontier))
            if phase:
                phases.append(phase)
        results[source] = dist
        frontier_sizes[str(source)] = sizes
    program = _finish_traversal(buffers, phases, g, balanced, algo, warps)
    program.meta["frontier_sizes"] = frontier_sizes
    return program, results


def _traversal_buffers(g: CsrGraph, balanced, weighted: bool) -> list:
    specs = [(8, g.vertex_count + 1), (8, max(g.edge_count, 1))]
    specs.append((8, max(g.edge_count, 1) if weighted else 1))
    specs.append((8, max(g.vertex_count, 1)))
    specs.append((16, max(balanced.chunk_count, 1) if balanced is not None else 1))
    return layout_buffers(specs)


def _finish_traversal(buffers, phases, g, balanced, algo, warps) -> AccessProgram:
    meta = {"kind": "traversal", "algo": algo, "warps": warps,
            "vertices": g.vertex_count, "edges": g.edge_count,
            "representation": "balanced" if balanced is not None else "csr"}
    if balanced is not None:
        meta["chunk_size"] = balanced.chunk_size
        meta["chunk_table_bytes"] = balanced.chunk_table_bytes()
    return AccessProgram(buffers, phases, meta)


# ---------------------------------------------------------------------------
# query scans
# ---------------------------------------------------------------------------

@dataclass
class QueryWorkload:
    row_count: int
    row_bytes: int
    selectivity: float
    seed: int
    matching_rows: tuple = ()

    def __post_init__(self):
        if not 0 < self.selectivity <= 1:
            raise ValueError("selectivity must be in (0, 1]")
        if not self.matching_rows:
            k = round(self.selectivity * self.row_count)
            rng = np.random.default_rng(self.seed)
            rows = rng.choice(self.row_count, size=k, replace=False)
            self.matching_rows = tuple(sorted(int(r) for r in rows))


def gen_query_scan(q: QueryWorkload, columns: int = 1, warps: int = 8,
                   predicate_bytes: int = 8) -> AccessProgram:
    """Full scan of the predicate column; payload columns touched only at
    matching rows, immediately after the stripe that matched them."""
    specs = [(predicate_bytes, q.row_count)]
    specs += [(q.row_bytes, q.row_count)] * columns
    buffers = layout_buffers(specs)
    pred, payloads = buffers[0], buffers[1:]
    matches = set(q.matching_rows)
    phase: dict[int, list] = {}
    for s in range((q.row_count + LANES - 1) // LANES):
        base = s * LANES
        nlanes = min(LANES, q.row_count - base)
        w = s % warps
        steps = phase.setdefault(w, [])
        steps.append((pred.buffer_id, READ, base, 1, nlanes))
        for r in range(base, base + nlanes):
            if r in matches:
                for col in payloads:
                    steps.append((col.buffer_id, READ, r, 1, 1))
    meta = {"kind": "query", "rows": q.row_count, "row_bytes": q.row_bytes,
            "selectivity": q.selectivity, "columns": columns, "warps": warps,
            "matches": len(q.matching_rows)}
    return AccessProgram(buffers, [phase], meta)


# ---------------------------------------------------------------------------
# synthetic graphs
# ---------------------------------------------------------------------------

def gen_random_graph(vertex_count: int, edge_count: int, seed: int,
                     weighted: bool = False, symmetric: bool = False) -> CsrGraph:
    """Uniform random directed graph; symmetric=True mirrors every edge
    (traversals follow out-edges, so CC wants a symmetric edge set)."""
    rng = np.random.default_rng(seed)
    src = rng.integers(0, vertex_count, size=edge_count, dtype=np.int64)
    dst = rng.integers(0, vertex_count, size=edge_count, dtype=np.int64)
    weights = None
    if weighted:
        # integer-valued weights keep float sums order-independent
        weights = rng.integers(1, 11, size=edge_count).astype(np.float64)
    if symmetric:
        src, dst = np.concatenate([src, dst]), np.concatenate([dst, src])
        if weights is not None:
            weights = np.concatenate([weights, weights])
    return edges_to_csr(src, dst, weights, vertex_count)


def gen_star_heavy_graph(hub_degree: int, seed: int = 0,
                         weighted: bool = False) -> CsrGraph:
    """One hub with `hub_degree` leaves plus a leaf chain, so one vertex owns
    almost every edge while all vertices stay reachable."""
    v = hub_degree + 1
    src = [0] * hub_degree + list(range(1, v - 1))
    dst = list(range(1, v)) + list(range(2, v))
    weights = None
    if weighted:
        rng = np.random.default_rng(seed)
        weights = rng.integers(1, 11, size=len(src)).astype(np.float64)
    return edges_to_csr(np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                        weights, v)


def gen_powerlaw_graph(vertex_count: int, mean_degree: int, seed: int,
                       alpha: float = 2.0, weighted: bool = False) -> CsrGraph:
    """Degree-skewed graph: zipf-distributed out-degrees, uniform targets."""
    rng = np.random.default_rng(seed)
    raw = rng.zipf(alpha, size=vertex_count)
    degrees = np.minimum(raw, vertex_count - 1).astype(np.int64)
    scale = mean_degree * vertex_count / max(int(degrees.sum()), 1)
    degrees = np.maximum((degrees * scale).astype(np.int64), 1)
    src = np.repeat(np.arange(vertex_count, dtype=np.int64), degrees)
    dst = rng.integers(0, vertex_count, size=len(src), dtype=np.int64)
    weights = None
    if weighted:
        weights = rng.integers(1, 11, size=len(src)).astype(np.float64)
    return edges_to_csr(src, dst, weights, vertex_count)
