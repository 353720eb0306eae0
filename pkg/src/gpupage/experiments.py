"""Experiment configuration, execution, and metric derivation.

A single ExperimentConfig drives any of the four modes:

    gpuvm  - GPU-driven paging over the modeled NIC
    uvm    - host-driver baseline (4KB faults, 64KB migrations, 2MiB eviction)
    bulk   - move every buffer once at full PCIe bandwidth, no demand paging
    gdr    - host-initiated transfer baseline at a fixed request size

Config keys use dotted paths (nic.queue_count, runtime.page_size_bytes,
uvm.read_mostly, ...) so files, environment variables, and CLI flags can all
address the same knobs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from fractions import Fraction

from gpupage import workloads
from gpupage.engine import Counters, Engine
from gpupage.nic import NicDevice, NicTimingModel, fit_gdr_setup_ns, gdr_baseline_throughput
from gpupage.paging import FrameRing, PageTable, gpu_bytes_for_level
from gpupage.runtime import GpuPagingRuntime
from gpupage.uvm import GPU_PAGE, UvmConfig, UvmRuntime, apply_memadvise

SCHEMA_VERSION = 1

MODES = ("gpuvm", "uvm", "bulk", "gdr")


class ConfigError(Exception):
    pass


class ComparisonError(Exception):
    pass


@dataclass
class ExperimentConfig:
    mode: str = "gpuvm"
    seed: int = 0
    oversubscription_level: object = None      # number or exact string like "1/3"
    workload: dict = field(default_factory=lambda: {"kind": "vecadd", "n": 65536, "warps": 8})
    nic_base_latency_us: float = 23.0
    nic_per_nic_bw_gbps: float = 6.5
    nic_count: int = 1
    nic_aggregate_cap_gbps: float = 12.15
    nic_batch_size: int = 1
    nic_queue_count: int = 84
    nic_queue_depth: int = 64
    runtime_resident_access_cost_us: float = 0.0
    runtime_protocol_overhead_us: float = 1.0
    runtime_page_size_bytes: int = 8192
    runtime_gpu_memory_bytes: object = None
    uvm_batching_window_us: float = 20.0
    uvm_eviction_block_bytes: int = 2 * 1024 * 1024
    uvm_prefetch_bytes: int = 61440
    uvm_read_mostly: bool = False
    uvm_memadvise_setup_s: float = 2.25
    gdr_request_size: int = 4096
    gdr_streams: int = 16
    watchdog_ms: float = 10.0

    # -- dotted-path plumbing ------------------------------------------------

    _GROUPS = ("nic", "runtime", "uvm", "gdr", "workload")

    @classmethod
    def _attr_for(cls, path: str) -> str:
        attr = path.replace(".", "_")
        if attr in {f.name for f in fields(cls)}:
            return attr
        raise ConfigError(f"unknown config key {path!r}")

    def set_key(self, path: str, value) -> None:
        if path.startswith("workload."):
            key = path.split(".", 1)[1]
            value = _coerce(value)
            if key == "kind" and value != self.workload.get("kind"):
                self.workload = {"kind": value}
            else:
                self.workload[key] = value
            return
        attr = self._attr_for(path)
        current = getattr(self, attr)
        setattr(self, attr, _coerce(value, type(current) if current is not None else None))

    def to_dict(self) -> dict:
        out: dict = {
            "mode": self.mode,
            "seed": self.seed,
            "oversubscription_level": self.oversubscription_level,
            "workload": dict(self.workload),
            "watchdog_ms": self.watchdog_ms,
        }
        for group in ("nic", "runtime", "uvm", "gdr"):
            sub = {}
            for f in fields(self):
                if f.name.startswith(group + "_"):
                    sub[f.name[len(group) + 1:]] = getattr(self, f.name)
            out[group] = sub
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        cfg = cls()
        for key, value in data.items():
            if key in ("nic", "runtime", "uvm", "gdr") and isinstance(value, dict):
                for sub, v in value.items():
                    cfg.set_key(f"{key}.{sub}", v)
            elif key == "workload":
                cfg.workload = dict(value)
            else:
                cfg.set_key(key, value)
        return cfg

    def copy(self) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(self.to_dict())

    # -- derived model objects ----------------------------------------------

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        ps = self.runtime_page_size_bytes
        if ps < 512 or ps & (ps - 1):
            raise ConfigError("runtime.page_size_bytes must be a power of two >= 512")
        if self.nic_count not in (1, 2):
            raise ConfigError("nic.count must be 1 or 2")
        if self.nic_queue_count < 1 or self.nic_queue_depth < 1:
            raise ConfigError("queue count and depth must be >= 1")
        if not 1 <= self.nic_batch_size <= self.nic_queue_depth:
            raise ConfigError("nic.batch_size must be in [1, nic.queue_depth]")
        if "kind" not in self.workload:
            raise ConfigError("workload.kind is required")

    def nic_model(self) -> NicTimingModel:
        return NicTimingModel(
            base_latency_ns=round(self.nic_base_latency_us * 1_000),
            per_nic_bandwidth=round(self.nic_per_nic_bw_gbps * 1e9),
            nic_count=self.nic_count,
            aggregate_cap=round(self.nic_aggregate_cap_gbps * 1e9),
        )

    def uvm_config(self) -> UvmConfig:
        return UvmConfig(
            prefetch_bytes=self.uvm_prefetch_bytes,
            eviction_block=self.uvm_eviction_block_bytes,
            read_mostly=self.uvm_read_mostly,
            memadvise_setup_ns=round(self.uvm_memadvise_setup_s * 1e9),
            batching_window_ns=round(self.uvm_batching_window_us * 1_000),
        )


def _coerce(value, want=None):
    if isinstance(value, str) and want is not str:
        try:
            value = json.loads(value)
        except (ValueError, TypeError):
            pass
    if want in (int, float) and isinstance(value, (int, float)) and not isinstance(value, bool):
        return want(value)
    if want is bool and isinstance(value, bool):
        return value
    return value


# ---------------------------------------------------------------------------
# workload construction
# ---------------------------------------------------------------------------

def build_program(cfg: ExperimentConfig):
    """(AccessProgram, extra-meta) for the configured workload."""
    wl = dict(cfg.workload)
    kind = wl.pop("kind")
    extra: dict = {}
    if kind == "vecadd":
        program = workloads.gen_vecadd(wl.pop("n"), wl.pop("warps"),
                                       wl.pop("element_size", 8))
    elif kind == "stream":
        program = workloads.gen_stream(wl.pop("total_bytes"), wl.pop("warps"),
                                       wl.pop("element_size", 8))
    elif kind == "column_walk":
        program = workloads.gen_column_walk(wl.pop("rows"), wl.pop("cols"),
                                            wl.pop("warps"),
                                            wl.pop("kernel", "mvt"),
                                            wl.pop("element_size", 8))
    elif kind == "query":
        q = workloads.QueryWorkload(wl.pop("rows"), wl.pop("row_bytes", 512),
                                    wl.pop("selectivity"), wl.pop("query_seed", cfg.seed))
        program = workloads.gen_query_scan(q, wl.pop("columns", 1),
                                           wl.pop("warps", 8),
                                           wl.pop("predicate_bytes", 8))
        extra["matching_rows"] = len(q.matching_rows)
    elif kind == "traversal":
        g = _build_graph(wl.pop("graph"), cfg.seed)
        representation = wl.pop("representation", "csr")
        chunk_size = wl.pop("chunk_size", 256)
        if representation == "balanced":
            g = workloads.csr_to_balanced(g, chunk_size)
        program, results = workloads.gen_graph_traversal(
            g, wl.pop("algo", "bfs"), wl.pop("sources", None),
            wl.pop("warps", 8), wl.pop("vertices_per_warp", 32))
        extra["traversal_results"] = results
    else:
        raise ConfigError(f"unknown workload kind {kind!r}")
    if wl:
        raise ConfigError(f"unused workload parameters: {sorted(wl)}")
    return program, extra


def _build_graph(spec, seed: int) -> workloads.CsrGraph:
    if isinstance(spec, str):
        if spec.endswith(".bcsr"):
            return workloads.load_csr_binary(spec)
        return workloads.load_edge_list(spec)
    spec = dict(spec)
    kind = spec.pop("kind")
    seed = spec.pop("seed", seed)
    if kind == "random":
        return workloads.gen_random_graph(spec.pop("vertices"), spec.pop("edges"),
                                          seed, spec.pop("weighted", False),
                                          spec.pop("symmetric", False))
    if kind == "star":
        return workloads.gen_star_heavy_graph(spec.pop("hub_degree"), seed,
                                              spec.pop("weighted", False))
    if kind == "powerlaw":
        return workloads.gen_powerlaw_graph(spec.pop("vertices"),
                                            spec.pop("mean_degree"), seed,
                                            spec.pop("alpha", 2.0),
                                            spec.pop("weighted", False))
    raise ConfigError(f"unknown graph kind {kind!r}")


def _footprint_bytes(program, granule: int) -> int:
    """Resident footprint if every buffer is fully touched, granule-rounded."""
    total = 0
    for b in program.buffers:
        total += -(-b.nbytes() // granule) * granule
    return total


def _resolve_gpu_bytes(cfg: ExperimentConfig, program) -> tuple[int, int]:
    """(gpu_bytes, footprint_bytes) for the mode's residency granularity."""
    granule = GPU_PAGE if cfg.mode == "uvm" else cfg.runtime_page_size_bytes
    footprint = _footprint_bytes(program, granule)
    if cfg.oversubscription_level is not None:
        level = Fraction(str(cfg.oversubscription_level))
        gpu = gpu_bytes_for_level(footprint, level)
    elif cfg.runtime_gpu_memory_bytes is not None:
        gpu = int(cfg.runtime_gpu_memory_bytes)
    else:
        gpu = footprint    # unconstrained: the whole working set fits
    if gpu < granule:
        raise ConfigError(f"gpu memory {gpu} smaller than one {granule}-byte granule")
    return gpu, footprint


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    schema_version: int
    mode: str
    seed: int
    workload: dict
    kernel_time_ns: int
    setup_time_ns: int
    bytes_h2g: int
    bytes_g2h: int
    unique_bytes: int
    io_amplification: float
    pcie_utilization: float
    faults: int
    evictions: int
    dirty_evictions: int
    doorbells: int
    posted: int
    coalesced: int
    write_backs: int
    migrations: int
    wasted_prefetch_bytes: int
    per_warp_faults: dict
    gpu_memory_bytes: int
    footprint_bytes: int
    workload_bytes: int
    oversubscription_level: str
    page_size_bytes: int
    queue_count: int
    nic_count: int
    batch_size: int
    fit: dict
    config: dict
    counters_digest: str
    event_log_digest: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            d[f.name] = getattr(self, f.name)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def derive_report(config: dict, counters: dict, unique_bytes: int,
                  workload_bytes: int, footprint_bytes: int, gpu_bytes: int,
                  setup_ns: int, fit: dict, workload_meta: dict,
                  counters_digest: str, event_log_digest: str | None = None,
                  extra: dict | None = None) -> MetricsReport:
    """Turn raw counters into a report; also the path `report` re-derivation
    takes when reading a saved raw-counter file."""
    kernel_ns = counters["completion_ns"]
    moved = counters["bytes_h2g"] + counters["bytes_g2h"]
    cap = round(config["nic"]["aggregate_cap_gbps"] * 1e9)
    utilization = moved / (kernel_ns * 1e-9 * cap) if kernel_ns else 0.0
    amplification = counters["bytes_h2g"] / unique_bytes if unique_bytes else 0.0
    level = Fraction(footprint_bytes, gpu_bytes) - 1
    return MetricsReport(
        schema_version=SCHEMA_VERSION,
        mode=config["mode"],
        seed=config["seed"],
        workload=workload_meta,
        kernel_time_ns=kernel_ns,
        setup_time_ns=setup_ns,
        bytes_h2g=counters["bytes_h2g"],
        bytes_g2h=counters["bytes_g2h"],
        unique_bytes=unique_bytes,
        io_amplification=amplification,
        pcie_utilization=utilization,
        faults=counters["faults"],
        evictions=counters["evictions"],
        dirty_evictions=counters["dirty_evictions"],
        doorbells=counters["doorbells"],
        posted=counters["posted"],
        coalesced=counters["coalesced"],
        write_backs=counters["write_backs"],
        migrations=counters["migrations"],
        wasted_prefetch_bytes=counters["wasted_prefetch_bytes"],
        per_warp_faults=counters["per_warp_faults"],
        gpu_memory_bytes=gpu_bytes,
        footprint_bytes=footprint_bytes,
        workload_bytes=workload_bytes,
        oversubscription_level=str(level),
        page_size_bytes=config["runtime"]["page_size_bytes"],
        queue_count=config["nic"]["queue_count"],
        nic_count=config["nic"]["count"],
        batch_size=config["nic"]["batch_size"],
        fit=fit,
        config=config,
        counters_digest=counters_digest,
        event_log_digest=event_log_digest,
        extra=extra or {},
    )


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, hash_events: bool = False,
                   trace=None) -> MetricsReport:
    cfg.validate()
    program, extra = build_program(cfg)
    gpu_bytes, footprint = _resolve_gpu_bytes(cfg, program)
    model = cfg.nic_model()
    counters = Counters()
    setup_ns = 0
    fit: dict = {}
    event_digest = None
    watchdog_ns = round(cfg.watchdog_ms * 1e6)

    if cfg.mode == "gpuvm":
        engine = Engine(watchdog_ns, hash_events)
        page_size = cfg.runtime_page_size_bytes
        total_pages = -(-program.span_bytes // page_size)
        pt = PageTable(total_pages, page_size)
        ring = FrameRing(gpu_bytes // page_size)
        nic = NicDevice(engine, model, cfg.nic_queue_count, cfg.nic_queue_depth,
                        cfg.nic_batch_size, counters, trace)
        rt = GpuPagingRuntime(
            engine, pt, ring, nic, counters,
            resident_access_cost_ns=round(cfg.runtime_resident_access_cost_us * 1_000),
            protocol_overhead_ns=round(cfg.runtime_protocol_overhead_us * 1_000),
            trace=trace)
        rt.run_program(program)
        if hash_events:
            event_digest = engine.event_log_digest()
    elif cfg.mode == "uvm":
        engine = Engine(watchdog_ns, hash_events)
        ucfg = cfg.uvm_config()
        setup_ns = apply_memadvise(ucfg, ucfg.read_mostly)
        rt = UvmRuntime(engine, ucfg, gpu_bytes, counters)
        rt.run_program(program)
        intercept, bandwidth = ucfg.transfer_tail()
        fit["uvm_transfer_intercept_ns"] = intercept
        fit["uvm_transfer_bandwidth"] = bandwidth
        if hash_events:
            event_digest = engine.event_log_digest()
    elif cfg.mode == "bulk":
        total = program.workload_bytes
        cap = model.total_cap()
        counters.bytes_h2g = total
        counters.completion_ns = (total * 1_000_000_000 + cap - 1) // cap
    else:  # gdr
        setup = fit_gdr_setup_ns(model)
        fit["gdr_setup_ns"] = setup
        throughput = gdr_baseline_throughput(cfg.gdr_request_size, cfg.gdr_streams,
                                             model, setup)
        total = program.workload_bytes
        counters.bytes_h2g = total
        counters.completion_ns = round(total * 1e9 / throughput)

    workload_meta = dict(program.meta)
    workload_meta.update({k: v for k, v in extra.items() if k != "traversal_results"})
    report_extra = {k: v for k, v in extra.items() if k == "traversal_results"}
    return derive_report(cfg.to_dict(), counters.to_dict(), program.unique_bytes(),
                         program.workload_bytes, footprint, gpu_bytes, setup_ns,
                         fit, workload_meta, counters.digest(), event_digest,
                         report_extra)


SWEEP_AXES = {
    "pagesize": "runtime.page_size_bytes",
    "page_size": "runtime.page_size_bytes",
    "queuecount": "nic.queue_count",
    "queue_count": "nic.queue_count",
    "oversubscription": "oversubscription_level",
    "niccount": "nic.count",
    "nic_count": "nic.count",
}


def sweep(cfg: ExperimentConfig, axis: str, values) -> list[dict]:
    """One run per value, shared seed; per-point failures are recorded and
    the sweep continues."""
    key = SWEEP_AXES.get(axis.lower())
    if key is None:
        raise ConfigError(f"unknown sweep axis {axis!r}; options: "
                          f"{sorted(set(SWEEP_AXES.values()))}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        point = cfg.copy()
        point.set_key(key, value)
        row = {"axis": axis, "value": value}
        try:
            row["report"] = run_experiment(point)
            row["status"] = "ok"
        except Exception as exc:  # recorded, sweep continues
            row["status"] = "error"
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def compare(reports, baseline_mode: str) -> dict:
    """Speedups of every report against the baseline-mode report; setup time
    is carried alongside but never folded into the ratio."""
    baselines = [r for r in reports if r.mode == baseline_mode]
    if not baselines:
        raise ComparisonError(f"no report with baseline mode {baseline_mode!r}")
    base = baselines[0]
    table = {}
    for r in reports:
        if r.workload != base.workload or r.seed != base.seed:
            raise ComparisonError(
                f"report {r.mode!r} ran workload {r.workload} seed {r.seed}, "
                f"baseline ran {base.workload} seed {base.seed}")
        label = f"{r.mode}-{r.nic_count}nic" if r.mode == "gpuvm" else r.mode
        while label in table:
            label += "'"
        table[label] = {
            "kernel_time_ns": r.kernel_time_ns,
            "setup_time_ns": r.setup_time_ns,
            "speedup": base.kernel_time_ns / r.kernel_time_ns if r.kernel_time_ns else float("inf"),
        }
    return table


def replay_check(cfg: ExperimentConfig, seed: int | None = None, runs: int = 2) -> bool:
    """True iff `runs` repeated runs produce identical counters and event
    logs."""
    digests = set()
    for _ in range(runs):
        point = cfg.copy()
        if seed is not None:
            point.seed = seed
        report = run_experiment(point, hash_events=True)
        digests.add((report.counters_digest, report.event_log_digest))
    return len(digests) == 1
