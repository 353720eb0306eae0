"""GPU-driven demand paging over a modeled RDMA NIC, plus a UVM baseline.

Discrete-event models small enough to property-test on a laptop: the paging
structures (page table, reference counters, FIFO frame ring), the NIC queue
protocol with its calibrated timing, the warp-level access path with fault
coalescing, the host-driver baseline, and workload generators that turn
kernels (vector add, column-order matrix walks, graph traversal, query
scans) into per-warp access programs.
"""

from gpupage.engine import Counters, Engine, SimulationError, StallError
from gpupage.experiments import (ComparisonError, ConfigError, ExperimentConfig,
                                 MetricsReport, compare, replay_check,
                                 run_experiment, sweep)
from gpupage.nic import (CompletionQueue, NicDevice, NicTimingModel, ProtocolError,
                         QueuePair, WorkRequest, gdr_baseline_throughput,
                         little_law_queue_depth)
from gpupage.paging import (FrameRing, PageState, PageTable, PagingError,
                            gpu_bytes_for_level, oversubscription_level)
from gpupage.reporting import emit_report, report_from_raw, save_raw
from gpupage.runtime import (GpuPagingRuntime, ManagedBuffer, Warp,
                             elect_warp_leaders)
from gpupage.uvm import UvmConfig, UvmRuntime, apply_memadvise, uvm_fault_service_time
from gpupage.workloads import (AccessProgram, BalancedCsrGraph, CsrGraph,
                               QueryWorkload, csr_to_balanced, gen_column_walk,
                               gen_graph_traversal, gen_query_scan, gen_stream,
                               gen_vecadd, load_csr_binary, load_edge_list,
                               save_csr_binary)

__version__ = "0.1.0"
