"""Achieved PCIe bandwidth versus request size.

Walks the transfer microbenchmark: the host-initiated baseline needs huge
requests before its per-request setup cost amortizes, while the GPU-driven
pager holds a flat curve at every page size because enough queue pairs keep
the NIC saturated.  Adds the second NIC to show the aggregate cap taking
over.

Run:  python demos/bandwidth_curves.py
"""

from gpupage.experiments import ExperimentConfig, run_experiment
from gpupage.nic import NicTimingModel, gdr_baseline_throughput

SIZES = [4096 << k for k in range(9)]   # 4KB .. 1MB


def stream(page_size: int, nic_count: int) -> float:
    cfg = ExperimentConfig()
    cfg.workload = {"kind": "stream", "total_bytes": 32 << 20, "warps": 256}
    cfg.runtime_page_size_bytes = page_size
    cfg.nic_count = nic_count
    cfg.nic_queue_count = 84
    report = run_experiment(cfg)
    return report.bytes_h2g / (report.kernel_time_ns * 1e-9)


def main() -> None:
    model = NicTimingModel()
    print(f"{'size':>8} {'host-initiated':>15} {'gpu-driven 1-nic':>17} "
          f"{'gpu-driven 2-nic':>17}   (GB/s)")
    for size in SIZES:
        gdr = gdr_baseline_throughput(size, 16, model) / 1e9
        label = f"{size // 1024}KB" if size < (1 << 20) else "1MB"
        if size <= 65536:
            one = stream(size, 1) / 1e9
            two = stream(size, 2) / 1e9
            print(f"{label:>8} {gdr:>15.3f} {one:>17.2f} {two:>17.2f}")
        else:
            # page sizes above 64KB are unusual for paging; the baseline
            # still benefits from bigger requests
            print(f"{label:>8} {gdr:>15.3f} {'-':>17} {'-':>17}")
    print("\nThe gpu-driven rows sit at the NIC ceiling from 4KB up; the"
          "\nhost-initiated curve crosses 6 GB/s only near 512KB requests.")


if __name__ == "__main__":
    main()
