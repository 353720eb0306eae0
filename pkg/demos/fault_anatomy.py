"""Anatomy of a single demand-paging fault, step by step.

Issues individual accesses against a tiny rig and prints where the time
goes: the cold fetch, the free resident hit, inter-warp coalescing, and an
eviction that has to wait for the previous owner's reference to drain and
write a dirty page back.

Run:  python demos/fault_anatomy.py
"""

from gpupage.engine import EV_REF_RELEASE, Counters, Engine
from gpupage.nic import NicDevice, NicTimingModel
from gpupage.paging import FrameRing, PageTable
from gpupage.runtime import READ, WRITE, GpuPagingRuntime, ManagedBuffer


def rig(frames: int):
    engine = Engine()
    counters = Counters()
    pt = PageTable(64, 8192)
    nic = NicDevice(engine, NicTimingModel(), queue_count=4, counters=counters)
    rt = GpuPagingRuntime(engine, pt, FrameRing(frames), nic, counters)
    return engine, pt, rt, counters


def main() -> None:
    buf = ManagedBuffer(0, 8, 64 * 1024, 0)
    per_page = 1024

    engine, pt, rt, counters = rig(frames=8)
    out = rt.access(0, buf, 0, READ)
    print(f"cold fault:        {out.latency_ns / 1000:8.2f} us "
          f"(23us control path + 8KB transfer + 1us protocol)")
    out = rt.access(1, buf, 0, READ)
    print(f"resident hit:      {out.latency_ns / 1000:8.2f} us, "
          f"{out.bytes_transferred} bytes moved")

    engine, pt, rt, counters = rig(frames=8)
    for w in range(3):
        rt.issue_access(w, buf, per_page, READ)
    engine.run_until_idle()
    print(f"3 warps, one page: {counters.posted} work request posted, "
          f"{counters.coalesced} followers coalesced")

    engine, pt, rt, counters = rig(frames=1)
    rt.access(0, buf, 0, WRITE)                    # dirties the only frame
    out = rt.access(1, buf, per_page, READ)        # must evict + write back
    print(f"evict dirty page:  {out.latency_ns / 1000:8.2f} us "
          f"(write-back round trip serializes ahead of the fetch)")

    engine, pt, rt, counters = rig(frames=1)
    rt.access(0, buf, 0, READ)
    pt.add_ref(0)                                  # a warp still using page 0
    engine.schedule(engine.now + 5_000, EV_REF_RELEASE,
                    lambda: pt.release_ref(0))
    out = rt.access(1, buf, per_page, READ)
    print(f"wait for release:  {out.latency_ns / 1000:8.2f} us "
          f"(5us reference drain before the frame frees)")


if __name__ == "__main__":
    main()
