"""Machine-readable report serialization (JSON and CSV).

JSON keeps the report's fixed field order and always carries schema_version
and the config echo, so the same report serializes to the same bytes.  CSV
is one row per run with the column set below; sweep tables add the axis and
status columns.
"""

from __future__ import annotations

import csv
import io
import json

from gpupage.experiments import MetricsReport, derive_report

CSV_COLUMNS = [
    "axis", "value", "status", "error",
    "mode", "seed", "workload_kind",
    "page_size_bytes", "nic_count", "queue_count", "batch_size",
    "gpu_memory_bytes", "oversubscription_level",
    "kernel_time_ns", "setup_time_ns",
    "bytes_h2g", "bytes_g2h", "unique_bytes",
    "io_amplification", "pcie_utilization",
    "faults", "evictions", "dirty_evictions", "doorbells", "posted",
    "coalesced", "write_backs", "migrations", "wasted_prefetch_bytes",
]


def _rows(obj) -> list[dict]:
    if isinstance(obj, MetricsReport):
        return [{"report": obj, "status": "ok"}]
    if isinstance(obj, dict) and "report" in obj:
        return [obj]
    return [r if isinstance(r, dict) else {"report": r, "status": "ok"} for r in obj]


def _csv_row(row: dict) -> dict:
    out = {c: "" for c in CSV_COLUMNS}
    out["axis"] = row.get("axis", "")
    out["value"] = row.get("value", "")
    out["status"] = row.get("status", "ok")
    out["error"] = row.get("error", "")
    report = row.get("report")
    if report is None:
        return out
    d = report.to_dict()
    out["workload_kind"] = d["workload"].get("kind", "")
    for col in CSV_COLUMNS:
        if col in d:
            out[col] = d[col]
    return out


def emit_report(obj, format: str = "json") -> bytes:
    """Serialize a report, a list of reports, or a sweep table."""
    if format == "json":
        if isinstance(obj, MetricsReport):
            payload = obj.to_dict()
        else:
            payload = []
            for row in _rows(obj):
                entry = {k: v for k, v in row.items() if k != "report"}
                if "report" in row:
                    entry["report"] = row["report"].to_dict()
                payload.append(entry)
        return (json.dumps(payload, indent=2) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in _rows(obj):
            writer.writerow(_csv_row(row))
        return buf.getvalue().encode()
    raise ValueError(f"unknown report format {format!r}")


def save_raw(report: MetricsReport, path) -> None:
    """Persist the raw counters plus everything needed to re-derive metrics."""
    raw = {
        "schema_version": report.schema_version,
        "config": report.config,
        "counters": {
            "faults": report.faults,
            "coalesced": report.coalesced,
            "bytes_h2g": report.bytes_h2g,
            "bytes_g2h": report.bytes_g2h,
            "evictions": report.evictions,
            "dirty_evictions": report.dirty_evictions,
            "doorbells": report.doorbells,
            "posted": report.posted,
            "write_backs": report.write_backs,
            "migrations": report.migrations,
            "wasted_prefetch_bytes": report.wasted_prefetch_bytes,
            "completion_ns": report.kernel_time_ns,
            "per_warp_faults": report.per_warp_faults,
        },
        "unique_bytes": report.unique_bytes,
        "workload_bytes": report.workload_bytes,
        "footprint_bytes": report.footprint_bytes,
        "gpu_memory_bytes": report.gpu_memory_bytes,
        "setup_time_ns": report.setup_time_ns,
        "fit": report.fit,
        "workload": report.workload,
        "counters_digest": report.counters_digest,
        "event_log_digest": report.event_log_digest,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(raw, fh, indent=2)
        fh.write("\n")


def report_from_raw(path) -> MetricsReport:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return derive_report(raw["config"], raw["counters"], raw["unique_bytes"],
                         raw["workload_bytes"], raw["footprint_bytes"],
                         raw["gpu_memory_bytes"], raw["setup_time_ns"],
                         raw["fit"], raw["workload"], raw["counters_digest"],
                         raw.get("event_log_digest"))
