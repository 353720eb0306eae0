import json

import pytest

from gpupage.experiments import (ComparisonError, ConfigError, ExperimentConfig,
                                 compare, replay_check, run_experiment, sweep)
from gpupage.reporting import emit_report, report_from_raw, save_raw
from gpupage.experiments import MetricsReport


def small_cfg(mode="gpuvm", **workload):
    cfg = ExperimentConfig()
    cfg.mode = mode
    cfg.workload = workload or {"kind": "vecadd", "n": 4096, "warps": 4}
    cfg.nic_queue_count = 8
    return cfg


# -- config plumbing -----------------------------------------------------------

def test_set_key_with_dotted_paths():
    cfg = ExperimentConfig()
    cfg.set_key("nic.queue_count", "72")
    cfg.set_key("runtime.page_size_bytes", "4096")
    cfg.set_key("uvm.read_mostly", "true")
    cfg.set_key("workload.kind", "stream")
    assert cfg.nic_queue_count == 72
    assert cfg.runtime_page_size_bytes == 4096
    assert cfg.uvm_read_mostly is True
    assert cfg.workload["kind"] == "stream"


def test_unknown_key_is_a_config_error():
    with pytest.raises(ConfigError, match="unknown config key"):
        ExperimentConfig().set_key("nic.warp_speed", 9)


def test_dict_round_trip():
    cfg = small_cfg()
    cfg.oversubscription_level = "1/3"
    again = ExperimentConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()


def test_validate_rejects_bad_mode_and_page_size():
    cfg = small_cfg()
    cfg.mode = "magic"
    with pytest.raises(ConfigError):
        cfg.validate()
    cfg = small_cfg()
    cfg.runtime_page_size_bytes = 3000
    with pytest.raises(ConfigError):
        cfg.validate()


# -- run_experiment -------------------------------------------------------------

def test_gpuvm_run_accounts_bytes():
    r = run_experiment(small_cfg())
    assert r.bytes_h2g == r.faults * r.page_size_bytes
    assert r.io_amplification >= 1.0
    assert 0 <= r.pcie_utilization <= 1.01


def test_uvm_run_has_migrations():
    r = run_experiment(small_cfg(mode="uvm"))
    assert r.migrations >= 1
    assert r.bytes_h2g % 4096 == 0


def test_bulk_moves_everything_once():
    cfg = small_cfg(mode="bulk", kind="query", rows=4096, row_bytes=512,
                    selectivity=0.01, warps=4)
    r = run_experiment(cfg)
    assert r.bytes_h2g == r.workload_bytes
    assert r.io_amplification == pytest.approx(r.workload_bytes / r.unique_bytes)
    assert r.io_amplification > 1.0


def test_gdr_mode_reports_fit():
    r = run_experiment(small_cfg(mode="gdr"))
    assert "gdr_setup_ns" in r.fit
    assert r.kernel_time_ns > 0


def test_oversubscription_level_overrides_memory():
    cfg = small_cfg()
    cfg.oversubscription_level = 1
    r = run_experiment(cfg)
    assert r.gpu_memory_bytes * 2 == r.footprint_bytes
    assert r.oversubscription_level == "1"


def test_vecadd_gpuvm_beats_uvm_on_utilization():
    gp = small_cfg()
    gp.workload = {"kind": "vecadd", "n": 65536, "warps": 64}
    gp.nic_queue_count = 72
    gp.nic_count = 2
    uv = gp.copy()
    uv.mode = "uvm"
    r_gp, r_uv = run_experiment(gp), run_experiment(uv)
    assert r_gp.pcie_utilization > r_uv.pcie_utilization


# -- sweep / compare / replay ------------------------------------------------------

def test_sweep_produces_one_row_per_value():
    rows = sweep(small_cfg(), "page_size", [4096, 8192])
    assert [row["value"] for row in rows] == [4096, 8192]
    assert all(row["status"] == "ok" for row in rows)
    sizes = [row["report"].page_size_bytes for row in rows]
    assert sizes == [4096, 8192]


def test_sweep_records_errors_and_continues():
    rows = sweep(small_cfg(), "page_size", [1234, 8192])
    assert rows[0]["status"] == "error"
    assert rows[1]["status"] == "ok"


def test_sweep_unknown_axis_rejected():
    with pytest.raises(ConfigError):
        sweep(small_cfg(), "flux", [1])


def test_compare_identity_and_antisymmetry():
    a = run_experiment(small_cfg())
    table = compare([a, a], baseline_mode="gpuvm")
    labels = list(table)
    assert table[labels[0]]["speedup"] == 1.0
    uv = small_cfg(mode="uvm")
    b = run_experiment(uv)
    ab = compare([a, b], baseline_mode="uvm")["gpuvm-1nic"]["speedup"]
    ba = compare([a, b], baseline_mode="gpuvm")["uvm"]["speedup"]
    assert ab * ba == pytest.approx(1.0)


def test_compare_rejects_mismatched_workloads():
    a = run_experiment(small_cfg())
    other = small_cfg()
    other.workload = {"kind": "vecadd", "n": 8192, "warps": 4}
    b = run_experiment(other)
    with pytest.raises(ComparisonError):
        compare([a, b], baseline_mode="gpuvm")


def test_replay_check_same_seed():
    assert replay_check(small_cfg(), seed=7, runs=2)


def test_identical_runs_produce_identical_report_bytes():
    a = emit_report(run_experiment(small_cfg()), "json")
    b = emit_report(run_experiment(small_cfg()), "json")
    assert a == b


def test_zero_work_config_replays_with_zero_counters():
    cfg = small_cfg()
    cfg.workload = {"kind": "traversal",
                    "graph": {"kind": "random", "vertices": 4, "edges": 0},
                    "algo": "bfs", "sources": [0], "warps": 4}
    assert replay_check(cfg, seed=1, runs=2)
    r = run_experiment(cfg)
    assert r.faults == 0 and r.bytes_h2g == 0 and r.kernel_time_ns == 0


def test_replay_check_covers_uvm_mode():
    assert replay_check(small_cfg(mode="uvm"), seed=3, runs=2)


# -- serialization -------------------------------------------------------------------

def test_json_emission_is_byte_stable():
    r = run_experiment(small_cfg())
    assert emit_report(r, "json") == emit_report(r, "json")


def test_json_round_trips_through_schema():
    r = run_experiment(small_cfg())
    data = json.loads(emit_report(r, "json"))
    again = MetricsReport.from_dict(data)
    assert again.to_dict() == r.to_dict()


def test_csv_one_row_per_run_and_header_only_when_empty():
    r = run_experiment(small_cfg())
    text = emit_report([r, r], "csv").decode()
    assert len(text.strip().splitlines()) == 3
    empty = emit_report([], "csv").decode()
    assert len(empty.strip().splitlines()) == 1


def test_raw_counters_round_trip(tmp_path):
    r = run_experiment(small_cfg())
    path = tmp_path / "raw.json"
    save_raw(r, path)
    again = report_from_raw(path)
    primary = dict(r.to_dict(), extra={})
    assert again.to_dict() == primary


def test_workload_echo_present_in_report():
    r = run_experiment(small_cfg())
    assert r.config["workload"]["kind"] == "vecadd"
    assert r.schema_version == 1
