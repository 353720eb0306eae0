"""Command-line entry point.

    gpupage run [--config FILE] [--format json|csv] [--out PATH]
                [--save-raw PATH] [KEY=VALUE ...]
    gpupage sweep --axis AXIS --values V1,V2,... [same options]
    gpupage convert-graph --input EDGELIST --output FILE.bcsr
                          [--chunk-size N] [--validate]
    gpupage report --raw FILE [--format json|csv] [--out PATH]

Any KEY=VALUE (or --key=value) argument overrides a config key by dotted
path, e.g. nic.queue_count=72 or workload.kind=stream.  Environment
variables override the config file and are themselves overridden by flags:
GPUPAGE_NIC__QUEUE_COUNT=72 maps to nic.queue_count ('__' encodes the dot).

Exit codes: 0 success, 2 config error, 3 simulated stall, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from gpupage.engine import StallError
from gpupage.experiments import ConfigError, ExperimentConfig, run_experiment, sweep
from gpupage.reporting import emit_report, report_from_raw, save_raw
from gpupage.workloads import (EdgeListError, csr_to_balanced, load_csr_binary,
                               load_edge_list, save_csr_binary)

ENV_PREFIX = "GPUPAGE_"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALL = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpupage",
                                     description="demand-paging simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    _common_run_args(run_p)
    run_p.add_argument("--save-raw", metavar="PATH",
                       help="also write the raw counter file")

    sweep_p = sub.add_parser("sweep", help="run one experiment per axis value")
    _common_run_args(sweep_p)
    sweep_p.add_argument("--axis", required=True,
                         help="page_size | queue_count | oversubscription | nic_count")
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values")

    conv_p = sub.add_parser("convert-graph",
                            help="edge list -> binary CSR cache")
    conv_p.add_argument("--input", required=True)
    conv_p.add_argument("--output", required=True)
    conv_p.add_argument("--chunk-size", type=int, default=None,
                        help="also report balanced-CSR chunk statistics")
    conv_p.add_argument("--validate", action="store_true",
                        help="reload the written file and check it round-trips")

    rep_p = sub.add_parser("report", help="re-derive metrics from raw counters")
    rep_p.add_argument("--raw", required=True)
    rep_p.add_argument("--format", choices=("json", "csv"), default="json")
    rep_p.add_argument("--out")
    return parser


def _common_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="JSON config file")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("overrides", nargs="*", metavar="KEY=VALUE",
                   help="config overrides by dotted path")


def _env_overrides() -> list[tuple[str, str]]:
    out = []
    for name, value in sorted(os.environ.items()):
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):].lower().replace("__", ".")
            out.append((key, value))
    return out


def _load_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh))
    else:
        cfg = ExperimentConfig()
    for key, value in _env_overrides():
        cfg.set_key(key, value)
    for item in args.overrides:
        text = item.lstrip("-")
        if "=" not in text:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = text.split("=", 1)
        cfg.set_key(key, value)
    return cfg


def _write(data: bytes, out_path) -> None:
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    if args.save_raw:
        save_raw(report, args.save_raw)
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    table = sweep(cfg, args.axis, values)
    _write(emit_report(table, args.format), args.out)
    return EXIT_OK


def _cmd_convert_graph(args) -> int:
    g = load_edge_list(args.input)
    save_csr_binary(g, args.output)
    info = {"vertices": g.vertex_count, "edges": g.edge_count,
            "weighted": g.weights is not None, "output": args.output}
    if args.chunk_size:
        balanced = csr_to_balanced(g, args.chunk_size)
        info["chunk_size"] = args.chunk_size
        info["chunks"] = balanced.chunk_count
        info["explicit_chunks"] = balanced.explicit_chunks
        info["chunk_table_bytes"] = balanced.chunk_table_bytes()
    if args.validate:
        back = load_csr_binary(args.output)
        ok = (back.vertex_count == g.vertex_count
              and back.edge_count == g.edge_count
              and (back.offsets == g.offsets).all()
              and (back.edges == g.edges).all())
        if not ok:
            raise EdgeListError(f"{args.output}: round-trip mismatch")
        info["validated"] = True
    sys.stdout.write(json.dumps(info, indent=2) + "\n")
    return EXIT_OK


def _cmd_report(args) -> int:
    report = report_from_raw(args.raw)
    _write(emit_report(report, args.format), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "sweep": _cmd_sweep,
                "convert-graph": _cmd_convert_graph, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StallError as exc:
        print(f"stall detected: {exc}", file=sys.stderr)
        return EXIT_STALL
    except (OSError, EdgeListError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
