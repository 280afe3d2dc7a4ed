"""Command-line entry point: ``frontseal <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from . import bench
from .scenario import ScenarioConfig, Simulation


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _emit(report: bench.BenchReport, fmt: str) -> str:
    return report.to_csv() if fmt == "csv" else report.to_json()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_ints, help="committee size(s), comma separated")
    common.add_argument("--t", type=int, help="threshold (default floor(n/2)+1)")
    common.add_argument("--m", type=int, default=64, help="confirmation blocks")
    common.add_argument("--block-time-ms", type=float, default=12_000)
    common.add_argument("--protocol", choices=("tdh2", "pvss"), default="tdh2")
    common.add_argument("--batch", type=_ints, help="batch size(s), comma separated")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", choices=("csv", "json"), default="json")
    common.add_argument("--trials", type=int, default=10)

    parser = argparse.ArgumentParser(prog="frontseal", description="Threshold-encrypted mempool simulator and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("latency", parents=[common], help="per-phase latency and overhead vs finality")
    sub.add_parser("throughput", parents=[common], help="batched key reconstruction throughput")
    sub.add_parser("storage", parents=[common], help="serialized c_k sizes")
    sub.add_parser("reconfig", parents=[common], help="DKG and resharing cost")
    sub.add_parser("compare", parents=[common], help="end-to-end latency of competing designs")
    sc = sub.add_parser("scenario", parents=[common], help="run a scenario file through the simulator")
    sc.add_argument("config", help="YAML scenario file")
    sc.add_argument("--trace", help="write the NDJSON event trace here")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command
    if cmd == "latency":
        report = bench.bench_latency(
            args.n or list(bench.DEFAULT_N), args.protocol, args.trials,
            t=args.t, m=args.m, block_time_ms=args.block_time_ms, seed=args.seed,
        )
    elif cmd == "throughput":
        report = bench.bench_throughput(
            args.batch or list(bench.DEFAULT_BATCHES), args.protocol, (args.n or [128])[0],
            t=args.t, seed=args.seed, trials=min(args.trials, 5),
        )
    elif cmd == "storage":
        report = bench.measure_storage(args.n or list(bench.DEFAULT_N), args.protocol, seed=args.seed)
    elif cmd == "reconfig":
        report = bench.bench_reconfig(args.n or [8, 16, 32], seed=args.seed)
    elif cmd == "compare":
        report = bench.compare_designs(
            args.m, args.block_time_ms, n=(args.n or [128])[0], protocol=args.protocol,
            trials=min(args.trials, 3), seed=args.seed,
        )
    else:
        cfg = ScenarioConfig.load(args.config)
        result = Simulation(cfg).run()
        if args.trace:
            with open(args.trace, "w") as fh:
                fh.write(result.trace.to_ndjson())
        summary = result.summary()
        if args.out == "csv":
            sys.stdout.write(",".join(summary) + "\n" + ",".join(str(v) for v in summary.values()) + "\n")
        else:
            sys.stdout.write(json.dumps(summary, indent=2) + "\n")
        return 0
    sys.stdout.write(_emit(report, args.out))
    if args.out == "json":
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
