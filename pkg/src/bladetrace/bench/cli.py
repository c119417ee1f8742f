"""bench: workload, tamper, and chain-verification command line.

    bench run --blades 10 --cycles 2 --seed 1 --mode ledger --out report.json
    bench tamper --trials 100 --workdir runs/ledger-10
    bench verify-chain --block-dir runs/ledger-10/network/peers/OEM/blocks
    bench serve --port 8000 --workdir gateway-data
"""

from __future__ import annotations

import argparse
import json
import sys

from .tamper import run_tamper_suite
from .workload import WorkloadConfig, run_workload, write_report


def _cmd_run(args: argparse.Namespace) -> int:
    config = WorkloadConfig(
        blades=args.blades,
        cycles_per_blade=args.cycles,
        seed=args.seed,
        mode=args.mode,
        image_size=args.image_size,
        parallelism=args.parallelism,
    )
    report = run_workload(config, args.workdir)
    if args.out:
        write_report(report, args.out)
    print(
        f"{args.mode}: {report['completed_blades']}/{report['total_blades']} blades, "
        f"{report['operation_count']} ops in {report['duration_s']}s "
        f"({report['throughput_ops_per_min']} ops/min)"
    )
    for state, count in report["final_state_census"].items():
        if count:
            print(f"  {state}: {count}")
    if report["errors"]:
        print(f"  errors: {len(report['errors'])}")
        return 1
    return 0 if report["completed_blades"] == report["total_blades"] else 1


def _cmd_tamper(args: argparse.Namespace) -> int:
    block_dir = args.block_dir or f"{args.workdir}/network/peers/OEM/blocks"
    cas_dir = args.cas_dir or f"{args.workdir}/cas"
    report = run_tamper_suite(
        block_dir, cas_dir, trials=args.trials, controls=args.controls, seed=args.seed
    )
    if args.out:
        write_report(report, args.out)
    print(
        f"artifact tamper: {report['detected']}/{report['trials']} detected, "
        f"{report['false_positives']} false positives on {report['controls']} controls"
    )
    print(
        f"verification: avg {report['avg_verify_ms']} ms, max {report['max_verify_ms']} ms"
    )
    for trial in report["chain_trials"]:
        print(
            f"block tamper at {trial['block']}: first_bad_block="
            f"{trial['first_bad_block']} (bound ok: {trial['within_bound']})"
        )
    ok = (
        report["detected"] == report["trials"]
        and report["false_positives"] == 0
        and all(t["detected"] for t in report["chain_trials"])
    )
    return 0 if ok else 1


def _cmd_verify_chain(args: argparse.Namespace) -> int:
    from ..ledger.replay import verify_chain_files

    block_dir = args.block_dir or f"{args.workdir}/network/peers/OEM/blocks"
    report = verify_chain_files(block_dir)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["ok"] else 1


def _cmd_scenario(args: argparse.Namespace) -> int:
    from ..raft.service import load_scenario, run_scenario

    report = run_scenario(load_scenario(args.file))
    if args.out:
        write_report(report, args.out)
    for node_id, info in sorted(report["nodes"].items()):
        print(
            f"node {node_id}: role={info['role']} term={info['term']} "
            f"commit={info['commit_index']} elections={info['elections_won']} "
            f"log={info['log_digest'][:12]}"
        )
    print(
        f"delivered {len(report['delivered_tx_ids'])}/{len(report['submitted'])} "
        f"submissions in {report['blocks_delivered']} blocks; "
        f"log matching: {report['log_matching_ok']}"
    )
    return 0 if report["log_matching_ok"] and report["prefix_consistent"] else 1


def _cmd_serve(args: argparse.Namespace) -> int:
    from ..gateway.app import main as serve_main

    sys.argv = ["gateway"]
    if args.host:
        sys.argv += ["--host", args.host]
    if args.port:
        sys.argv += ["--port", str(args.port)]
    if args.workdir:
        sys.argv += ["--workdir", args.workdir]
    if args.ui_dir:
        sys.argv += ["--ui-dir", args.ui_dir]
    serve_main()
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="drive a lifecycle workload")
    p_run.add_argument("--blades", type=int, default=10)
    p_run.add_argument("--cycles", type=int, default=2)
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--mode", choices=("ledger", "baseline"), default="ledger")
    p_run.add_argument("--image-size", type=int, default=2 * 1024 * 1024)
    p_run.add_argument("--parallelism", type=int, default=4)
    p_run.add_argument("--workdir", default="bench-run")
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(fn=_cmd_run)

    p_tamper = sub.add_parser("tamper", help="artifact/block tamper-detection trials")
    p_tamper.add_argument("--trials", type=int, default=100)
    p_tamper.add_argument("--controls", type=int, default=100)
    p_tamper.add_argument("--seed", type=int, default=0)
    p_tamper.add_argument("--workdir", default="bench-run")
    p_tamper.add_argument("--block-dir", default=None)
    p_tamper.add_argument("--cas-dir", default=None)
    p_tamper.add_argument("--out", default=None)
    p_tamper.set_defaults(fn=_cmd_tamper)

    p_verify = sub.add_parser("verify-chain", help="recompute all block hashes and flags")
    p_verify.add_argument("--workdir", default="bench-run")
    p_verify.add_argument("--block-dir", default=None)
    p_verify.set_defaults(fn=_cmd_verify_chain)

    p_scenario = sub.add_parser("scenario", help="run an ordering fault-injection scenario file")
    p_scenario.add_argument("--file", required=True)
    p_scenario.add_argument("--out", default=None)
    p_scenario.set_defaults(fn=_cmd_scenario)

    p_serve = sub.add_parser("serve", help="run the HTTP gateway")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--workdir", default="gateway-data")
    p_serve.add_argument("--ui-dir", default=None)
    p_serve.set_defaults(fn=_cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
