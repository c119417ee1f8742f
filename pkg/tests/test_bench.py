"""Workload runs: determinism, cross-mode equivalence, reports, tamper suite."""

import json
import math
import random

import pytest

from bladetrace.bench.tamper import run_tamper_suite
from bladetrace.bench.workload import (
    WorkloadConfig,
    latency_table,
    percentile,
    run_workload,
    TimingLog,
)


SMALL_IMAGE = 32 * 1024


@pytest.fixture(scope="module")
def ledger_run(tmp_path_factory):
    workdir = tmp_path_factory.mktemp("ledger-run")
    config = WorkloadConfig(
        blades=3, seed=11, mode="ledger", image_size=SMALL_IMAGE, time_scale=50.0
    )
    return run_workload(config, str(workdir)), config


def test_ledger_run_completes(ledger_run):
    report, config = ledger_run
    assert report["completed_blades"] == config.blades
    assert report["errors"] == []
    assert report["final_state_census"]["IN_SERVICE"] == config.blades
    assert report["operation_count"] > config.blades * 30


def test_throughput_and_latency_fields(ledger_run):
    report, _ = ledger_run
    assert report["throughput_ops_per_min"] > 0
    table = report["latency"]["by_operation"]
    for op in ("manufacture", "release", "flight", "inspection"):
        assert table[op]["count"] > 0
        assert table[op]["p50_ms"] <= table[op]["p95_ms"] <= table[op]["max_ms"]
    kinds = report["latency"]["by_kind"]
    assert kinds["write"]["p50_ms"] > kinds["read"]["p50_ms"]


def test_baseline_same_seed_equivalence(ledger_run, tmp_path):
    ledger_report, config = ledger_run
    baseline_config = WorkloadConfig(
        blades=config.blades, seed=config.seed, mode="baseline", image_size=SMALL_IMAGE
    )
    baseline_report = run_workload(baseline_config, str(tmp_path / "baseline"))
    assert baseline_report["completed_blades"] == config.blades
    # Cross-mode oracle: identical op sequence, census, and flight totals.
    assert baseline_report["operation_count"] == ledger_report["operation_count"]
    assert baseline_report["final_state_census"] == ledger_report["final_state_census"]
    assert baseline_report["total_flights"] == ledger_report["total_flights"]
    # Directional comparison only; absolute ratios are hardware-bound.
    assert (
        baseline_report["throughput_ops_per_min"]
        > ledger_report["throughput_ops_per_min"]
    )
    assert (
        baseline_report["latency"]["by_kind"]["write"]["avg_ms"]
        < ledger_report["latency"]["by_kind"]["write"]["avg_ms"]
    )


def test_seeded_rerun_identical_sequence(tmp_path):
    config = WorkloadConfig(blades=2, seed=21, mode="baseline", image_size=SMALL_IMAGE)
    a = run_workload(config, str(tmp_path / "a"))
    b = run_workload(config, str(tmp_path / "b"))
    assert a["operation_count"] == b["operation_count"]
    assert a["total_flights"] == b["total_flights"]
    assert a["final_state_census"] == b["final_state_census"]
    ops_a = {op: row["count"] for op, row in a["latency"]["by_operation"].items()}
    ops_b = {op: row["count"] for op, row in b["latency"]["by_operation"].items()}
    assert ops_a == ops_b


def test_baseline_rejects_invalid_transitions(tmp_path):
    from bladetrace.bench.baseline import BaselineStore
    from bladetrace.ledger.peer import ChaincodeError

    store = BaselineStore(str(tmp_path / "b.db"))
    store.invoke("OEM", "qa", "ManufactureBlade", ["B1", "2025-01-01T00:00:00Z"], "2025-01-01T00:00:00Z")
    with pytest.raises(ChaincodeError) as exc:
        store.invoke(
            "AIRLINE", "ops1", "LogFlightOperation",
            ["B1", "1.0", "1", "2025-01-02T00:00:00Z"], "2025-01-02T00:00:00Z",
        )
    assert str(exc.value) == "invalid state for flight logging"
    store.close()


def test_percentiles_match_recomputation():
    rng = random.Random(8)
    log = TimingLog()
    raw = []
    for i in range(500):
        ms = rng.uniform(0.1, 50.0)
        raw.append(ms)
        log.add("flight", "write", ms)
    table = latency_table(log)["by_operation"]["flight"]
    ordered = sorted(raw)
    # Independent nearest-rank recomputation.
    assert table["p50_ms"] == round(ordered[math.ceil(0.5 * len(ordered)) - 1], 3)
    assert table["p95_ms"] == round(ordered[math.ceil(0.95 * len(ordered)) - 1], 3)
    assert table["max_ms"] == round(ordered[-1], 3)


def test_percentile_edges():
    assert percentile([], 50) == 0.0
    assert percentile([7.0], 50) == 7.0
    assert percentile([1.0, 2.0], 100) == 2.0
    assert percentile([1.0, 2.0], 1) == 1.0


def test_empty_run_empty_table():
    table = latency_table(TimingLog())
    assert table["by_operation"] == {}
    assert table["by_kind"]["write"]["count"] == 0


def test_tamper_suite_on_completed_run(ledger_run):
    report, _config = ledger_run
    block_dir = report["paths"]["block_dir"]
    cas_dir = report["paths"]["cas_dir"]
    result = run_tamper_suite(block_dir, cas_dir, trials=25, controls=25, seed=3, block_trials=3)
    assert result["detected"] == 25
    assert result["false_positives"] == 0
    assert all(t["detected"] and t["within_bound"] for t in result["chain_trials"])
    assert result["chain_clean_after_restore"]["ok"]


def test_cli_run_and_verify(tmp_path, capsys):
    from bladetrace.bench.cli import main

    out = str(tmp_path / "r.json")
    code = main(
        [
            "run", "--blades", "2", "--seed", "5", "--mode", "baseline",
            "--image-size", str(SMALL_IMAGE),
            "--workdir", str(tmp_path / "w"), "--out", out,
        ]
    )
    assert code == 0
    report = json.loads(open(out).read())
    assert report["completed_blades"] == 2
    printed = capsys.readouterr().out
    assert "2/2 blades" in printed


def test_cli_scenario_file(tmp_path, capsys):
    from bladetrace.bench.cli import main

    scenario = {
        "seed": 3,
        "duration_s": 6.0,
        "submissions": [[0.3 + i * 0.1, f"t{i}"] for i in range(8)],
        "crash_schedule": [[1.0, 2, "crash"], [3.0, 2, "recover"]],
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    out = tmp_path / "report.json"
    code = main(["scenario", "--file", str(path), "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["log_matching_ok"] and report["prefix_consistent"]
    assert len(report["delivered_tx_ids"]) == 8
    assert "log matching: True" in capsys.readouterr().out


def test_cli_ledger_tamper_and_verify_chain(tmp_path, capsys):
    from bladetrace.bench.cli import main

    workdir = str(tmp_path / "w")
    code = main(
        [
            "run", "--blades", "2", "--seed", "6", "--mode", "ledger",
            "--image-size", str(SMALL_IMAGE), "--workdir", workdir,
        ]
    )
    assert code == 0
    code = main(["tamper", "--trials", "5", "--controls", "5", "--workdir", workdir])
    assert code == 0
    assert "5/5 detected" in capsys.readouterr().out
    code = main(["verify-chain", "--workdir", workdir])
    assert code == 0
    assert '"ok": true' in capsys.readouterr().out
