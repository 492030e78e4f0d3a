from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from lagless.cli import run

FIX1 = Path(__file__).parent / "fixtures" / "fix1"
TREES = Path(__file__).parent / "fixtures" / "trees"
SNAP = str(FIX1 / "snapshot.json")
MAN = str(FIX1 / "manifest.json")


def test_plan_fix1(tmp_path, capsys) -> None:
    out, report = tmp_path / "plan.json", tmp_path / "report.json"
    assert run(["plan", "--snapshot", SNAP, "--manifest", MAN, "--out", str(out), "--report", str(report)]) == 0
    plan = json.loads(out.read_text())["modules"][0]
    assert plan["perNode"]["g:a"]["selected"] == "1.1.0"
    assert plan["perNode"]["g:b"]["selected"] == "1.0.0"
    summary = json.loads(report.read_text())
    assert "reduced" in json.dumps(summary)


def test_plan_to_stdout_with_table(capsys) -> None:
    assert run(["plan", "--snapshot", SNAP, "--manifest", MAN, "--mode", "naive", "--format", "table"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["modules"][0]["perNode"]["g:a"]["selected"] == "2.0.0"
    assert "Major" in captured.err and "total reduced" in captured.err


def test_report(capsys) -> None:
    assert run(["report", "--snapshot", SNAP, "--manifest", MAN]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "3" in json.dumps(doc)
    assert run(["report", "--snapshot", SNAP, "--manifest", MAN, "--format", "table"]) == 0
    assert "Time lag" in capsys.readouterr().out


def test_verify_round_trip(tmp_path, capsys) -> None:
    for mode in ("full", "naive", "compat-only", "pruning-only"):
        plan = tmp_path / f"{mode}.json"
        assert run(["plan", "--snapshot", SNAP, "--manifest", MAN, "--mode", mode, "--out", str(plan)]) == 0
        assert run(["verify", "--snapshot", SNAP, "--manifest", MAN, "--plan", str(plan)]) == 0
    assert "oracle checked" in capsys.readouterr().out


@pytest.mark.parametrize(
    "field, value",
    [("selected", "2.0.0"), ("selected", "0.9.0")],
)
def test_verify_rejects_corrupted_plan(tmp_path, capsys, field: str, value: str) -> None:
    plan = tmp_path / "plan.json"
    run(["plan", "--snapshot", SNAP, "--manifest", MAN, "--out", str(plan)])
    doc = json.loads(plan.read_text())
    doc["modules"][0]["perNode"]["g:a"][field] = value
    plan.write_text(json.dumps(doc))
    assert run(["verify", "--snapshot", SNAP, "--manifest", MAN, "--plan", str(plan)]) == 2
    assert "invariant violated" in capsys.readouterr().err


def test_verify_detects_breakage_without_oracle(tmp_path) -> None:
    plan = tmp_path / "plan.json"
    run(["plan", "--snapshot", SNAP, "--manifest", MAN, "--mode", "naive", "--out", str(plan)])
    doc = json.loads(plan.read_text())
    doc["modules"][0]["mode"] = "full"  # a naive plan passed off as a full one
    plan.write_text(json.dumps(doc))
    assert run(["verify", "--snapshot", SNAP, "--manifest", MAN, "--plan", str(plan), "--oracle", "never"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["plan", "--snapshot", "/nonexistent.json", "--manifest", MAN],
        ["plan", "--snapshot", SNAP],
        ["plan", "--snapshot", SNAP, "--manifest", MAN, "--mode", "reckless"],
        ["frobnicate"],
        ["gen", "--out", "x", "--params", "/nonexistent.json"],
        ["ingest-tree", "--tree", "/nonexistent.txt"],
    ],
)
def test_usage_and_load_errors_exit_1(argv, capsys) -> None:
    assert run(argv) == 1


def test_bad_tree_exits_1(tmp_path, capsys) -> None:
    bad = tmp_path / "t.txt"
    bad.write_text("g:root:jar:1.0\n+- g:a:1.0\n")
    assert run(["ingest-tree", "--tree", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_ingest_tree(tmp_path) -> None:
    out = tmp_path / "g.json"
    assert run(["ingest-tree", "--tree", str(TREES / "conflict.txt"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert ["org.z:log", "org.x:core"] in doc["omittedEdges"]


def test_gen_and_depth_study(tmp_path, capsys) -> None:
    params = tmp_path / "p.json"
    params.write_text(json.dumps({"artifactCount": 10, "chain": True, "maxDepsPerVersion": 1}))
    assert run(["gen", "--seed", "4", "--params", str(params), "--out", str(tmp_path / "c")]) == 0
    assert json.loads((tmp_path / "c" / "params.json").read_text())["seed"] == 4
    snap = str(tmp_path / "c" / "snapshot.json")
    assert run(["depth-study", "--snapshot", snap, "--manifests", str(tmp_path / "c"), "--strategy", "all"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "depth,strategy,brokenClients,clientImpactingApis"
    assert run(["depth-study", "--snapshot", snap, "--manifests", str(tmp_path / "c" / "manifest.json"),
                "--strategy", "MMP", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)


def test_outputs_are_byte_identical(tmp_path) -> None:
    run(["gen", "--seed", "11", "--out", str(tmp_path / "c")])
    snap, man = str(tmp_path / "c" / "snapshot.json"), str(tmp_path / "c" / "manifest.json")
    for i in (1, 2):
        run(["plan", "--snapshot", snap, "--manifest", man, "--out", str(tmp_path / f"plan{i}.json")])
        run(["depth-study", "--snapshot", snap, "--manifests", man, "--strategy", "all", "--out", str(tmp_path / f"d{i}.csv")])
    assert (tmp_path / "plan1.json").read_bytes() == (tmp_path / "plan2.json").read_bytes()
    assert (tmp_path / "d1.csv").read_bytes() == (tmp_path / "d2.csv").read_bytes()


def test_console_entry_and_log_env() -> None:
    env = dict(os.environ, LAGLESS_LOG="DEBUG")
    proc = subprocess.run(
        [sys.executable, "-m", "lagless.cli", "plan", "--snapshot", SNAP, "--manifest", MAN],
        capture_output=True, text=True, env=env, check=False,
    )
    assert proc.returncode == 0
    assert "DEBUG" in proc.stderr
    assert json.loads(proc.stdout)["modules"][0]["module"] == "app"
