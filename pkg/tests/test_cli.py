import json
import math
import subprocess
import sys

import pytest

from dismap import cli
from dismap.hardware import BUNDLED_DIR
from dismap.qasm import parse_qasm
from dismap.verifier import Violation

CFG = str(BUNDLED_DIR / "2x7.json")
GHZ = """OPENQASM 2.0;
include "qelib1.inc";
qreg q[5];
creg c[5];
h q[0];
cx q[0],q[1];
cx q[1],q[2];
cx q[2],q[3];
cx q[3],q[4];
ccx q[0],q[2],q[4];
measure q -> c;
"""


@pytest.fixture
def ghz(tmp_path):
    path = tmp_path / "ghz.qasm"
    path.write_text(GHZ)
    return str(path)


def run_json(tmp_path, *argv, name="r.json"):
    out = tmp_path / name
    code = cli.run(["--config", CFG, "--report", str(out), "--no-timing", *argv])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_success_and_report_totals(tmp_path, ghz, capsys):
    code, rep = run_json(tmp_path, "--circuit", ghz, "--verify")
    assert code == 0
    assert "SO = " in capsys.readouterr().out
    t = rep["totals"]
    assert sum(w["swaps"] for w in rep["workers"]) == t["so"]
    assert sum(w["epr_uses"] for w in rep["workers"]) == t["epr_uses"]
    assert math.prod(t["fidelity_factors"].values()) == pytest.approx(t["fidelity"], abs=1e-12)
    assert len(rep["routing"]["swap_tags"]) == t["so"]
    assert rep["equivalent"] is True and rep["violations"] == []
    assert rep["schema"] == 1 and "timing" not in rep
    assert sorted(q for w in rep["workers"] for q in w["logical_qubits"]) == list(range(5))
    assert (tmp_path / "r.txt").read_text().startswith("dismap: ghz")


def test_reports_are_byte_identical_across_threads(tmp_path, ghz):
    cli.run(["--config", CFG, "--circuit", ghz, "--no-timing", "--threads", "1",
             "--report", str(tmp_path / "a.json")])
    cli.run(["--config", CFG, "--circuit", ghz, "--no-timing", "--threads", "8",
             "--report", str(tmp_path / "b.json")])
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_timing_present_by_default(tmp_path, ghz):
    out = tmp_path / "t.json"
    assert cli.run(["--config", CFG, "--circuit", ghz, "--report", str(out)]) == 0
    assert set(json.loads(out.read_text())["timing"]) == {"load", "parse_lower", "optimize",
                                                          "verify"}


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DISMAP_SEED", "5")
    _, env = run_json(tmp_path, "--bench", "qaoa", "--qubits", "8", name="e.json")
    _, flag = run_json(tmp_path, "--bench", "qaoa", "--qubits", "8", "--seed", "5", name="f.json")
    monkeypatch.delenv("DISMAP_SEED")
    _, zero = run_json(tmp_path, "--bench", "qaoa", "--qubits", "8", name="z.json")
    assert env == flag
    assert env["routing"]["seed"] == 5 and zero["routing"]["seed"] == 0


def test_qasm_and_partition_outputs(tmp_path, ghz):
    part = tmp_path / "part.json"
    code, rep = run_json(tmp_path, "--circuit", ghz, "--emit-partition", str(part))
    assert code == 0
    assert json.loads(part.read_text()) == rep["partition"]
    qdir = tmp_path / "r_qasm"
    files = sorted(p.name for p in qdir.iterdir())
    assert "global.qasm" in files
    parse_qasm((qdir / "global.qasm").read_text())
    for w in rep["workers"]:
        text = (qdir / f"worker{w['worker_id']}.qasm").read_text()
        if "// epr" not in text:
            parse_qasm(text)


def test_baseline_flag_and_helper(tmp_path, ghz):
    code, rep = run_json(tmp_path, "--circuit", ghz, "--baseline")
    assert code == 0 and rep["label"] == "baseline"
    direct = cli.baseline_run(["--config", CFG, "--circuit", ghz])
    assert direct["totals"]["so"] == rep["totals"]["so"]


def test_overrides_reach_the_config(tmp_path, ghz):
    _, rep = run_json(tmp_path, "--circuit", ghz, "--sr", "0.5", "--k", "1", "--max-links", "1")
    assert rep["config"]["default_sr"] == 0.5
    assert len(rep["evaluations"]) == 1
    assert all(l["sr"] == 0.5 for l in rep["chosen"]["links"])


# ---------------------------------------------------------------- exit codes

def test_bad_config_exits_1(tmp_path, ghz, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"default_sr": 2.0, "max_links": 1, "workers": []}))
    assert cli.run(["--config", str(bad), "--circuit", ghz]) == 1
    assert "default_sr" in capsys.readouterr().err


def test_parse_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.qasm"
    bad.write_text("OPENQASM 2.0; qreg q[2]; foo q[0];")
    assert cli.run(["--config", CFG, "--circuit", str(bad)]) == 2
    assert "unsupported gate" in capsys.readouterr().err
    assert cli.run(["--config", CFG, "--bench", "bv"]) == 2
    assert cli.run(["--config", CFG, "--bench", "adder", "--qubits", "3"]) == 2


def test_too_large_exits_3(capsys):
    assert cli.run(["--config", CFG, "--bench", "hwea", "--qubits", "15"]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_violation_exits_4(ghz, monkeypatch, capsys):
    monkeypatch.setattr(cli, "check_constraints",
                        lambda plan: [Violation("OverheadMismatch", "forced", None)])
    assert cli.run(["--config", CFG, "--circuit", ghz]) == 4
    assert "OverheadMismatch" in capsys.readouterr().out


def test_console_entry_point(ghz):
    proc = subprocess.run([sys.executable, "-m", "dismap", "--config", CFG, "--circuit", ghz,
                           "--no-timing"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "SO = " in proc.stdout


def test_bundled_config_by_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.run(["--config", "2x7.json", "--bench", "bv", "--qubits", "5", "--no-timing"]) == 0
    assert cli.run(["--config", "2x7", "--bench", "bv", "--qubits", "5", "--no-timing"]) == 0
    assert cli.run(["--config", "nope.json", "--bench", "bv", "--qubits", "5"]) == 1
