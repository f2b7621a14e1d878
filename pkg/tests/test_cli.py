import csv
import json
import math
import subprocess
import sys

import pytest

from dqcsim.benchgen import gen_tlim
from dqcsim.cli import ConfigError, load_config, main, parse_config, resolve_config_path
from dqcsim.engine import ideal_depth
from dqcsim.qasm import read_circuit


def small_config(tmp_path, **engine):
    data = json.loads(resolve_config_path("paper_32q.json").read_text())
    data["benchmark"]["suite"] = [
        {"name": "TLIM-8", "bench": "tlim", "n": 8, "steps": 2},
        {"name": "QAOA-r3-8", "bench": "qaoa", "n": 8, "degree": 3, "layers": 1, "seed": 1},
    ]
    data["partition"]["capacities"] = [4, 4]
    data["engine"].update({"seeds": 3, **engine})
    p = tmp_path / "small.json"
    p.write_text(json.dumps(data))
    return p


def test_presets_load():
    e32 = load_config("paper_32q.json")
    assert e32.capacities == (16, 16) and e32.ent.n_comm_pairs == 10 and len(e32.seeds) == 50
    assert [s.name for s in e32.suite] == ["TLIM-32", "QAOA-r4-32", "QAOA-r8-32", "QFT-32"]
    e64 = load_config("paper_64q.json")
    assert e64.capacities == (32, 32) and e64.ent.n_buffer_pairs == 20
    assert e64.noise.f_epr == 0.99 and e64.ent.p_succ_override == 0.4


def test_gen_partition_compile_simulate(tmp_path, capsys):
    circ, asg, var, res = (tmp_path / x for x in ("t.qasm", "t.asg", "v.json", "r.json"))
    assert main(["gen", "--bench", "tlim", "--n", "32", "--steps", "10", "-o", str(circ)]) == 0
    assert read_circuit(circ) == gen_tlim(32, 10)
    assert main(["partition", "--circ", str(circ), "--cap", "16,16", "-o", str(asg)]) == 0
    assert "remote gates: 10" in capsys.readouterr().out
    assert main(["compile", "--circ", str(circ), "--assign", str(asg), "--m", "4", "-o", str(var)]) == 0
    table = json.loads(var.read_text())
    assert table["m"] == 4 and len(table["segments"]) == 3
    rc = main(["simulate", "--circ", str(circ), "--assign", str(asg), "--design", "ideal", "-o", str(res)])
    assert rc == 0
    out = json.loads(res.read_text())
    assert out["depth"] == ideal_depth(gen_tlim(32, 10))
    assert res.with_suffix(".log").exists()


def test_simulate_from_config(tmp_path):
    cfg = small_config(tmp_path)
    res = tmp_path / "r.json"
    log = tmp_path / "events.log"
    rc = main(["simulate", "--config", str(cfg), "--bench", "QAOA-r3-8", "--design", "adapt_buf",
               "--seed", "2", "-o", str(res), "--log", str(log)])
    assert rc == 0
    out = json.loads(res.read_text())
    assert out["design"] == "adapt_buf" and out["seed"] == 2
    assert any(",segment," in line for line in log.read_text().splitlines())


def test_sweep_rows_and_reproducibility(tmp_path):
    cfg = small_config(tmp_path)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(cfg), "-o", str(a)]) == 0
    assert main(["sweep", "--config", str(cfg), "-o", str(b), "--workers", "2"]) == 0
    la, lb = a.read_text().splitlines(), b.read_text().splitlines()
    assert la[0].startswith("# generated") and la[1:] == lb[1:]
    rows = list(csv.DictReader(la[1:]))
    assert len(rows) == 6 * 2 * 3
    assert list(rows[0]) == ["design", "benchmark", "seed", "depth", "fidelity", "links_generated",
                             "links_consumed", "links_discarded", "links_blocked"]
    for r in rows:
        assert all(math.isfinite(float(r[k])) for k in ("depth", "fidelity"))
    summary = list(csv.DictReader((tmp_path / "a_summary.csv").read_text().splitlines()))
    ideal = [s for s in summary if s["design"] == "ideal"]
    assert all(float(s["depth_over_ideal"]) == 1.0 for s in ideal)


def test_sweep_respects_env_threads(tmp_path, monkeypatch):
    cfg = small_config(tmp_path, designs=["async_buf"])
    monkeypatch.setenv("DQC_THREADS", "2")
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfg), "--seeds", "4", "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2 + 2 * 4


def test_verify_output(capsys):
    assert main(["verify", "--n", "5", "--segments", "20", "--seed", "1"]) == 0
    assert "20/20 equivalent" in capsys.readouterr().out


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d.pop("noise"), "missing"),
    (lambda d: d.update(extra={}), "unexpected"),
    (lambda d: d["entnet"].update(p_s=0.9), "p_s"),
    (lambda d: d["engine"].update(designs=["warp"]), "unknown designs"),
    (lambda d: d["engine"].update(speed=3), "unknown keys"),
    (lambda d: d["benchmark"]["suite"].append({"bench": "grover", "n": 4}), "bench must be"),
    (lambda d: d["partition"].update(capacities=[4]), "two node sizes"),
    (lambda d: d["benchmark"]["suite"].append({"bench": "qft", "n": 40}), "qubits"),
])
def test_config_errors(mutate, needle):
    data = json.loads(resolve_config_path("paper_32q.json").read_text())
    mutate(data)
    with pytest.raises(ConfigError, match=needle):
        parse_config(data)


def test_cli_error_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert "invalid JSON" in capsys.readouterr().err
    assert main(["sweep", "--config", str(tmp_path / "missing.json")]) == 2
    q = tmp_path / "bad.qasm"
    q.write_text('OPENQASM 2.0;\nqreg q[2];\nccx q[0],q[1],q[1];\n')
    assert main(["partition", "--circ", str(q), "--cap", "1,1", "-o", str(tmp_path / "a")]) == 2
    assert "ccx" in capsys.readouterr().err
    assert main(["partition", "--circ", str(q), "--cap", "1", "-o", str(tmp_path / "a")]) == 2


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "dqcsim.cli", "verify", "--n", "3", "--segments", "5"],
                         capture_output=True, text=True, check=True)
    assert "5/5 equivalent" in out.stdout
