import json
import subprocess
import sys

import pytest

from xychain.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "chain.json"
    p.write_text(json.dumps({"n_sites": 5, "couplings": "engineered", "offset": 2 ** 0.5}))
    return p


def test_couplings_example(capsys):
    code, out, _ = run(capsys, "couplings", "--engineered", "4")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "bond,label,J"
    assert lines[1] == "2,J_2,1.0"
    assert lines[2].startswith("3,J_3,0.70710678")


def test_couplings_json(capsys):
    code, out, _ = run(capsys, "couplings", "--engineered", "5", "--normalized", "--json")
    doc = json.loads(out)
    assert [r["label"] for r in doc["rows"]] == ["J_2", "J_3", "J_4"]


def test_spectrum(capsys, config):
    code, out, _ = run(capsys, "spectrum", str(config))
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# settings ")
    assert lines[1] == "mode,eigenvalue,alpha,qubit,role"
    assert len(lines) == 7


def test_malformed_config_names_field(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"n_sites": 4, "fields": [0, 1]}))
    code, out, err = run(capsys, "spectrum", str(p))
    assert code != 0 and out == ""
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["field"] == "fields"


def test_malformed_json_names_line(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"n_sites": 4,\n\n "couplings": [1,\n}')
    code, _, err = run(capsys, "spectrum", str(p))
    assert code != 0
    assert json.loads(err)["line"] == 4


def test_compile_then_evolve(capsys, config, tmp_path):
    circ = tmp_path / "c.txt"
    circ.write_text("XROT 1 pi/2\n")
    sched = tmp_path / "s.json"
    code, out, _ = run(capsys, "compile", str(config), str(circ), "--schedule-out", str(sched))
    assert code == 0 and "XROT 1" in out
    code, out, _ = run(capsys, "evolve", str(config), str(sched), "--tier", "sector", "--logical", "00")
    assert code == 0
    rows = [l.split(",") for l in out.splitlines()[2:]]
    assert len(rows) == 10
    assert sum(float(r[4]) for r in rows) == pytest.approx(1.0, abs=1e-9)


def test_circuit_parse_error(capsys, config, tmp_path):
    circ = tmp_path / "c.txt"
    circ.write_text("XROT 1 pi\nNOPE\n")
    code, _, err = run(capsys, "compile", str(config), str(circ))
    doc = json.loads(err)
    assert code != 0 and doc["error"] == "parse_error" and doc["line"] == 2


def test_evolve_bad_schedule(capsys, config, tmp_path):
    s = tmp_path / "s.json"
    s.write_text(json.dumps({"steps": [{"kind": "pulse", "target": "h2", "duration": 3}]}))
    code, _, err = run(capsys, "evolve", str(config), str(s))
    assert code != 0 and json.loads(err)["field"] == "tones"


def test_oracle_check(capsys):
    code, out, err = run(capsys, "oracle-check", "--N", "6", "--seed", "1")
    assert code == 0
    assert "max cross-tier deviation" in err
    assert out.splitlines()[1].startswith("N,seed")


def test_fig1_and_fit(capsys, tmp_path):
    csv = tmp_path / "f.csv"
    svg = tmp_path / "f.svg"
    code, _, _ = run(capsys, "fig1", "--N", "21", "--out", str(csv), "--plot", str(svg))
    assert code == 0
    header = csv.read_text().splitlines()[1].split(",")
    assert header[:6] == ["N", "B", "mode", "final_infidelity", "final_fidelity", "duration"]
    assert svg.read_text().lstrip().startswith("<?xml")
    code, out, _ = run(capsys, "fit", "--input", str(csv))
    assert code == 0
    slope = float(out.splitlines()[1].split(",")[1])
    assert 1.6 <= slope <= 2.2


def test_fig1_zero_B(capsys):
    code, _, err = run(capsys, "fig1", "--N", "21", "--Bgrid", "0.1,0")
    assert code != 0 and "positive" in json.loads(err)["message"]


def test_robustness_and_bound(capsys):
    code, out, _ = run(capsys, "robustness", "--detunings", "0")
    assert code == 0 and out.splitlines()[1] == "kind,value,measured,predicted,deviation"
    code, out, _ = run(capsys, "bound", "--N", "5")
    assert code == 0


def test_entry_point():
    r = subprocess.run([sys.executable, "-m", "xychain.cli", "couplings", "--engineered", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.splitlines()[1] == "2,J_2,1.0"
    r = subprocess.run([sys.executable, "-m", "xychain.cli", "nonsense"], capture_output=True, text=True)
    assert r.returncode == 2
