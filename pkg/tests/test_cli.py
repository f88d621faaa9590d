import json
import subprocess
import sys

import pytest

from busnoise.cli import main


def test_layout_json(capsys):
    assert main(["layout", "-d", "3", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data


def test_circuit_sample_decode_pipeline(tmp_path, capsys):
    circ, shots = tmp_path / "c.txt", tmp_path / "s.b8"
    assert main(["build-circuit", "-d", "3", "--cer", "0.005", "--ber", "0.005", "-o", str(circ)]) == 0
    assert main(["sample", "--circuit", str(circ), "--shots", "500", "--seed", "2", "-o", str(shots)]) == 0
    capsys.readouterr()
    assert main(["decode", "--circuit", str(circ), "--shots", str(shots)]) == 0
    assert "500" in capsys.readouterr().out


def test_estimate_physics(capsys):
    args = ["estimate-physics", "--T1", "1s", "--T2", "20us", "--lc", "0.1um", "--Ls", "10um",
            "--velocity", "2m/s", "--json"]
    assert main(args) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["p_deph"] == pytest.approx(1.25e-3)


def test_sweep_and_reports(tmp_path, capsys):
    out = tmp_path / "res"
    base = ["--distances", "3,5,7", "--cer", "0.001", "--ber", "0.002,0.02,0.2", "--shots", "2000",
            "--solver", "native", "-o", str(out)]
    assert main(["sweep"] + base) == 0
    assert (out / "results.csv").exists()
    assert main(["threshold", "--no-run"] + base) == 0
    assert main(["teraquop", "--no-run"] + base) in (0, 2)
    assert main(["sweep", "--dump-config"] + base) == 0
    assert "distances = [3, 5, 7]" in capsys.readouterr().out


def test_verify_single_suite():
    assert main(["verify", "geometry"]) == 0


@pytest.mark.parametrize("argv,code", [
    (["frobnicate"], 1),
    (["layout", "-d", "4"], 2),
    (["sweep", "--config", "/nonexistent.toml"], 1),
    (["estimate-physics", "--T1", "3furlongs"], 1),
    (["estimate-physics", "--T1", "0", "--T2", "1", "--lc", "1", "--Ls", "1", "--velocity", "1"], 2),
    (["verify", "nosuchsuite"], 1),
])
def test_exit_codes(argv, code):
    assert _run(argv) == code


def _run(argv):
    try:
        return main(argv)
    except SystemExit as e:
        return e.code


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "busnoise.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "busnoise" in r.stdout
