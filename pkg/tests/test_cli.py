import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from conelip import io
from conelip.cli import main
from conelip.order_core.lattice import ZERO_TOL_KEYS

FIX = Path(__file__).resolve().parents[1] / "fixtures"


def run_cli(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


@pytest.mark.parametrize(
    "command,fixture,expected",
    [
        ("certify", "square_1d", 0),
        ("certify", "ball_supnorm", 0),
        ("certify", "o_lipschitz", 0),
        ("verify", "verify_basic", 0),
        ("certify", "ball_refused", 1),
        ("certify", "broken", 2),
    ],
)
def test_exit_codes(capsys, command, fixture, expected):
    status, out, _ = run_cli(capsys, command, "--input", str(FIX / f"{fixture}.json"), "--pairs", "2000")
    assert status == expected
    io.loads(out)


def test_broken_input_location(capsys):
    status, out, err = run_cli(capsys, "certify", "--input", str(FIX / "broken.json"))
    assert status == 2
    report = io.loads(out)
    assert report["status"] == "parse-error"
    assert report["location"].endswith("broken.json:2:18")
    assert "broken.json:2:18" in err


def test_missing_field_is_input_error(capsys):
    status, out, _ = run_cli(capsys, "certify", "--input", str(FIX / "verify_basic.json"))
    assert status == 2
    assert "formula" in io.loads(out)["error"]


def test_certified_report(capsys):
    status, out, _ = run_cli(capsys, "certify", "--input", str(FIX / "ball_supnorm.json"), "--pairs", "2000")
    cert = io.loads(out)["certificate"]
    assert status == 0 and cert["formula"] == "ball-2beta" and cert["constant"] == 4.0


def test_deterministic_and_output_file(capsys, tmp_path):
    args = ["certify", "--input", str(FIX / "ball_supnorm.json"), "--pairs", "2000", "--seed", "7"]
    _, first, _ = run_cli(capsys, *args)
    _, second, _ = run_cli(capsys, *args)
    assert first == second
    target = tmp_path / "report.json"
    run_cli(capsys, *args, "--output", str(target))
    assert target.read_text() == first


def test_seed_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("CONELIP_SEED", "11")
    _, out, _ = run_cli(capsys, "lattice-check", "--samples", "500")
    assert io.loads(out)["seed"] == 11
    _, out, _ = run_cli(capsys, "lattice-check", "--samples", "500", "--seed", "3")
    assert io.loads(out)["seed"] == 3


def test_lattice_check(capsys):
    status, out, _ = run_cli(capsys, "lattice-check", "--samples", "2000", "--dim", "5")
    report = io.loads(out)
    assert status == 0 and report["status"] == "pass"
    ids = report["identities"]
    assert all(v["pass"] for v in ids.values())
    assert all(ids[k]["tolerance"] == 0.0 for k in ZERO_TOL_KEYS if k in ids)


def test_pathology_polynomial(capsys):
    status, out, _ = run_cli(capsys, "pathology", "--polynomial", "--n", "100")
    row = io.loads(out)["polynomial"]["rows"][0]
    assert status == 0
    assert row["norm_Pn"] == 0.1 and row["f_Pn"] == 10.0 and row["ratio"] == 100.0


def test_pathology_csv(capsys, tmp_path):
    status, _, _ = run_cli(capsys, "pathology", "--step1", "--polynomial", "--n", "4", "--csv-dir", str(tmp_path))
    assert status == 0
    assert sorted(p.suffix for p in tmp_path.iterdir()) == [".csv", ".csv"]


def test_console_entry_point():
    env = dict(os.environ, CONELIP_BACKEND="numpy")
    proc = subprocess.run(
        [sys.executable, "-m", "conelip.cli", "certify", "--input", str(FIX / "square_1d.json")],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "certified"
