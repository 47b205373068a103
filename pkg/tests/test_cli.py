import csv
import json
import subprocess
import sys

import pytest

from hyperfund.cli import main, parse_profile
from hyperfund.errors import ConfigError


def run(*args):
    proc = subprocess.run([sys.executable, "-m", "hyperfund", *args], capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


def table(text):
    return list(csv.DictReader(l for l in text.splitlines() if not l.startswith("#")))


def test_identities_desitter_kg():
    code, out, _ = run("identities", "--family", "desitter-kg", "--mass", "1", "--t-max", "3")
    assert code == 0
    rows = table(out)
    assert len(rows) == 55
    assert max(float(r["residual"]) for r in rows) <= 1e-6


def test_solve_edes(tmp_path):
    out = tmp_path / "u.csv"
    code = main(["solve", "--family", "edes", "--source", "const1", "--x-min", "0", "--x-max", "1", "--nx", "2",
                 "--t-min", "0.5", "--t-max", "1", "--nt", "2", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith("# schema: hyperfund-solve/1\n")
    rows = table(text)
    u = {(float(r["x"]), float(r["t"])): float(r["u"]) for r in rows}
    assert abs(u[(0.0, 1.0)] - 0.5) < 1e-9


def test_bad_family():
    code, _, err = run("solve", "--family", "minkowski")
    assert code == 2
    assert "family" in json.loads(err)["message"]


def test_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"family": "tricomi", "k": 2.0, "source": "t",
                               "grid": {"nx": 1, "nt": 1, "t_min": 1.0, "t_max": 1.0},
                               "output": {"format": "json"}}))
    code, out, _ = run("solve", "--config", str(cfg))
    assert code == 0
    data = json.loads(out)
    assert abs(data["rows"][0]["u"] - 1.0 / 6.0) < 1e-9
    assert data["metadata"]["config"]["quad"]["rel_tol"] == 1e-10


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"family": "desitter",\n "grid": {"nx": 2,}}')
    code, _, err = run("solve", "--config", str(bad))
    assert code == 2 and "line 2" in err
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"grid": {"nz": 3}}')
    code, _, err = run("solve", "--config", str(unknown))
    assert code == 2 and "nz" in err
    code, _, err = run("solve", "--nx", "0")
    assert code == 2 and "grid.nx" in err


def test_reproducible(tmp_path):
    args = ["tail", "--phi0", "heaviside", "--x-min", "0", "--x-max", "0.5", "--nx", "3", "--t-min", "1",
            "--t-max", "2", "--nt", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "2"]) == 0
    # thread count is not an input to the numbers, only to scheduling
    strip = lambda p: [l for l in p.read_text().splitlines() if not l.startswith("# metadata")]
    assert strip(a) == strip(b)
    first = a.read_bytes()
    assert main(args + ["--out", str(a)]) == 0
    assert a.read_bytes() == first


def test_residual_command():
    code, out, _ = run("residual", "--family", "desitter", "--source", "gaussian-sin", "--x-min", "0.2",
                       "--x-max", "0.2", "--nx", "1", "--t-min", "1", "--t-max", "1", "--nt", "1")
    assert code == 0
    rows = table(out)
    assert float(rows[2]["factor"]) > 3.5


def test_failed_verdict_exit_code():
    # tolerance below the achievable residual
    code, _, _ = run("identities", "--family", "tricomi", "--k", "1", "--t-max", "1", "--n-identity", "2",
                     "--identity-tol", "1e-30")
    assert code == 1


def test_numerical_error_exit_code():
    code, _, err = run("solve", "--family", "tricomi", "--t-min", "-1", "--t-max", "1")
    assert code == 1
    assert json.loads(err)["error"] == "DomainError"


def test_tlin_command():
    code, out, _ = run("tlin", "--a", "0.75", "--C0", "1", "--C1", "0", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][0]["verdict"] == "pass"


def test_profile_parser():
    assert parse_profile("power:0.6:2").params == {"exponent": 0.6, "coefficient": 2.0}
    assert parse_profile("gaussian:0:0.5").params["width"] == 0.5
    with pytest.raises(ConfigError):
        parse_profile("power:1.5")
    with pytest.raises(ConfigError):
        parse_profile("triangle")
