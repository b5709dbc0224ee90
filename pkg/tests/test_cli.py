import io
import json
import subprocess
import sys

import pytest

from oscsum.cli import main, parse_poly
from oscsum.config import load_config, parse_config_text
from oscsum.errors import DomainError


def run(argv):
    buf = io.StringIO()
    code = main(argv, stdout=buf)
    return code, buf.getvalue()


def test_coeffnorm_example():
    code, out = run(["coeffnorm", "--poly", "{(2):0.5}", "--R", "4"])
    doc = json.loads(out)
    assert code == 0 and doc["result"]["s0"] == 1 and doc["result"]["witness_Q"] == 2
    assert doc["provenance"]["seed"] == 0 and "version" in doc["provenance"]


def test_gauss_example():
    code, out = run(["gauss", "--Q", "3", "--A", "1", "--B", "0", "--d", "2", "--D", "1"])
    assert code == 0 and abs(json.loads(out)["result"]["abs"] - 3**-0.5) < 1e-12


def test_invtest_example():
    code, out = run(["invtest", "--delta", "0.1", "--Cmax", "6", "--poly", "{(2):3/7}", "--N", "10000"])
    res = json.loads(out)["result"]
    assert code == 0 and res["kind"] == "certificate" and res["Q"] == 7


def test_csv_table():
    code, out = run(["gauss", "--Q", "3", "--A", "1", "--table", "--format", "csv"])
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# oscsum-csv/1") and lines[1] == "Q,A,B,re,im"
    assert len(lines) == 2 + 3


def test_exit_codes(tmp_path):
    assert run(["coeffnorm", "--poly", "{(2):0.5", "--R", "4"])[0] == 2
    assert run(["coeffnorm", "--poly", "{(2):0.5}"])[0] == 2
    assert run(["coeffnorm", "--poly", "{(2):0.4142135623730951}", "--R", "1e9"])[0] == 3
    assert run(["invtest", "--delta", "0.1", "--poly", "{(2):0.6180339887}", "--N", "10000"])[0] == 4
    assert run(["gauss", "--help"])[0] == 0
    assert run([])[0] == 2
    assert run(["coeffnorm", "--poly", "@" + str(tmp_path / "missing"), "--R", "4"])[0] == 2


def test_parse_poly_forms(tmp_path):
    P = parse_poly("{(2,0): 1/3, (1,1): -0.25}")
    assert P.D == 2 and len(P.terms()) == 2
    f = tmp_path / "p.json"
    f.write_text(P.to_json())
    assert parse_poly("@" + str(f)).coeffs == P.coeffs
    with pytest.raises(DomainError):
        parse_poly("{(2): __import__('os')}")
    with pytest.raises(DomainError):
        parse_poly("{(2): 1/0}")


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 5  # comment\nA0 = 2\ncalibration.vdc = 3\n")
    c = load_config(str(cfg))
    assert c.seed == 5 and c.A0 == 2.0 and c.calibration["vdc"] == 3.0
    assert load_config(str(cfg), seed=9).seed == 9
    with pytest.raises(DomainError):
        parse_config_text("bogus = 1")
    with pytest.raises(DomainError):
        parse_config_text("no equals sign")


def test_out_file(tmp_path):
    out = tmp_path / "o.json"
    code, text = run(["vdc", "--poly", "{(1):1/2}", "--L", "50", "--H", "5", "--out", str(out)])
    assert code == 0 and text == "" and json.loads(out.read_text())["result"]["lhs"] == 0.0


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "oscsum", "coeffnorm", "--poly", "{(2):0.5}", "--R", "4"],
                       capture_output=True, text=True, timeout=120)
    assert p.returncode == 0 and json.loads(p.stdout)["result"]["s0"] == 1
