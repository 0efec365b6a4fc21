import json
import subprocess
import sys

import pytest

from heterotic import cli


def run_cli(capsys, *argv):
    status = cli.main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_check_hopf_passes(capsys):
    status, out, _ = run_cli(capsys, "check", "--model", "hopf", "--w", "1", "--a", "1", "--system", "twisted-hs")
    assert status == 0
    report = json.loads(out)
    assert report["pass"] is True
    assert report["system"] == "twisted-hs"
    assert max(report["residuals"].values()) <= 1e-10


def test_check_tilted_hopf_fails(capsys):
    status, out, _ = run_cli(capsys, "check", "--w", "1+0.3j")
    assert status == 1
    assert json.loads(out)["residuals"]["psi_lee"] > 1e-6


def test_hs_on_hopf_reports_error(capsys):
    status, out, _ = run_cli(capsys, "check", "--system", "hs")
    assert status == 1
    assert "not closed" in json.loads(out)["error"]


def test_appendix_needs_n3(capsys):
    status, _, err = run_cli(capsys, "check", "--system", "appendix")
    assert status == 2
    assert "n >= 3" in err
    status, out, _ = run_cli(capsys, "check", "--system", "appendix", "--model", "torus6")
    assert status == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--model", "k3"],
        ["check", "--system", "heterotic"],
        ["functional", "--t", "1:2"],
        ["check", "--w", "one"],
        ["frobnicate"],
        ["check", "--quad-order", "1"],
        ["linearize", "--model", "h3", "--bundle", "su2"],
    ],
)
def test_usage_errors(capsys, argv):
    status, out, _ = run_cli(capsys, *argv)
    assert status == 2
    assert out == ""


def test_parse_helpers():
    assert cli.parse_grid("0.5") == [0.5]
    assert cli.parse_grid("0:1:3") == [0.0, 0.5, 1.0]
    assert cli.parse_complex("1+0.5i") == 1 + 0.5j
    with pytest.raises(cli.UsageError):
        cli.parse_grid("0:1:0")


def test_functional_csv(capsys, tmp_path):
    csv_path = tmp_path / "m.csv"
    json_path = tmp_path / "m.json"
    status, out, _ = run_cli(capsys, "functional", "--t", "0.1:10:100", "--csv", str(csv_path), "--json", str(json_path))
    assert status == 0
    report = json.loads(out)
    assert report["concave"] and report["increasing"]
    assert report["quoted_ratio"] == pytest.approx(2**0.5)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "t,M,dM,d2M,residual"
    assert len(lines) == 101
    assert json.loads(json_path.read_text()) == report


def test_linearize_report(capsys):
    status, out, _ = run_cli(capsys, "linearize", "--model", "torus4")
    report = json.loads(out)
    assert status == 0
    assert report["index"]["index"] == 0
    assert report["checks"]["jacobian"] <= 1e-6


def test_linearize_hopf_skips_duality(capsys):
    status, out, _ = run_cli(capsys, "linearize", "--model", "hopf")
    report = json.loads(out)
    assert status == 0
    assert report["checks"]["duality"] is None


def test_cohomology_report(capsys):
    status, out, _ = run_cli(capsys, "cohomology", "--model", "hopf")
    groups = json.loads(out)["groups"]
    assert status == 0
    assert groups["aeppli_11"] == 1
    assert groups["dolbeault"]["2,1"] == 1
    assert groups["partial_map"]["isomorphism"] is True


def test_symbol_scan(capsys):
    status, out, _ = run_cli(capsys, "symbol", "--model", "torus4", "--trials", "200", "--seed", "42")
    assert status == 0
    assert json.loads(out)["trials"] == 200


def test_catalog(capsys):
    status, out, _ = run_cli(capsys, "catalog")
    assert status == 0
    assert set(json.loads(out)["models"]) == {"hopf", "torus4", "torus6", "su2_r3", "h3"}


@pytest.mark.parametrize(
    "argv",
    [
        ["variation", "--model", "hopf", "--bundle", "su2", "--seed", "3", "--trials", "2"],
        ["path", "--model", "hopf", "--bundle", "su2", "--seed", "5", "--t", "0:0.5:9"],
    ],
)
def test_reports_are_deterministic(capsys, argv):
    first = run_cli(capsys, *argv)
    second = run_cli(capsys, *argv)
    assert first[0] == 0
    assert first[1] == second[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heterotic", "catalog"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"] is True
