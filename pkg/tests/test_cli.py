import csv
import json
import subprocess
import sys

import pytest

from folcoh import cli, report
from folcoh.report import ConfigError, RunConfig


def run(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def test_list(capsys):
    status, out, _ = run(["list"], capsys)
    assert status == 0
    names = [c["name"] for c in json.loads(out)]
    assert "hopf" in names and "linear-flow-t3+perturbed" in names


def test_hopf_betti_report_shape(capsys):
    status, out, err = run(["run", "--case", "hopf", "--jmax", "2"], capsys)
    assert status == 0
    rep = json.loads(out)
    for key in ("case", "flags", "resolution", "thresholds", "betti", "identities", "properties", "discrepancies"):
        assert key in rep
    assert rep["betti"]["h_a_rank"] == [0, 1, 0, 1]
    assert rep["betti"]["h_a_harmonic"] == [0, 1, 0, 1]
    assert "hopf: exit 0" in err


def test_identity_rows_have_name_residual_class(capsys):
    status, out, _ = run(["run", "--case", "hopf", "--jmax", "1", "--suite", "identities", "--trials", "5"], capsys)
    assert status == 0
    rows = json.loads(out)["identities"]
    assert rows and all({"name", "residual", "class"} <= set(r) for r in rows)


def test_properties_report_reasons(capsys):
    status, out, _ = run(["run", "--case", "hopf", "--jmax", "2", "--suite", "properties"], capsys)
    assert status == 0
    for p in json.loads(out)["properties"]:
        assert p["status"] in ("pass", "fail", "skipped")
        if p["status"] == "skipped":
            assert p["reason"]


def test_determinism_and_spectra_csv(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        status, _, _ = run(["run", "--case", "carriere", "--n-fiber", "6", "--nt", "4", "--seed", "7", "--out", str(path)], capsys)
        assert status == 3
        outs.append(path.read_text())
    assert report.without_timestamp(outs[0]) == report.without_timestamp(outs[1])
    strip = [[ln for ln in o.splitlines() if '"timestamp"' not in ln] for o in outs]
    assert strip[0] == strip[1]
    assert {d["table"] for d in json.loads(outs[0])["discrepancies"]} == {"h", "h_a"}
    with open(tmp_path / "r0.spectra.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["degree", "index", "eigenvalue"]
    assert len(rows) > 1 and all(float(r[2]) >= -1e-10 for r in rows[1:])


def test_ill_conditioned_kernel_exits_two(capsys):
    status, out, _ = run(["run", "--case", "carriere", "--n-fiber", "3", "--nt", "4", "--tol", "0.1"], capsys)
    assert status == 2
    rep = json.loads(out)
    assert any("ill_conditioned" in e.get("kind", "") for e in rep["errors"])


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--case", "nope"],
        ["run", "--case", "hopf", "--nt", "4"],
        ["run", "--case", "carriere", "--jmax", "2"],
        ["run", "--case", "hopf", "--jmax", "0.5"],
        ["run", "--case", "carriere", "--tol", "2"],
        ["run", "--case", "carriere", "--trials", "0"],
    ],
)
def test_bad_configuration_exits_two(argv, capsys):
    status, out, err = run(argv, capsys)
    assert status == 2
    assert out == ""
    assert err.startswith("folcoh:")


def test_config_validation_directly():
    with pytest.raises(ConfigError):
        RunConfig(case="hopf", resolution={"n": 4}).validate()
    with pytest.raises(ConfigError):
        RunConfig(case="carriere", resolution={"n": 4.5}).validate()
    RunConfig(case="carriere", resolution={"n": 4, "nt": 4}).validate()


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "folcoh.cli", "list"], capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)
