import csv
import io
import json
from pathlib import Path

import pytest

from normapprox.cli import main

JOBS = Path(__file__).resolve().parent.parent / "jobs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dual_golden(capsys):
    code, out, _ = run(capsys, "dual", "--poly", "-1,-1,1")
    assert code == 0
    data = json.loads(out)
    assert data["gram_det"] == {"num": "5", "den": "1"}
    assert data["dual_basis"][0] == [{"num": "3", "den": "5"}, {"num": "-1", "den": "5"}]


def test_ring_cbrt2(capsys):
    code, out, _ = run(capsys, "ring", "--poly", "-2,0,0,1")
    assert code == 0
    data = json.loads(out)
    assert data["index"] == 1 and data["full_lattice"]


def test_ring_non_maximal(capsys):
    code, out, _ = run(capsys, "ring", "--poly", "-5,0,1", "--basis", "1;0,2")
    assert code == 0
    assert json.loads(out)["elements"][1] == [{"num": "0", "den": "1"}, {"num": "2", "den": "1"}]


def test_field_and_units(capsys):
    code, out, _ = run(capsys, "field", "--poly", "21,-19,0,1", "--root", "smallest-positive")
    assert code == 0
    assert json.loads(out)["signature"] == [3, 0]
    code, out, _ = run(capsys, "units", "--poly", "-2,0,0,1")
    data = json.loads(out)
    assert data["certified"] and data["certification_cap"] == 20
    assert data["units"][0] == [{"num": "1", "den": "1"}] * 3


def test_assume_units(capsys):
    code, out, _ = run(capsys, "units", "--poly", "-2,0,0,1", "--assume-units", "1,1,1")
    assert code == 0
    assert json.loads(out)["certified"] is False
    code, _, err = run(capsys, "units", "--poly", "-2,0,0,1", "--assume-units", "1,1")
    assert code == 2 and "norm" in err


def test_malformed_poly(capsys):
    code, _, err = run(capsys, "dual", "--poly", "1,x,2")
    assert code == 2
    assert "error" in err
    code, _, _ = run(capsys, "dual")
    assert code == 2
    code, _, _ = run(capsys, "dual", "--poly", "-4,0,1")
    assert code == 2


def test_approx_verify(capsys):
    code, out, _ = run(capsys, "approx", "--poly", "-2,0,0,1", "--C", "3", "--qmax", "20000",
                       "--verify")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and set(rows[0]) == {"q", "p1", "p2", "v1", "v2", "gamma", "norm_level",
                                     "sign_class", "source", "err"}
    assert {r["source"] for r in rows} == {"algebraic"}


def test_scan_empty(capsys):
    code, out, _ = run(capsys, "scan", "--poly", "-1,-1,1", "--C", "0")
    assert code == 0
    assert out == "q,p1,v1,gamma,norm_level,sign_class,source,err\n"


def test_scan_general_eta(capsys):
    code, out, _ = run(capsys, "scan", "--poly", "-1,-1,1", "--C", "1/2", "--qmax", "50",
                       "--eta", "1/2")
    assert code == 0
    assert len(out.splitlines()) > 1


def test_approx_totally_real_sign_classes(capsys):
    code, out, _ = run(capsys, "approx", "--poly", "-1,-2,1,1", "--root", "positive", "--C", "2",
                       "--qmax", "1000")
    assert code == 0
    classes = {r["sign_class"] for r in csv.DictReader(io.StringIO(out))}
    assert classes == {"plus", "minus"}


def test_norms_and_curves(capsys):
    code, out, _ = run(capsys, "norms", "--poly", "-2,0,0,1", "--level-max", "10")
    data = json.loads(out)
    assert data["missing"] == [7]
    assert data["inert_certificates"] == {"7": 7}
    code, out, _ = run(capsys, "curves", "--poly", "-1,-1,1", "--level-max", "5")
    data = json.loads(out)
    assert data["kind"] == "points"
    assert data["points"][0]["symbolic"] == "+-1/5*sqrt(5)"
    code, _, _ = run(capsys, "norms", "--poly", "-2,0,0,1", "--level-max", "0")
    assert code == 2


def test_plot_and_config(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"poly": [-2, 0, 0, 1], "C": "3", "qmax": 10000, "level_max": 8}))
    out = tmp_path / "a.svg"
    code, _, _ = run(capsys, "plot", "--config", str(cfg), "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert text.startswith("<?xml") and "<circle" in text and "<polyline" in text
    # flags override the file
    code, _, _ = run(capsys, "plot", "--config", str(cfg), "--C", "0", "--no-overlay", "--extent", "3",
                     "--out", str(out))
    assert code == 0
    assert "<circle" not in out.read_text()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"colour": "red"}))
    code, _, err = run(capsys, "field", "--config", str(bad))
    assert code == 2 and "colour" in err


def test_plot_from_csv(tmp_path, capsys):
    csv_path = tmp_path / "a.csv"
    code, _, _ = run(capsys, "approx", "--poly", "-2,0,0,1", "--C", "3", "--qmax", "5000",
                     "--out", str(csv_path))
    svg_path = tmp_path / "a.svg"
    code, _, _ = run(capsys, "plot", "--poly", "-2,0,0,1", "--C", "3", "--input", str(csv_path),
                     "--out", str(svg_path), "--no-overlay")
    assert code == 0
    assert svg_path.read_text().count("<circle") > 10


def test_probe_single_and_monte_carlo(capsys):
    code, out, _ = run(capsys, "probe", "--alpha", "0.61803398875", "--Q", "100")
    assert code == 0
    assert json.loads(out)["dispersion"]["holds"] is True
    code, out, _ = run(capsys, "probe", "--samples", "5", "--Q", "100", "--seed", "7")
    assert code == 0
    assert json.loads(out)["d2"]["samples"] == 5


def test_precision_exhaustion_exit_code(capsys):
    code, _, err = run(capsys, "field", "--poly", "-2,0,0,1", "--prec", "4000", "--max-prec", "128")
    assert code == 3
    assert "precision" in err


@pytest.mark.parametrize("job", ["fig1_left", "fig1_right", "fig2"])
def test_jobs_are_valid(job):
    data = json.loads((JOBS / f"{job}.json").read_text())
    assert data["poly"] and data["C"]


def test_approx_json_format(capsys):
    code, out, _ = run(capsys, "approx", "--poly", "-1,-1,1", "--C", "1", "--qmax", "100",
                       "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert rows and set(rows[0]) == {"q", "p1", "v1", "gamma", "norm_level", "sign_class",
                                     "source", "err"}


def test_qmax_scientific_notation(capsys):
    a = run(capsys, "scan", "--poly", "-1,-1,1", "--C", "1", "--qmax", "1e2")
    b = run(capsys, "scan", "--poly", "-1,-1,1", "--C", "1", "--qmax", "100")
    assert a == b and a[0] == 0
    code, _, err = run(capsys, "scan", "--poly", "-1,-1,1", "--qmax", "1.5")
    assert code == 2 and "integer" in err
