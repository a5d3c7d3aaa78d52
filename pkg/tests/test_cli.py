import csv
import json

import numpy as np
from numpy.testing import assert_allclose

from mesoscale import io
from mesoscale.cli import main
from mesoscale.fields import approximate_solution, build_model


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_cli_round_trip(tmp_path, capsys):
    cloud = tmp_path / "cloud.json"
    assert main(["gen-cloud", "--pattern", "lattice", "--n", "2", "--spacing", "0.5",
                 "--radius", "0.001", "--seed", "42", "-o", str(cloud)]) == 0
    data = json.loads(cloud.read_text())
    assert data["ambient"]["kind"] == "free_space" and len(data["inclusions"]) == 8

    assert main(["validate", "--cloud", str(cloud)]) == 0
    report = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert report["admissible"] and report["lemma1_ok"]

    src = tmp_path / "src.json"
    src.write_text(json.dumps({"bumps": [{"center": [0.05, -0.03, 0.02], "rho": 0.2}]}))
    pts = tmp_path / "pts.csv"
    pts.write_text("x,y,z\n0.25,0.25,0.2511\n0.1,0.1,0.1\n")

    out = tmp_path / "u.csv"
    assert main(["solve", "--cloud", str(cloud), "--source", str(src), "--points", str(pts),
                 "-o", str(out), "--dump-system", str(tmp_path / "dump")]) == 0
    rows = _read(out)
    assert list(rows[0]) == ["x", "y", "z", "value", "flags"]
    assert rows[0]["flags"] == "near_surface" and rows[1]["flags"] == ""
    c, amb = io.read_cloud(cloud)
    model = build_model(c, amb, io.read_source(src))
    expected = approximate_solution(model, io.read_points(pts))
    assert_allclose([float(r["value"]) for r in rows], expected, rtol=0)
    assert (tmp_path / "dump" / "Cmat.csv").exists()

    oracle_out = tmp_path / "uo.csv"
    assert main(["oracle-u", "--cloud", str(cloud), "--source", str(src), "--points", str(pts),
                 "-o", str(oracle_out)]) == 0
    ou = np.array([float(r["value"]) for r in _read(oracle_out)])
    assert np.abs(ou - expected).max() < 1e-5

    g_out, go_out = tmp_path / "g.csv", tmp_path / "go.csv"
    assert main(["green", "--cloud", str(cloud), "--x", "0,0,0.3", "--points", str(pts),
                 "-o", str(g_out)]) == 0
    assert main(["oracle-green", "--cloud", str(cloud), "--x", "0,0,0.3", "--points", str(pts),
                 "-o", str(go_out)]) == 0
    g = np.array([float(r["value"]) for r in _read(g_out)])
    go = np.array([float(r["value"]) for r in _read(go_out)])
    assert np.abs(g - go).max() < 1e-4 * np.abs(go).max()


def test_cli_converge_deterministic(tmp_path):
    spec = tmp_path / "study.json"
    spec.write_text(json.dumps({
        "sweep": "epsilon", "values": [8e-4, 1.6e-3],
        "base_cloud": {"pattern": "lattice", "radius": 1e-3, "spacing": 0.5, "n_per_axis": 2},
        "source": {"bumps": [{"center": [0.05, -0.03, 0.02], "rho": 0.2}]},
        "quantity": "u", "samples": {"count": 40},
    }))
    for name in ("a", "b"):
        assert main(["converge", "--spec", str(spec), "--seed", "9", "-o",
                     str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "rows.csv").read_bytes() == (tmp_path / "b" / "rows.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["seed"] == 9


def test_cli_reports_errors(tmp_path, capsys):
    cloud = tmp_path / "cloud.json"
    cloud.write_text(json.dumps({"inclusions": [{"center": [0, 0, 0], "radius": 0.1}]}))
    pts = tmp_path / "pts.csv"
    pts.write_text("0,0,0.05\n")
    src = tmp_path / "src.json"
    src.write_text(json.dumps({"bumps": [{"center": [0.5, 0, 0], "rho": 0.2}]}))
    rc = main(["solve", "--cloud", str(cloud), "--source", str(src), "--points", str(pts),
               "-o", str(tmp_path / "o.csv")])
    assert rc == 2
    assert "inside an inclusion" in capsys.readouterr().err


def test_validate_flags_overlap(tmp_path):
    cloud = tmp_path / "cloud.json"
    cloud.write_text(json.dumps({"inclusions": [{"center": [0, 0, 0], "radius": 0.1},
                                                {"center": [0.15, 0, 0], "radius": 0.1}]}))
    assert main(["validate", "--cloud", str(cloud)]) == 1


def test_io_round_trip(tmp_path, lattice8):
    from mesoscale.geometry import AmbientDomain

    path = tmp_path / "c.json"
    io.write_cloud(path, lattice8, AmbientDomain.ball(2.0))
    cloud, amb = io.read_cloud(path)
    assert amb == AmbientDomain.ball(2.0)
    assert_allclose(cloud.centers, lattice8.centers, rtol=0)
    assert cloud.omega_diameter == lattice8.omega_diameter
