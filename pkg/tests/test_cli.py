import json

import pytest

from affineqe.cli import main

EXP3D_DOC = {
    "dim": 3,
    "coords": ["x1", "x2", "x3"],
    "christoffel": {"1,2^3": "1", "1,3^1": "3", "2,3^2": "4", "3,3^3": "5"},
}

WALL_DOC = {
    "dim": 2,
    "coords": ["x1", "x2"],
    "christoffel": {"1,1^1": "3/x1", "1,2^2": "1/x1", "2,2^1": "1/x1"},
    "excluded": ["x1"],
}


@pytest.fixture
def exp3d_path(tmp_path):
    path = tmp_path / "exp3d.json"
    path.write_text(json.dumps(EXP3D_DOC))
    return str(path)


@pytest.fixture
def wall_path(tmp_path):
    path = tmp_path / "wall.json"
    path.write_text(json.dumps(WALL_DOC))
    return str(path)


def test_qe_dim_reports_dimension(exp3d_path, tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["qe-dim", exp3d_path, "--mu", "-3/5", "--basepoint", "0,0,0",
                 "--json", str(out)])
    assert code == 0
    assert "dim = 2" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report["results"][0]["dim"] == 2
    assert report["results"][0]["mu"] == "-3/5"

def test_qe_dim_missing_file_is_input_error(capsys):
    assert main(["qe-dim", "missing.json", "--mu", "0"]) == 2
    assert "error" in capsys.readouterr().err


def test_qe_dim_bad_mu_is_input_error(exp3d_path, capsys):
    assert main(["qe-dim", exp3d_path, "--mu", "zebra"]) == 2


def test_curvature_command(exp3d_path, capsys):
    assert main(["curvature", exp3d_path]) == 0
    out = capsys.readouterr().out
    assert "rho_12 = 5" in out
    assert "rho_33 = 10" in out


def test_classify_agreement(capsys):
    code = main(["classify", "--kind", "exp3d", "--mu", "-3/5", "--mu", "0"])
    assert code == 0
    assert "agree" in capsys.readouterr().out


def test_sweep_family3d_never_three(tmp_path, capsys):
    out = tmp_path / "sweep.json"
    code = main(["sweep", "--family", "family3d", "--mu", "-1/2",
                 "--json", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert 3 not in report["dims_seen"]
    assert report["violations"] == []


def test_sweep_reports_are_deterministic(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    for out in (out1, out2):
        code = main(["sweep", "--family", "typeB", "--mu", "-1", "--n", "20",
                     "--seed", "7", "--json", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_deform_emits_manifold_document(exp3d_path, tmp_path):
    out = tmp_path / "deformed.json"
    code = main(["deform", exp3d_path, "--potential", "x1*x2", "--json", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["strong"] == "zero"
    assert report["manifold"]["dim"] == 3


def test_deform_requires_a_form(exp3d_path):
    assert main(["deform", exp3d_path]) == 2


def test_deform_with_componentwise_form(exp3d_path, tmp_path):
    out = tmp_path / "sheared.json"
    code = main(["deform", exp3d_path, "--omega", "x2,0,0", "--json", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["strong"] == "nonzero"
    assert report["manifold"]["christoffel"]["1,1^1"] == "2*x2"


def test_flatten_grid_flag(wall_path):
    assert main(["flatten", wall_path, "--basepoint", "1,0",
                 "--grid", "0.2:1", "--geodesics", "2"]) == 0


def test_flatten_wall_chart(wall_path, tmp_path, capsys):
    out = tmp_path / "flat.json"
    code = main(["flatten", wall_path, "--basepoint", "1,0", "--geodesics", "3",
                 "--json", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["flat"] is True
    assert report["chart"]["geodesic_deviation"] < 1e-6


def test_extend_with_metric_check(exp3d_path, capsys):
    code = main(["extend", exp3d_path, "--phi", "1,1=x3", "--f", "exp(3*x3)",
                 "--mu", "-3/5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "quasi-einstein residual" in out
    assert "nonzero" not in out


def test_verify_command(exp3d_path, capsys):
    code = main(["verify", exp3d_path, "--mu", "-3/5", "--mu", "1",
                 "--basepoint", "0,0,0"])
    assert code == 0
    assert "FAIL" not in capsys.readouterr().out
