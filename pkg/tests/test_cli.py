import io
import json

import numpy as np
import pandas as pd
import pytest

import torus_cosine.cli_app as cli_app


def _records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_klain_grid_json(capsys):
    assert cli_app.main(["klain", "--grid", "5", "--method", "elliptic", "--format", "json"]) == 0
    records = _records(capsys.readouterr().out)
    assert len(records) == 25
    corner = [record for record in records if record["x"] == 1.0 and record["y"] == 1.0]
    assert corner[0]["Kl"] == pytest.approx(1.0)
    assert corner[0]["method"] == "elliptic"


def test_legendre_moments_csv(capsys):
    assert cli_app.main(["legendre", "moments", "--function", "max", "--degree", "4", "--format", "csv"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame.columns) == ["m", "n", "moment"]
    moments = {(row.m, row.n): row.moment for row in frame.itertuples(index=False)}
    assert moments[(0, 0)] == pytest.approx(8 / 3, abs=1e-12)
    assert moments[(2, 0)] == pytest.approx(4 / 15, abs=1e-12)


def test_legendre_delta_normalized(capsys):
    assert cli_app.main(["legendre", "delta", "--k", "1", "--l", "1", "--normalized"]) == 0
    records = _records(capsys.readouterr().out)
    assert len(records) == 9
    assert records[0]["coefficient"] == pytest.approx(0.25)


def test_orbit_reduce(capsys):
    assert cli_app.main(["orbit", "reduce", "--plane", "1,0,0,0,0,0,1,0"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert record["theta"] == pytest.approx(np.pi / 2)
    assert record["psi"] == pytest.approx(0.0, abs=1e-12)
    assert record["in_square"] is True


def test_orbit_represent_in_degrees(capsys):
    assert cli_app.main(["orbit", "represent", "--theta", "90", "--psi", "0", "--degrees"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert record["theta"] == pytest.approx(np.pi / 2)
    assert record["plane"] == pytest.approx([1, 0, 0, 0, 0, 0, 0, 1], abs=1e-15)


def test_orbit_quasi_j(capsys):
    assert cli_app.main(["orbit", "quasi-j", "--plane", "1,0,1,0,0,1,0,2"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert (record["A"], record["B"], record["C"]) == (pytest.approx(2.0), pytest.approx(-5.0), pytest.approx(2.0))
    assert len(record["vector"]) == 4


def test_pairing(capsys):
    assert cli_app.main(["pairing", "--plane", "1,0,0,0,0,1,0,0", "--other", "1,0,0,0,0,0,1,0"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert record["pairing"] == pytest.approx(0.0, abs=1e-15)
    assert record["gluck_warner"] == pytest.approx(0.0, abs=1e-15)


def test_degenerate_plane_is_numerical_error(capsys):
    assert cli_app.main(["gw", "--plane", "1,0,0,0,2,0,0,0"]) == 1
    record = _records(capsys.readouterr().out)[0]
    assert record["error"] == "DegeneratePlane"
    assert record["gram_determinant"] == pytest.approx(0.0)


def test_usage_errors(capsys):
    assert cli_app.main(["gw", "--plane", "1,2"]) == 2
    assert cli_app.main(["legendre", "moments", "--function", "nope"]) == 2
    assert cli_app.main(["orbit", "reduce"]) == 2
    assert cli_app.main(["fredholm", "solve2", "--kernel", "nope"]) == 2
    capsys.readouterr()


def test_fredholm_singular(capsys):
    assert cli_app.main(["fredholm", "solve2", "--lambda", str(1.0 / 3.0), "--kernel", "xy", "--rhs", "x"]) == 1
    record = _records(capsys.readouterr().out)[0]
    assert record["error"] == "SingularSystem"


def test_fredholm_csv(capsys):
    assert cli_app.main(["fredholm", "solve2", "--nodes", "8", "--format", "csv"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert np.allclose(frame["phi"], 1.5 * frame["x"])


def test_crofton_output(tmp_path, capsys):
    path = tmp_path / "density.csv"
    assert cli_app.main(["crofton", "solve", "--metric", "l1", "--nodes", "32", "--format", "csv", "--output", str(path)]) == 0
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["eta", "f"]
    assert len(frame) == 32
    diagnostics = _records(capsys.readouterr().out)[0]
    assert diagnostics["weight"] == "sphere"


def test_crofton_json_output(tmp_path, capsys):
    path = tmp_path / "density.jsonl"
    assert cli_app.main(["crofton", "solve", "--metric", "l1", "--nodes", "16", "--output", str(path)]) == 0
    records = _records(path.read_text())
    assert len(records) == 16
    assert set(records[0]) == {"eta", "f"}
    capsys.readouterr()


def test_output_is_reproducible(tmp_path, capsys):
    outputs = []
    for _ in range(2):
        assert cli_app.main(["klain", "--grid", "5", "--format", "csv"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]

    files = [tmp_path / "first.csv", tmp_path / "second.csv"]
    for path in files:
        arguments = ["crofton", "solve", "--metric", "l1", "--nodes", "16", "--format", "csv", "--output", str(path)]
        assert cli_app.main(arguments) == 0
    assert files[0].read_bytes() == files[1].read_bytes()
    capsys.readouterr()


def test_klain_series_outside_triangle(capsys):
    assert cli_app.main(["klain", "orbit", "--method", "series", "--theta", "0.3", "--psi", "1.5"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert record["method"] == "series"
    assert np.isfinite(record["Kl"]) and record["Kl"] > 0.0


def test_orbit_quasi_j_reports_angles(capsys):
    assert cli_app.main(["orbit", "quasi-j", "--plane", "1,0,1,0,0,1,0,2"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert {"theta", "psi", "alpha", "beta"} <= set(record)


def test_hermitian_fit(capsys):
    assert cli_app.main(["hermitian", "fit", "--metric", "l1", "--samples", "200"]) == 0
    record = _records(capsys.readouterr().out)[0]
    assert record["verdict"] is False
    assert record["residual"] > 1e-2


def test_verify_subset(capsys):
    assert cli_app.main(["verify", "--only", "1,11", "--format", "csv"]) == 0
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame["criterion"]) == [1, 11]
    assert frame["passed"].all()


if __name__ == "__main__":
    cli_app.main(["orbit", "reduce", "--plane", "1,0,0,0,0,0,1,0"])
    cli_app.main(["verify", "--only", "1,2,9"])
