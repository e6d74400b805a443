import pytest

import torus_cosine.config as config
from torus_cosine.config import RunConfig


def test_defaults():
    run = RunConfig()
    assert run.quadrature_order == 64
    assert run.output_format == "json"
    assert run.tolerance("hermitian") == 1e-8
    assert run.tolerance("condition") == 1e12
    with pytest.raises(KeyError):
        run.tolerance("nonsense")


def test_validation():
    with pytest.raises(ValueError):
        RunConfig(quadrature_order=2)
    with pytest.raises(ValueError):
        RunConfig(output_format="xml")
    with pytest.raises(ValueError):
        RunConfig(tolerances={"hermitian": 0.0})


def test_partial_tolerances_are_merged():
    run = RunConfig(tolerances={"annihilation": 1e-2})
    assert run.tolerance("annihilation") == 1e-2
    assert run.tolerance("condition") == 1e12


def test_overrides_skip_none():
    run = RunConfig().with_overrides(quadrature_order=None, seed=5, output_format="csv")
    assert run.quadrature_order == 64
    assert run.seed == 5
    assert run.output_format == "csv"


def test_config_file_without_header(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("quadrature_order = 32\noutput_format = CSV\ntol.annihilation = 5e-3\ndegrees = yes\n")
    run = config.load_run_config(str(path))
    assert run.quadrature_order == 32
    assert run.output_format == "csv"
    assert run.tolerance("annihilation") == 5e-3
    assert run.degrees


def test_command_line_wins(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("[run]\nseed = 3\nquadrature_order = 32\n")
    run = config.load_run_config(str(path), quadrature_order=48, seed=None)
    assert run.quadrature_order == 48
    assert run.seed == 3


def test_bad_config(tmp_path):
    with pytest.raises(FileNotFoundError):
        config.load_run_config(str(tmp_path / "missing.cfg"))
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        config.load_run_config(str(path))


if __name__ == "__main__":
    test_defaults()
    test_partial_tolerances_are_merged()
