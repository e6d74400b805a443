import numpy as np
import pytest

import torus_cosine.crofton_fredholm as crofton_fredholm
from torus_cosine.errors import IllConditioned, NotHomogeneous, SingularSystem


def test_second_kind_regular():
    solution = crofton_fredholm.solve_second_kind(
        1.0, crofton_fredholm.SECOND_KIND_KERNELS["xy"], crofton_fredholm.SECOND_KIND_RHS["x"], n=32
    )
    assert np.allclose(solution.values, 1.5 * solution.nodes, atol=1e-10)
    assert solution.residual <= 1e-12
    assert solution(np.array([0.0, 0.5, 1.0])) == pytest.approx([0.0, 0.75, 1.5])
    frame = solution.to_frame()
    assert list(frame.columns) == ["x", "phi"]
    assert len(frame) == 32


def test_second_kind_zero_kernel():
    solution = crofton_fredholm.solve_second_kind(
        2.0, crofton_fredholm.SECOND_KIND_KERNELS["zero"], crofton_fredholm.SECOND_KIND_RHS["sin"], n=8
    )
    assert np.allclose(solution.values, np.sin(np.pi * solution.nodes) / 2.0)
    assert solution.condition == pytest.approx(1.0)


def test_fredholm_alternative():
    kernel = crofton_fredholm.SECOND_KIND_KERNELS["xy"]
    with pytest.raises(SingularSystem) as error:
        crofton_fredholm.solve_second_kind(1.0 / 3.0, kernel, crofton_fredholm.SECOND_KIND_RHS["x"], n=32)
    # psi is sqrt(3) x, so <psi, x> = 1 / sqrt(3)
    assert abs(error.value.inner_product) == pytest.approx(1.0 / np.sqrt(3.0), rel=1e-8)
    assert error.value.condition > 1e12
    record = error.value.to_record()
    assert record["error"] == "SingularSystem"

    solvable = crofton_fredholm.solve_second_kind(1.0 / 3.0, kernel, crofton_fredholm.SECOND_KIND_RHS["orth_x"], n=32)
    assert solvable.residual <= 1e-8


def test_second_kind_rejects_zero_lambda():
    with pytest.raises(ValueError):
        crofton_fredholm.solve_second_kind(
            0.0, crofton_fredholm.SECOND_KIND_KERNELS["xy"], crofton_fredholm.SECOND_KIND_RHS["x"]
        )


def test_nystrom_system():
    system = crofton_fredholm.nystrom_system(crofton_fredholm.SECOND_KIND_KERNELS["min"], (0.0, 2.0), 6)
    assert system.weights.sum() == pytest.approx(2.0)
    assert system.is_symmetric()
    assert system.operator().shape == (6, 6)


def test_surjectivity_kernel():
    eta = np.linspace(0.0, np.pi / 2, 7)
    kernel = crofton_fredholm.surjectivity_kernel(eta[:, None], eta[None, :])
    assert np.allclose(kernel, kernel.T)
    # both planes in C x {0}
    assert kernel[0, 0] == pytest.approx(8 * np.pi)
    assert kernel[-1, -1] == pytest.approx(8 * np.pi)


def test_surjectivity_kernel_values():
    # I'(a, a) = 32 a and I'(0, 0) = 0
    assert crofton_fredholm.surjectivity_kernel(np.array(np.pi / 4), np.array(np.pi / 4)) == pytest.approx(16.0)
    assert crofton_fredholm.surjectivity_kernel(np.array(np.pi / 2), np.array(0.0)) == pytest.approx(0.0, abs=1e-12)


def test_orbit_weight():
    eta = np.array([0.0, np.pi / 4, np.pi / 2])
    assert np.allclose(crofton_fredholm.orbit_weight(eta), [0.0, 0.5, 0.0], atol=1e-16)
    assert np.allclose(crofton_fredholm.orbit_weight(eta, "flat"), 1.0)
    with pytest.raises(ValueError):
        crofton_fredholm.orbit_weight(eta, "cone")


def test_constant_density_gives_round_profile():
    profile = crofton_fredholm.forward_profile(lambda eta: np.ones_like(eta), 64)
    values = profile(np.linspace(0.0, np.pi / 2, 9))
    assert np.allclose(values, values[0], rtol=1e-3)


def test_first_kind_round_trip():
    def density(eta):
        return 1.0 + 0.5 * np.cos(2.0 * eta)

    solution = crofton_fredholm.solve_first_kind(crofton_fredholm.forward_profile(density, 64), n=64)
    exact = density(solution.nodes)
    assert np.linalg.norm(solution.density - exact) / np.linalg.norm(exact) <= 1e-4
    assert solution.residual <= 1e-5
    assert list(solution.to_frame().columns) == ["eta", "f"]
    assert solution.diagnostics()["weight"] == "sphere"


def test_first_kind_norms():
    for name in ("euclid", "l1"):
        profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.R2_NORMS[name], name)
        solution = crofton_fredholm.solve_first_kind(profile, n=64)
        assert solution.residual <= 1e-3
        assert solution.condition > 1.0


def test_first_kind_regularization_choice():
    profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.l1_norm, "l1")
    assert crofton_fredholm.solve_first_kind(profile, n=32).reg == 0.0
    assert crofton_fredholm.solve_first_kind(profile, n=32, reg=1e-10).reg == 1e-10
    with pytest.warns(IllConditioned):
        solution = crofton_fredholm.solve_first_kind(profile, n=32, condition_limit=10.0)
    assert solution.reg == crofton_fredholm.DEFAULT_REGULARIZATION


def test_first_kind_residual_decreases_with_reg():
    profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.l1_norm, "l1")
    residuals = [
        crofton_fredholm.solve_first_kind(profile, n=32, reg=reg).residual_l2
        for reg in crofton_fredholm.REGULARIZATION_GRID
    ]
    for earlier, later in zip(residuals, residuals[1:]):
        assert later <= earlier * (1.0 + 1e-9) + 1e-14


def test_first_kind_residual_does_not_grow_with_nodes():
    profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.l1_norm, "l1")
    residuals = [crofton_fredholm.solve_first_kind(profile, n=n).residual for n in (16, 32, 64)]
    for earlier, later in zip(residuals, residuals[1:]):
        assert later <= max(earlier, 1e-6)


def test_discrepancy_principle():
    profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.euclidean_norm, "euclid")
    solution = crofton_fredholm.solve_first_kind(profile, n=32, discrepancy=True)
    assert solution.reg in crofton_fredholm.REGULARIZATION_GRID


def test_first_kind_rejects_bad_input():
    profile = crofton_fredholm.MetricProfile(lambda eta: np.cos(eta) - 0.5, "negative")
    with pytest.raises(ValueError):
        crofton_fredholm.solve_first_kind(profile, n=16)
    with pytest.raises(ValueError):
        crofton_fredholm.solve_first_kind(
            crofton_fredholm.metric_from_r2_norm(crofton_fredholm.l1_norm), n=16, reg=-1.0
        )


def test_metric_homogeneity():
    profile = crofton_fredholm.metric_from_r2_norm(crofton_fredholm.linf_norm, "linf")
    assert profile(np.pi / 4) == pytest.approx(np.sqrt(0.5))
    with pytest.raises(NotHomogeneous):
        crofton_fredholm.metric_from_r2_norm(lambda u, v: u * u + v * v, "square")
    with pytest.raises(ValueError):
        crofton_fredholm.metric_from_r2_norm(lambda u, v: u - v, "degenerate")


def test_profile_from_csv(tmp_path):
    eta = np.linspace(0.0, np.pi / 2, 17)
    path = tmp_path / "profile.csv"
    path.write_text("eta,F\n" + "\n".join(f"{e},{np.cos(e) + np.sin(e)}" for e in eta) + "\n")
    profile = crofton_fredholm.profile_from_csv(str(path))
    assert profile(0.3) == pytest.approx(np.cos(0.3) + np.sin(0.3), abs=1e-5)
    with pytest.raises(FileNotFoundError):
        crofton_fredholm.profile_from_csv(str(tmp_path / "missing.csv"))


if __name__ == "__main__":
    test_second_kind_regular()
    test_fredholm_alternative()
    test_first_kind_round_trip()
