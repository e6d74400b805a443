import numpy as np
import pytest
from scipy.integrate import trapezoid

import torus_cosine.cosine_operator as cosine_operator
from torus_cosine.core_geometry import OrbitParams, TorusElement, orbit_representative, pairing, torus_act
from torus_cosine.legendre_spectral import MomentMatrix, delta_torus_coefficients, gauss_legendre, moments_2d


def test_abs_affine_cos_integral():
    assert cosine_operator.abs_affine_cos_integral(0.0, 1.0) == pytest.approx(4.0)
    assert cosine_operator.abs_affine_cos_integral(2.0, 1.0) == pytest.approx(4.0 * np.pi)
    assert cosine_operator.abs_affine_cos_integral(-2.0, 1.0) == pytest.approx(4.0 * np.pi)
    # continuous where |m| = b
    assert cosine_operator.abs_affine_cos_integral(1.0 - 1e-12, 1.0) == pytest.approx(2.0 * np.pi, abs=1e-5)
    v = np.linspace(0.0, 2.0 * np.pi, 20001)
    direct = trapezoid(np.abs(0.3 + 0.8 * np.cos(v)), v)
    assert cosine_operator.abs_affine_cos_integral(0.3, 0.8) == pytest.approx(direct, rel=1e-6)


def test_reduced_kernel_averages_pairing():
    theta, psi = 0.4, 0.2
    first = orbit_representative(OrbitParams(theta, psi))
    second = orbit_representative(OrbitParams(1.0, 0.1))
    angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    average = np.mean([pairing(first, torus_act(TorusElement(a, b), second)) for a in angles for b in angles])
    kernel = cosine_operator.reduced_kernel(np.cos(theta), np.cos(theta + 2 * psi), np.cos(1.0), np.cos(1.2))
    assert kernel == pytest.approx(average, abs=1e-3)


def test_reduced_kernel_is_symmetric():
    rng = np.random.default_rng(1)
    x, y, xp, yp = rng.uniform(-1.0, 1.0, (4, 10))
    forward = cosine_operator.reduced_kernel(x, y, xp, yp)
    backward = cosine_operator.reduced_kernel(xp, yp, x, y)
    assert np.allclose(forward, backward, atol=1e-12)
    assert np.all(forward >= 0.0) and np.all(forward <= 1.0 + 1e-12)


def test_torus_invariant_function():
    f = cosine_operator.legendre_product(2, 0)
    assert f.is_antipodal()
    assert not cosine_operator.legendre_product(1, 0).is_antipodal()
    assert f.sup_norm() == pytest.approx(1.0)
    g = f.scaled(2.0).plus(cosine_operator.constant_function(1.0))
    assert g(0.0, 0.0) == pytest.approx(0.0)
    assert g.label == "2*p2p0+1"


def test_constant_eigenvalue():
    image = cosine_operator.apply_cosine(cosine_operator.constant_function(), order=32, kernel_order=96)
    x, y = cosine_operator.check_grid(5)
    assert np.allclose(image(x, y), 1.0 / 3.0, atol=1e-2)


def test_eigenvalue_table():
    table = cosine_operator.eigenvalue_table(2, order=24)
    constant = table[(table["m"] == 0) & (table["n"] == 0)]["eigenvalue"].item()
    assert constant == pytest.approx(1.0 / 3.0, abs=2e-2)
    # not positive semidefinite
    assert table[(table["m"] == 2) & (table["n"] == 2)]["eigenvalue"].item() < 0.0
    assert not table["kernel_index"].any()


def test_operator_matrix_is_symmetric():
    matrix, indices = cosine_operator.operator_matrix(3, order=8)
    assert matrix.shape == (len(indices), len(indices))
    assert all((m + n) % 2 == 0 for m, n in indices)
    assert np.allclose(matrix, matrix.T)


def test_self_adjointness_sweep():
    sweep = cosine_operator.self_adjointness_sweep(pairs=3, degree=4, seed=2, order=8)
    assert list(sweep.columns) == ["trial", "defect", "bound", "pass"]
    assert sweep["pass"].all()


def test_annihilation():
    report = cosine_operator.annihilation_report([(4, 0), (2, 0), (1, 0)])
    kinds = dict(zip(report["indices"], report["kind"]))
    assert kinds == {"4,0": "kernel", "2,0": "image", "1,0": "odd"}
    assert report["pass"].all()


def test_spectral_projections():
    coefficients = MomentMatrix(np.ones((5, 5)), normalized=True)
    kernel = cosine_operator.kernel_projection(coefficients)
    image = cosine_operator.image_projection(coefficients)
    assert kernel[4, 0] == 1.0 and kernel[0, 4] == 1.0 and kernel[2, 0] == 0.0
    assert image[2, 0] == 1.0 and image[3, 3] == 1.0 and image[4, 0] == 0.0
    # odd differences belong to neither
    assert kernel[1, 0] == 0.0 and image[1, 0] == 0.0


def test_image_is_stable():
    # each kernel row expands over image indices only, so a coarse source rule suffices
    rule = gauss_legendre(32)
    for m, n in ((2, 0), (2, 2)):
        image = cosine_operator.apply_cosine(cosine_operator.legendre_product(m, n), order=6)
        moments = moments_2d(image, 6, rule)
        scale = np.max(np.abs(moments.entries))
        kernel = cosine_operator.kernel_projection(moments).entries
        assert np.max(np.abs(kernel)) <= 1e-4 * scale


def test_delta_image_pattern():
    coefficients = delta_torus_coefficients(5, 5)
    kept = cosine_operator.image_projection(coefficients).entries != 0.0
    dropped = cosine_operator.kernel_projection(coefficients).entries != 0.0
    m, n = np.indices(kept.shape)
    even = (m % 2 == 0) & (n % 2 == 0)
    assert np.array_equal(kept, even & (np.abs(m - n) <= 2))
    assert np.array_equal(dropped, even & (np.abs(m - n) >= 4))


def test_function_from_csv(tmp_path):
    points = np.linspace(-1.0, 1.0, 5)
    rows = ["x,y,f"] + [f"{x},{y},{x * x + y * y}" for x in points for y in points]
    path = tmp_path / "grid.csv"
    path.write_text("\n".join(rows) + "\n")
    f = cosine_operator.function_from_csv(str(path))
    assert f(0.5, -1.0) == pytest.approx(1.25)
    assert f(0.25, 0.0) == pytest.approx(0.125)
    with pytest.raises(FileNotFoundError):
        cosine_operator.function_from_csv(str(tmp_path / "missing.csv"))


if __name__ == "__main__":
    test_constant_eigenvalue()
    test_eigenvalue_table()
    test_annihilation()
