import numpy as np
import pytest

import torus_cosine.klain_complex_l1 as klain_complex_l1
from torus_cosine.core_geometry import OrbitParams, Plane, orbit_representative
from torus_cosine.errors import SlowConvergence
from torus_cosine.legendre_spectral import gauss_legendre


def test_elliptic_endpoints():
    for method in klain_complex_l1.ELLIPTIC_METHODS:
        assert klain_complex_l1.complete_elliptic_e(0.0, method) == pytest.approx(np.pi / 2, abs=1e-12)
    assert klain_complex_l1.complete_elliptic_e(1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        klain_complex_l1.complete_elliptic_e(1.5)
    with pytest.raises(ValueError):
        klain_complex_l1.complete_elliptic_e(0.5, "landen")


def test_elliptic_methods_agree():
    k = np.linspace(0.0, 0.99, 12)
    agm = klain_complex_l1.complete_elliptic_e(k, "agm")
    scipy_values = klain_complex_l1.complete_elliptic_e(k, "scipy")
    assert np.allclose(agm, scipy_values, atol=1e-14)
    value, bound = klain_complex_l1.elliptic_series(np.sqrt(0.5), 30)
    assert abs(value - klain_complex_l1.complete_elliptic_e(np.sqrt(0.5))) <= bound
    assert bound < 1e-9


def test_series_switches_over_near_one():
    with pytest.warns(SlowConvergence):
        value = klain_complex_l1.complete_elliptic_e(0.99, "series")
    assert value == pytest.approx(klain_complex_l1.complete_elliptic_e(0.99, "agm"), abs=1e-14)


def test_abs_cos_integral_constants():
    assert klain_complex_l1.abs_cos_integral(1.0, 0.0) == pytest.approx(8 * np.pi)
    assert klain_complex_l1.abs_cos_integral(1.0, 1.0) == pytest.approx(32.0)
    assert klain_complex_l1.abs_cos_integral(0.0, 0.0) == 0.0
    assert klain_complex_l1.abs_cos_integral(0.7, 0.2) == pytest.approx(
        klain_complex_l1.abs_cos_integral_quadrature(0.7, 0.2), rel=1e-10
    )
    with pytest.raises(ValueError):
        klain_complex_l1.abs_cos_integral(-1.0, 0.5)


def test_orbit_integral_three_ways():
    step = np.pi / 12
    for theta in np.arange(7) * step:
        for psi in np.arange(7) * step:
            if theta + 2 * psi > np.pi + 1e-12:
                continue
            closed = klain_complex_l1.orbit_integral_elliptic(theta, psi)
            quadrature = klain_complex_l1.orbit_integral_quadrature(theta, psi)
            assert quadrature == pytest.approx(closed, rel=1e-8, abs=1e-12)
            _, k = klain_complex_l1.orbit_modulus(theta, psi)
            if k * k <= 0.75:
                assert klain_complex_l1.series_I(theta, psi) == pytest.approx(closed, abs=1e-6)


def test_series_tail_bound_holds():
    theta, psi = 0.3, 0.5
    _, k = klain_complex_l1.orbit_modulus(theta, psi)
    assert k * k <= 0.9
    difference = abs(klain_complex_l1.series_I(theta, psi, 10) - klain_complex_l1.orbit_integral_elliptic(theta, psi))
    assert difference <= klain_complex_l1.series_I_tail_bound(theta, psi, 10)


def test_series_folds_outside_triangle():
    assert klain_complex_l1.fold_series_domain(0.3, 0.5) == (0.3, 0.5)
    theta, psi = klain_complex_l1.fold_series_domain(0.3, 1.5)
    assert theta + 2 * psi <= np.pi
    assert theta == pytest.approx(0.3 + 3.0 - np.pi)
    assert klain_complex_l1.orbit_integral_elliptic(theta, psi) == pytest.approx(
        klain_complex_l1.orbit_integral_elliptic(0.3, 1.5), rel=1e-12
    )
    series = klain_complex_l1.klain_l1_orbit(0.3, 1.5, "series")
    elliptic = klain_complex_l1.klain_l1_orbit(0.3, 1.5, "elliptic")
    quadrature = klain_complex_l1.klain_l1_orbit(0.3, 1.5, "quadrature")
    assert np.isfinite(series.value)
    assert abs(series.value - elliptic.value) <= series.estimated_error + 1e-12
    assert quadrature.value == pytest.approx(elliptic.value, abs=1e-8)


def test_klain_examples():
    assert klain_complex_l1.klain_l1(1.0, 1.0).value == pytest.approx(1.0, abs=1e-12)
    assert klain_complex_l1.klain_l1(0.0, 0.0).value == pytest.approx(4 / np.pi)
    for psi in np.linspace(0.0, np.pi / 2, 5):
        expected = (np.cos(psi) + np.sin(psi)) ** 2
        assert klain_complex_l1.klain_l1(1.0, np.cos(2 * psi)).value == pytest.approx(expected, abs=1e-10)
        assert klain_complex_l1.klain_l1_orbit(0.0, psi).value == pytest.approx(expected, abs=1e-10)


def test_klain_methods_agree():
    for x, y in ((0.0, 0.99), (0.3, -0.2), (-0.5, 0.5)):
        elliptic = klain_complex_l1.klain_l1(x, y, "elliptic").value
        quadrature = klain_complex_l1.klain_l1(x, y, "quadrature")
        assert quadrature.value == pytest.approx(elliptic, abs=1e-10)
    series = klain_complex_l1.klain_l1(0.0, 0.99, "series")
    elliptic = klain_complex_l1.klain_l1(0.0, 0.99).value
    assert abs(series.value - elliptic) <= series.estimated_error + 1e-12
    with pytest.raises(ValueError):
        klain_complex_l1.klain_l1(0.0, 0.0, "monte-carlo")
    with pytest.raises(ValueError):
        klain_complex_l1.klain_l1(1.5, 0.0)


def test_orbit_and_height_forms_agree():
    theta, psi = 0.3, 0.5
    heights = klain_complex_l1.klain_l1(np.cos(theta), np.cos(theta + 2 * psi)).value
    for method in klain_complex_l1.KLAIN_METHODS:
        assert klain_complex_l1.klain_l1_orbit(theta, psi, method).value == pytest.approx(heights, abs=1e-6)


def test_crofton_measure_pairing():
    measure = klain_complex_l1.CroftonMeasureL1()
    assert measure.klain(Plane([1, 0, 0, 0], [0, 1, 0, 0])) == pytest.approx(1.0)
    theta, psi = 0.7, 0.3
    plane = orbit_representative(OrbitParams(theta, psi))
    expected = klain_complex_l1.klain_l1_orbit(theta, psi, "elliptic").value
    assert measure.klain(plane) == pytest.approx(expected, abs=1e-5)
    with pytest.raises(ValueError):
        klain_complex_l1.CroftonMeasureL1(atom_mass=0.0)


def test_volume_ratio():
    assert klain_complex_l1.volume_ratio(np.pi / 2, 2.0, 4.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        klain_complex_l1.volume_ratio(0.3, 0.0, 1.0)
    with pytest.raises(ValueError):
        klain_complex_l1.volume_ratio(0.3, 1.0, -1.0)


def test_klain_grid():
    frame = klain_complex_l1.klain_grid(5)
    assert list(frame.columns) == ["x", "y", "Kl", "method", "err"]
    assert len(frame) == 25
    corner = frame[(frame["x"] == 1.0) & (frame["y"] == 1.0)]
    assert corner["Kl"].item() == pytest.approx(1.0)
    center = frame[(frame["x"] == 0.0) & (frame["y"] == 0.0)]
    assert center["Kl"].item() == pytest.approx(4 / np.pi)
    # Kl is even under (x, y) -> (-x, -y) and symmetric under x <-> y
    values = frame["Kl"].to_numpy().reshape(5, 5)
    assert np.allclose(values, values[::-1, ::-1])
    assert np.allclose(values, values.T)


def test_klain_structure():
    moments, frame = klain_complex_l1.klain_structure_report(8, gauss_legendre(64), tolerance=1e-4)
    assert frame["passes"].all()
    assert moments[0, 0] > 0
    assert moments[1, 0] == pytest.approx(0.0, abs=1e-10)
    assert moments[3, 1] == pytest.approx(0.0, abs=1e-10)


if __name__ == "__main__":
    test_klain_examples()
    test_orbit_integral_three_ways()
    test_klain_grid()
