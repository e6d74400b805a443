"""The acceptance suite behind `torus-cosine verify`.

Each criterion is a function of the run configuration returning (passed, detail). The suite
runs them in order, times them and collects a table.
"""

from typing import Callable, List, Optional, Tuple
import logging
import time
import numpy as np
import pandas as pd

from torus_cosine.config import RunConfig
from torus_cosine.core_geometry import (
    OrbitParams,
    Plane,
    TorusElement,
    gluck_warner,
    gluck_warner_pairing,
    orbit_representative,
    pairing,
    reduce_to_orbit,
    self_dual_components,
    torus_act,
)
from torus_cosine.cosine_operator import annihilation_report, image_projection, self_adjointness_sweep
from torus_cosine.crofton_fredholm import (
    R2_NORMS,
    SECOND_KIND_KERNELS,
    SECOND_KIND_RHS,
    forward_profile,
    metric_from_r2_norm,
    solve_first_kind,
    solve_second_kind,
)
from torus_cosine.errors import SingularSystem
from torus_cosine.hermitian_range import (
    COMPLEX_METRICS,
    SAMPLE_FORM,
    halton_sample,
    hermitian_metric,
    is_hermitian_metric,
    moment_rank,
)
from torus_cosine.klain_complex_l1 import (
    abs_cos_integral,
    elliptic_series,
    klain_l1,
    klain_l1_orbit,
    klain_structure_report,
    orbit_integral_elliptic,
    orbit_integral_quadrature,
    orbit_modulus,
    series_I,
    series_I_tail_bound,
)
from torus_cosine.legendre_spectral import (
    delta_torus_coefficients,
    gauss_legendre,
    legendre_eval,
    max_abs,
    moments_2d,
)

logger = logging.getLogger(__name__)

Criterion = Callable[[RunConfig], Tuple[bool, str]]


def _random_plane(rng: np.random.Generator) -> Plane:
    return Plane(rng.normal(size=4), rng.normal(size=4))


def legendre_max_moments(config: RunConfig) -> Tuple[bool, str]:
    moments = moments_2d(max_abs, 4, gauss_legendre(config.quadrature_order))
    expected = {
        (0, 0): 8 / 3,
        (2, 0): 4 / 15,
        (0, 2): 4 / 15,
        (2, 2): -8 / 105,
        (2, 4): 4 / 315,
        (4, 2): 4 / 315,
        (4, 4): -8 / 693,
    }
    worst = max(abs(moments[index] - value) for index, value in expected.items())
    return worst <= 1e-9, f"max error {worst:.2e}"


def klain_examples(config: RunConfig) -> Tuple[bool, str]:
    plane_error = abs(klain_l1(1.0, 1.0).value - 1.0)
    line_error = 0.0
    for psi in np.linspace(0.0, np.pi / 2.0, 5):
        expected = (abs(np.cos(psi)) + abs(np.sin(psi))) ** 2
        line_error = max(
            line_error,
            abs(klain_l1(1.0, float(np.cos(2.0 * psi))).value - expected),
            abs(klain_l1_orbit(0.0, float(psi)).value - expected),
        )
    passed = plane_error <= 1e-10 and line_error <= 1e-6
    return passed, f"C x {{0}} error {plane_error:.2e}, complex line error {line_error:.2e}"


def elliptic_agreement(config: RunConfig) -> Tuple[bool, str]:
    step = np.pi / 12.0
    quadrature_error, series_error, bound_violation = 0.0, 0.0, 0.0
    for theta in np.arange(7) * step:
        for psi in np.arange(7) * step:
            if theta + 2.0 * psi > np.pi + 1e-12:
                continue
            quadrature = orbit_integral_quadrature(theta, psi)
            closed = orbit_integral_elliptic(theta, psi)
            quadrature_error = max(quadrature_error, abs(quadrature - closed) / max(abs(closed), 1e-12))
            _, k = orbit_modulus(theta, psi)
            if k * k <= 0.9:
                difference = abs(series_I(theta, psi) - closed)
                bound_violation = max(bound_violation, difference - series_I_tail_bound(theta, psi) - 1e-12)
                if k * k <= 0.75:
                    series_error = max(series_error, difference)
    constants = max(
        abs(abs_cos_integral(1.0, 0.0) - 8.0 * np.pi),
        abs(abs_cos_integral(1.0, 1.0) - 32.0),
        abs(abs_cos_integral(0.3, 0.0) - 8.0 * np.pi * 0.3),
        abs(abs_cos_integral(0.3, 0.3) - 32.0 * 0.3),
    )
    _, series_bound = elliptic_series(np.sqrt(0.5), 30)
    passed = quadrature_error <= 1e-8 and series_error <= 1e-6 and bound_violation <= 0.0 and constants <= 1e-8
    return passed, (
        f"quadrature {quadrature_error:.2e}, series {series_error:.2e} (k^2 <= 0.75), "
        f"tail bound slack {-bound_violation:.2e}, constants {constants:.2e}, E tail at k^2=0.5 {float(series_bound):.1e}"
    )


def kernel_annihilation(config: RunConfig) -> Tuple[bool, str]:
    indices = [(4, 0), (0, 4), (6, 2), (2, 6), (6, 0), (2, 0)]
    report = annihilation_report(
        indices, order=config.quadrature_order, annihilation=config.tolerance("annihilation")
    )
    worst = report.loc[report["kind"] == "kernel", "norm"].max()
    image = report.loc[report["kind"] == "image", "norm"].min()
    return bool(report["pass"].all()), f"largest kernel norm {worst:.2e}, image norm {image:.2e}"


def self_adjointness(config: RunConfig) -> Tuple[bool, str]:
    sweep = self_adjointness_sweep(pairs=20, degree=6, seed=config.seed)
    return bool(sweep["pass"].all()), f"largest defect {sweep['defect'].max():.2e}"


def klain_signature(config: RunConfig) -> Tuple[bool, str]:
    _, frame = klain_structure_report(
        8, gauss_legendre(config.quadrature_order), tolerance=config.tolerance("kernel_moment")
    )
    worst = frame.loc[frame["kernel_index"], "relative"].max()
    return bool(frame["passes"].all()), f"largest kernel index moment {worst:.2e}"


def fredholm_second_kind(config: RunConfig) -> Tuple[bool, str]:
    solution = solve_second_kind(1.0, SECOND_KIND_KERNELS["xy"], SECOND_KIND_RHS["x"], n=32)
    error = float(np.max(np.abs(solution.values - 1.5 * solution.nodes)))
    try:
        solve_second_kind(1.0 / 3.0, SECOND_KIND_KERNELS["xy"], SECOND_KIND_RHS["x"], n=32)
        alternative, inner = False, 0.0
    except SingularSystem as error_record:
        alternative, inner = True, error_record.inner_product
    solvable = solve_second_kind(1.0 / 3.0, SECOND_KIND_KERNELS["xy"], SECOND_KIND_RHS["orth_x"], n=32)
    passed = error <= 1e-10 and alternative and abs(inner) > 0 and solvable.residual <= 1e-8
    return passed, f"phi error {error:.2e}, <psi, f> = {inner:.3e}, orthogonal residual {solvable.residual:.1e}"


def crofton_inversion(config: RunConfig) -> Tuple[bool, str]:
    def density(eta):
        return 1.0 + 0.5 * np.cos(2.0 * eta)

    recovered = solve_first_kind(forward_profile(density, 64), n=64)
    exact = density(recovered.nodes)
    round_trip = float(np.linalg.norm(recovered.density - exact) / np.linalg.norm(exact))
    euclid = solve_first_kind(metric_from_r2_norm(R2_NORMS["euclid"], "euclid"), n=64)
    l1 = solve_first_kind(metric_from_r2_norm(R2_NORMS["l1"], "l1"), n=64)
    passed = round_trip <= 1e-4 and euclid.residual <= 1e-3 and l1.residual <= 1e-3
    return passed, f"round trip {round_trip:.2e}, euclid residual {euclid.residual:.2e}, l1 residual {l1.residual:.2e}"


def orbit_machinery(config: RunConfig) -> Tuple[bool, str]:
    rng = np.random.default_rng(config.seed)
    round_trip, closed_form, identity = 0.0, 0.0, 0.0
    for _ in range(100):
        theta = rng.uniform(0.0, np.pi / 2.0)
        psi = rng.uniform(0.0, min(np.pi / 2.0, (np.pi - theta) / 2.0))
        alpha, beta = rng.uniform(0.0, 2.0 * np.pi, 2)
        plane = torus_act(TorusElement(alpha, beta), orbit_representative(OrbitParams(theta, psi)))
        params, element = reduce_to_orbit(plane)
        round_trip = max(round_trip, abs(params.theta - theta), abs(params.psi - psi))
        round_trip = max(round_trip, torus_act(element, orbit_representative(params)).distance(plane))

        iota1, iota2 = self_dual_components(plane)
        total = theta + 2.0 * psi
        expected1 = [np.cos(theta), -np.sin(theta) * np.sin(alpha + beta), np.sin(theta) * np.cos(alpha + beta)]
        expected2 = [np.cos(total), np.sin(total) * np.sin(alpha - beta), np.sin(total) * np.cos(alpha - beta)]
        closed_form = max(closed_form, np.max(np.abs(iota1 - expected1)), np.max(np.abs(iota2 - expected2)))

        p, q = _random_plane(rng), _random_plane(rng)
        identity = max(identity, abs(pairing(p, q) - gluck_warner_pairing(gluck_warner(p), gluck_warner(q))))
    passed = round_trip <= 1e-9 and closed_form <= 1e-12 and identity <= 1e-12
    return passed, f"round trip {round_trip:.2e}, closed forms {closed_form:.2e}, pairing identity {identity:.2e}"


def hermitian_characterization(config: RunConfig) -> Tuple[bool, str]:
    tolerance = config.tolerance("hermitian")
    euclid, euclid_residual, _ = is_hermitian_metric(COMPLEX_METRICS["euclid"], 2, tolerance, seed=config.seed)
    synthetic, synthetic_residual, _ = is_hermitian_metric(
        hermitian_metric(SAMPLE_FORM), 2, tolerance, seed=config.seed
    )
    l1, l1_residual, _ = is_hermitian_metric(COMPLEX_METRICS["l1"], 2, tolerance, seed=config.seed)
    ranks = [moment_rank(halton_sample(n, 200, config.seed)) for n in (2, 3)]
    passed = euclid and synthetic and not l1 and l1_residual >= 1e-2 and ranks == [4, 9]
    return passed, (
        f"euclid {euclid_residual:.1e}, hermitian {synthetic_residual:.1e}, l1 {l1_residual:.3f}, ranks {ranks}"
    )


def delta_expansion(config: RunConfig) -> Tuple[bool, str]:
    coefficients = delta_torus_coefficients(5, 5)
    error = 0.0
    for k in range(6):
        for l in range(6):
            expected = legendre_eval(2 * k, 0.0) * legendre_eval(2 * l, 0.0) * (4 * k + 1) * (4 * l + 1) / 4.0
            error = max(error, abs(coefficients[2 * k, 2 * l] - expected))
    kept = image_projection(coefficients).entries != 0.0
    m, n = np.indices(kept.shape)
    pattern = (m % 2 == 0) & (n % 2 == 0) & (np.abs(m - n) // 2 <= 1)
    passed = error <= 1e-14 and bool(np.array_equal(kept, pattern))
    return passed, f"coefficient error {error:.1e}, pattern {'matches' if np.array_equal(kept, pattern) else 'differs'}"


CRITERIA: List[Tuple[int, str, Criterion]] = [
    (1, "Legendre moments of max(|x|,|y|)", legendre_max_moments),
    (2, "Klain examples", klain_examples),
    (3, "Elliptic three-way agreement", elliptic_agreement),
    (4, "Kernel annihilation", kernel_annihilation),
    (5, "Self-adjointness", self_adjointness),
    (6, "Klain spectral signature", klain_signature),
    (7, "Fredholm second kind", fredholm_second_kind),
    (8, "Crofton inversion", crofton_inversion),
    (9, "Orbit machinery", orbit_machinery),
    (10, "Hermitian characterization", hermitian_characterization),
    (11, "Delta expansion", delta_expansion),
]


def run_acceptance(config: Optional[RunConfig] = None, only: Optional[List[int]] = None) -> pd.DataFrame:
    """Runs the acceptance criteria in order.

    Args:
        config (RunConfig, optional): Settings for the run. Defaults to RunConfig().
        only (List[int], optional): Criterion numbers to run. Defaults to all.

    Returns:
        pd.DataFrame: Columns criterion, name, passed, detail, seconds.
    """
    config = config if config is not None else RunConfig()
    records = []
    for number, name, check in CRITERIA:
        if only is not None and number not in only:
            continue
        start = time.perf_counter()
        try:
            passed, detail = check(config)
        except Exception as error:
            logger.exception(f"Criterion {number} ({name}) raised")
            passed, detail = False, f"{type(error).__name__}: {error}"
        seconds = time.perf_counter() - start
        logger.info(f"Criterion {number} {'passed' if passed else 'FAILED'} in {seconds:.2f} s: {detail}")
        records.append({"criterion": number, "name": name, "passed": bool(passed), "detail": detail, "seconds": seconds})
    return pd.DataFrame.from_records(records, columns=["criterion", "name", "passed", "detail", "seconds"])
