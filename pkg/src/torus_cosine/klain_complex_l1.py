"""The Klain function of the Holmes-Thompson area of the complex l1 norm on C^2.

Its Crofton measure is a unit atom at each of C x {0} and {0} x C plus the constant density
1/(4 pi) on the torus family T. Evaluated on a plane with Gluck-Warner heights (x, y) this gives

    Kl(x, y) = (|x + y| + |x - y|) / 2 + I'(sqrt(1 - x^2), sqrt(1 - y^2)) / (8 pi)

where I'(a, b) is the double integral of |a cos u + b cos v| over the torus. On the orbit
representative (theta, psi) the same value reads

    |cos(theta + psi) cos psi| + |sin(theta + psi) sin psi| + I(theta, psi) / (4 pi)

with I'(sin theta, sin(theta + 2 psi)) = 2 I(theta, psi).
"""

from dataclasses import dataclass
from typing import Tuple
import logging
import warnings
import numpy as np
import pandas as pd
from scipy.special import binom, ellipe

from torus_cosine.core_geometry import Plane, orthonormalize, pairing
from torus_cosine.errors import SlowConvergence
from torus_cosine.legendre_spectral import MomentMatrix, QuadratureRule, gauss_legendre, moments_2d

logger = logging.getLogger(__name__)

ELLIPTIC_METHODS = ("agm", "series", "scipy")
KLAIN_METHODS = ("quadrature", "elliptic", "series")

# Series use is restricted to k^2 below this switchover
SERIES_SWITCHOVER = 0.95
DEFAULT_SERIES_TERMS = 30
DEFAULT_ORBIT_ORDER = 256

TORUS_DENSITY = 1.0 / (4.0 * np.pi)


# ===== Complete elliptic integral of the second kind =====


def _check_modulus(k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if np.any(k < 0.0) or np.any(k > 1.0):
        raise ValueError("The modulus k must lie in [0, 1]")
    return k


def elliptic_e_agm(k) -> np.ndarray:
    """E(k) by the arithmetic-geometric mean, E = K (1 - sum 2^(n-1) c_n^2)."""
    k = _check_modulus(k)
    a = np.ones_like(k)
    b = np.sqrt(1.0 - k * k)
    c = k.copy()
    total = 0.5 * c * c
    power = 0.5
    for _ in range(64):
        a, b, c = (a + b) / 2.0, np.sqrt(a * b), (a - b) / 2.0
        power *= 2.0
        total = total + power * c * c
        if np.all(np.abs(np.where(k < 1.0, c, 0.0)) <= np.finfo(float).eps * a):
            break
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.pi / (2.0 * a) * (1.0 - total)
    return np.where(k >= 1.0, 1.0, value)


def elliptic_series(k, terms: int = DEFAULT_SERIES_TERMS) -> Tuple[np.ndarray, np.ndarray]:
    """The binomial series (pi/2) sum_m binom(-1/2, m)^2 k^(2m) / (1 - 2m), truncated.

    Successive terms shrink by at least a factor k^2, so the omitted tail is bounded by the
    first omitted term divided by (1 - k^2).

    Args:
        k (float or np.ndarray): The modulus in [0, 1).
        terms (int, optional): Number of terms kept. Defaults to 30.

    Returns:
        Tuple[np.ndarray, np.ndarray]: (value, tail_bound)
    """
    if terms < 1:
        raise ValueError(f"terms must be positive, got {terms}")
    k = _check_modulus(k)
    k2 = k * k
    m = np.arange(terms + 1)
    coefficients = binom(-0.5, m) ** 2 / (1.0 - 2.0 * m)
    powers = np.asarray(k2)[..., None] ** m
    series = np.pi / 2.0 * powers * coefficients
    value = series[..., :terms].sum(axis=-1)
    with np.errstate(divide="ignore"):
        bound = np.abs(series[..., terms]) / (1.0 - k2)
    return value, bound


def complete_elliptic_e(k, method: str = "agm"):
    """The complete elliptic integral of the second kind E(k) = int_0^{pi/2} sqrt(1 - k^2 sin^2 t) dt.

    Args:
        k (float or np.ndarray): The modulus in [0, 1].
        method (str, optional): "agm", "series" or "scipy". The series delegates to the
            AGM iteration for k^2 > 0.95 with a SlowConvergence warning. Defaults to "agm".

    Raises:
        ValueError: If k is outside [0, 1] or the method is unknown.

    Returns:
        float or np.ndarray: E(k), matching the shape of k.
    """
    k = _check_modulus(k)
    if method == "agm":
        value = elliptic_e_agm(k)
    elif method == "scipy":
        value = ellipe(k * k)
    elif method == "series":
        slow = k * k > SERIES_SWITCHOVER
        if np.any(slow):
            warnings.warn(
                f"Series requested at k^2 > {SERIES_SWITCHOVER}; using the AGM iteration there",
                SlowConvergence,
                stacklevel=2,
            )
        value, _ = elliptic_series(np.where(slow, 0.0, k))
        value = np.where(slow, elliptic_e_agm(k), value)
    else:
        raise ValueError(f"Unknown elliptic method {method!r}, expected one of {ELLIPTIC_METHODS}")
    return float(value) if np.ndim(value) == 0 else value


# ===== Torus integrals =====


def abs_cos_integral(a, b, method: str = "agm"):
    """I'(a, b) = int_0^{2pi} int_0^{2pi} |a cos u + b cos v| du dv = 16 (a + b) E(2 sqrt(ab) / (a + b)).

    Args:
        a (float or np.ndarray): Nonnegative amplitude.
        b (float or np.ndarray): Nonnegative amplitude.
        method (str, optional): Passed to complete_elliptic_e. Defaults to "agm".

    Returns:
        float or np.ndarray: The integral; I'(0, 0) = 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise ValueError("Amplitudes must be nonnegative")
    total = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(total > 0.0, 2.0 * np.sqrt(a * b) / np.where(total > 0.0, total, 1.0), 0.0)
    value = 16.0 * total * np.asarray(complete_elliptic_e(np.clip(k, 0.0, 1.0), method))
    return float(value) if np.ndim(value) == 0 else value


def abs_cos_integral_quadrature(a: float, b: float, order: int = DEFAULT_ORBIT_ORDER) -> float:
    """I'(a, b) by Gauss-Legendre quadrature, independent of any elliptic routine.

    The inner integral is exact, leaving
    32 int_0^{pi/2} sqrt(((a+b)/2)^2 cos^2 t + ((a-b)/2)^2 sin^2 t) dt.
    """
    half_sum, half_difference = (a + b) / 2.0, (a - b) / 2.0
    rule = gauss_legendre(order)
    return 32.0 * rule.integrate(
        lambda t: np.sqrt((half_sum * np.cos(t)) ** 2 + (half_difference * np.sin(t)) ** 2),
        0.0,
        np.pi / 2.0,
    )


def _orbit_amplitudes(theta: float, psi: float) -> Tuple[float, float]:
    # P - Q = sin(theta), P + Q = sin(theta + 2 psi)
    return np.cos(psi) * np.sin(theta + psi), np.sin(psi) * np.cos(theta + psi)


def orbit_integral_quadrature(theta: float, psi: float, order: int = DEFAULT_ORBIT_ORDER) -> float:
    """I(theta, psi) = int int |P cos x sin y + Q sin x cos y| dx dy over the torus.

    P = cos(psi) sin(theta + psi) and Q = sin(psi) cos(theta + psi). The y integral is done in
    closed form, the x integral by an `order` point Gauss-Legendre rule.
    """
    p, q = _orbit_amplitudes(theta, psi)
    rule = gauss_legendre(order)
    return 16.0 * rule.integrate(
        lambda x: np.sqrt((p * np.cos(x)) ** 2 + (q * np.sin(x)) ** 2), 0.0, np.pi / 2.0
    )


def orbit_modulus(theta: float, psi: float) -> Tuple[float, float]:
    p, q = np.abs(_orbit_amplitudes(theta, psi))
    lead, tail = max(p, q), min(p, q)
    if lead == 0.0:
        return 0.0, 0.0
    return lead, float(np.sqrt(max(0.0, 1.0 - (tail / lead) ** 2)))


def orbit_integral_elliptic(theta: float, psi: float, method: str = "agm") -> float:
    """I(theta, psi) = 16 A E(k) with A = cos(psi) sin(theta + psi), k^2 = sin(theta) sin(theta + 2 psi) / A^2.

    For parameters with |Q| > |P| the roles of P and Q are swapped.
    """
    lead, k = orbit_modulus(theta, psi)
    return 16.0 * lead * float(complete_elliptic_e(k, method))


def fold_series_domain(theta: float, psi: float) -> Tuple[float, float]:
    """Maps (theta, psi) with theta + 2 psi > pi to (theta + 2 psi - pi, pi - theta - psi).

    The map swaps |P| and |Q|, so I is unchanged, and lands in theta + 2 psi <= pi.
    Parameters already in that region are returned as they are.
    """
    if theta + 2.0 * psi <= np.pi:
        return theta, psi
    return theta + 2.0 * psi - np.pi, np.pi - theta - psi


def series_I(theta: float, psi: float, terms: int = DEFAULT_SERIES_TERMS) -> float:
    """I(theta, psi) from the binomial series of E in k^2 = sin(theta) sin(theta + 2 psi) / A^2.

    Parameters with theta + 2 psi > pi are first folded back by `fold_series_domain`.
    Delegates to the AGM iteration with a SlowConvergence warning when k^2 > 0.95.
    """
    folded = fold_series_domain(theta, psi)
    if folded != (theta, psi):
        logger.debug(f"Folded ({theta:.6g}, {psi:.6g}) to ({folded[0]:.6g}, {folded[1]:.6g})")
        theta, psi = folded
    lead, k = orbit_modulus(theta, psi)
    if k * k > SERIES_SWITCHOVER:
        warnings.warn(
            f"k^2 = {k * k:.4f} exceeds {SERIES_SWITCHOVER}; using the AGM iteration",
            SlowConvergence,
            stacklevel=2,
        )
        return 16.0 * lead * float(elliptic_e_agm(k))
    value, _ = elliptic_series(k, terms)
    return 16.0 * lead * float(value)


def series_I_tail_bound(theta: float, psi: float, terms: int = DEFAULT_SERIES_TERMS) -> float:
    """Upper bound on |series_I - I| from the geometric tail estimate."""
    lead, k = orbit_modulus(theta, psi)
    _, bound = elliptic_series(k, terms)
    return 16.0 * lead * float(bound)


# ===== Klain function =====


@dataclass(frozen=True)
class KlainValue:
    value: float
    method: str
    estimated_error: float = 0.0


@dataclass(frozen=True)
class CroftonMeasureL1:
    """Unit atoms at C x {0} and {0} x C plus a constant density on the torus family."""

    atom_mass: float = 1.0
    torus_density: float = TORUS_DENSITY

    def __post_init__(self):
        if self.atom_mass <= 0 or self.torus_density <= 0:
            raise ValueError("Masses of the Crofton measure must be positive")

    def klain(self, p: Plane, order: int = 512) -> float:
        """Integrates the pairing with p against the measure.

        The torus part sums |<P, span((e^{ia}, 0), (0, e^{ib}))>| over b in closed form and over
        a with an `order` point periodic trapezoid rule.
        """
        atoms = pairing(p, Plane([1, 0, 0, 0], [0, 1, 0, 0])) + pairing(p, Plane([0, 0, 1, 0], [0, 0, 0, 1]))
        u = orthonormalize(p).basis()
        a = np.linspace(0.0, 2.0 * np.pi, order, endpoint=False)
        u0 = np.cos(a) * u[0, 0] + np.sin(a) * u[1, 0]
        u1 = np.cos(a) * u[0, 1] + np.sin(a) * u[1, 1]
        alpha = u0 * u[2, 1] - u1 * u[2, 0]
        beta = u0 * u[3, 1] - u1 * u[3, 0]
        torus = 4.0 * np.mean(np.hypot(alpha, beta)) * 2.0 * np.pi
        return self.atom_mass * atoms + self.torus_density * float(torus)


def _klain_array(x: np.ndarray, y: np.ndarray, elliptic: str = "agm") -> np.ndarray:
    atoms = (np.abs(x + y) + np.abs(x - y)) / 2.0
    a = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    b = np.sqrt(np.clip(1.0 - y * y, 0.0, None))
    return atoms + np.asarray(abs_cos_integral(a, b, elliptic)) / (8.0 * np.pi)


def klain_function(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized Kl(x, y) through the AGM closed form."""
    return _klain_array(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def klain_l1(x: float, y: float, method: str = "elliptic", terms: int = DEFAULT_SERIES_TERMS) -> KlainValue:
    """Kl(x, y) for Gluck-Warner heights x, y in [-1, 1].

    Args:
        x (float): Height on the first sphere.
        y (float): Height on the second sphere.
        method (str, optional): "elliptic", "series" or "quadrature". Defaults to "elliptic".
        terms (int, optional): Series terms for the "series" method. Defaults to 30.

    Returns:
        KlainValue: The value and an error estimate for the chosen method.
    """
    if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
        raise ValueError(f"Heights must lie in [-1, 1], got ({x}, {y})")
    atoms = (abs(x + y) + abs(x - y)) / 2.0
    a = float(np.sqrt(max(0.0, 1.0 - x * x)))
    b = float(np.sqrt(max(0.0, 1.0 - y * y)))
    scale = 1.0 / (8.0 * np.pi)
    if method == "elliptic":
        integral = abs_cos_integral(a, b)
        error = 1e-15 * max(integral, 1.0)
    elif method == "quadrature":
        integral = abs_cos_integral_quadrature(a, b)
        error = abs(integral - abs_cos_integral_quadrature(a, b, DEFAULT_ORBIT_ORDER // 2))
    elif method == "series":
        total = a + b
        k = 2.0 * np.sqrt(a * b) / total if total > 0 else 0.0
        k = min(k, 1.0)
        if k * k > SERIES_SWITCHOVER:
            integral = abs_cos_integral(a, b, "series")
            error = 1e-15 * max(integral, 1.0)
        else:
            value, bound = elliptic_series(k, terms)
            integral = 16.0 * total * float(value)
            error = 16.0 * total * float(bound)
    else:
        raise ValueError(f"Unknown Klain method {method!r}, expected one of {KLAIN_METHODS}")
    return KlainValue(atoms + scale * integral, method, scale * error)


def klain_l1_orbit(theta: float, psi: float, method: str = "quadrature") -> KlainValue:
    """Kl on the orbit representative of (theta, psi)."""
    atoms = abs(np.cos(theta + psi) * np.cos(psi)) + abs(np.sin(theta + psi) * np.sin(psi))
    if method == "quadrature":
        integral = orbit_integral_quadrature(theta, psi)
        error = abs(integral - orbit_integral_quadrature(theta, psi, DEFAULT_ORBIT_ORDER // 2))
    elif method == "elliptic":
        integral = orbit_integral_elliptic(theta, psi)
        error = 1e-15 * max(integral, 1.0)
    elif method == "series":
        integral = series_I(theta, psi)
        error = series_I_tail_bound(theta, psi)
    else:
        raise ValueError(f"Unknown Klain method {method!r}, expected one of {KLAIN_METHODS}")
    return KlainValue(float(atoms + integral / (4.0 * np.pi)), method, float(error / (4.0 * np.pi)))


def volume_ratio(theta: float, kl: float, c: float) -> float:
    """c sin^2(theta) / Kl^2, the density relating HT^4 of Minkowski sums to HT^2 areas.

    Raises:
        ValueError: If kl or c is not positive.
    """
    if kl <= 0:
        raise ValueError(f"kl must be positive, got {kl}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    return c * np.sin(theta) ** 2 / kl**2


def klain_grid(size: int, method: str = "elliptic") -> pd.DataFrame:
    """Tabulates Kl on the size x size grid linspace(-1, 1, size)^2, x varying slowest."""
    if size < 1:
        raise ValueError(f"Grid size must be positive, got {size}")
    points = np.linspace(-1.0, 1.0, size)
    records = []
    for x in points:
        for y in points:
            value = klain_l1(float(x), float(y), method)
            records.append(
                {"x": float(x), "y": float(y), "Kl": value.value, "method": method, "err": value.estimated_error}
            )
    return pd.DataFrame.from_records(records, columns=["x", "y", "Kl", "method", "err"])


def klain_structure_report(
    degree: int, rule: QuadratureRule = None, tolerance: float = 1e-4
) -> Tuple[MomentMatrix, pd.DataFrame]:
    """Raw Legendre moments of Kl with a verdict for every kernel index.

    Kernel indices are even (m, n) with |m - n| >= 4; their moments must be at most
    `tolerance` relative to M[0, 0]. Other entries are reported without a verdict.

    Returns:
        Tuple[MomentMatrix, pd.DataFrame]: The moments and a table with columns
        m, n, moment, relative, kernel_index, passes.
    """
    if degree > 12:
        logger.warning(f"Klain structure report at degree {degree} is expensive")
    moments = moments_2d(klain_function, degree, rule)
    frame = moments.to_frame()
    frame["relative"] = frame["moment"].abs() / abs(moments[0, 0])
    even = (frame["m"] % 2 == 0) & (frame["n"] % 2 == 0)
    frame["kernel_index"] = even & ((frame["m"] - frame["n"]).abs() >= 4)
    frame["passes"] = ~frame["kernel_index"] | (frame["relative"] <= tolerance)
    failing = frame[~frame["passes"]]
    if len(failing):
        logger.warning(f"{len(failing)} kernel index moments of Kl exceed {tolerance:g}")
    return moments, frame
