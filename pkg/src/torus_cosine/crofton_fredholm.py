"""Nystrom solvers for Fredholm equations and Crofton densities of torus invariant metrics.

A torus invariant norm F on C^2 is determined by its profile F(eta) = F(cos eta, sin eta) on
[0, pi/2]. Its Crofton density f solves the first kind equation

    int_0^{pi/2} K(eta, eta') f(eta) w(eta) d eta = F(eta'),   K(eta, eta') = I'(cos eta cos eta', sin eta sin eta')

with w(eta) = sin(eta) cos(eta) (volume of the torus orbit in S^3) or w = 1.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple
import logging
import os
import warnings
import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from torus_cosine.errors import IllConditioned, NotHomogeneous, SingularSystem
from torus_cosine.klain_complex_l1 import abs_cos_integral
from torus_cosine.legendre_spectral import gauss_legendre

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
ORTHOGONALITY_TOLERANCE = 1e-8
HOMOGENEITY_SCALES = (0.5, 2.0, 10.0)
HOMOGENEITY_TOLERANCE = 1e-10
DEFAULT_REGULARIZATION = 1e-10
REGULARIZATION_GRID = tuple(10.0**-k for k in range(2, 13))
WEIGHTS = ("sphere", "flat")

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]
Function = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MetricProfile:
    """F(eta) for eta in [0, pi/2], the restriction of a torus invariant norm."""

    values: Function
    label: str = "F"

    def __call__(self, eta) -> np.ndarray:
        return np.asarray(self.values(np.asarray(eta, dtype=float)), dtype=float)


@dataclass(frozen=True)
class NystromSystem:
    """A kernel discretized on Gauss-Legendre nodes of an interval."""

    nodes: np.ndarray
    weights: np.ndarray
    kernel_matrix: np.ndarray

    def operator(self) -> np.ndarray:
        """The matrix of phi -> int K(., y) phi(y) dy on the nodes."""
        return self.kernel_matrix * self.weights[None, :]

    def is_symmetric(self, tolerance: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.kernel_matrix))))
        return bool(np.max(np.abs(self.kernel_matrix - self.kernel_matrix.T)) <= tolerance * scale)


def nystrom_system(kernel: Kernel, interval: Tuple[float, float], n: int) -> NystromSystem:
    """Discretizes the kernel on n Gauss-Legendre nodes mapped onto the interval."""
    nodes, weights = gauss_legendre(n).mapped(*interval)
    matrix = np.asarray(kernel(nodes[:, None], nodes[None, :]), dtype=float)
    matrix = np.broadcast_to(matrix, (n, n)).copy()
    if not np.all(np.isfinite(matrix)):
        raise ValueError("Kernel produced non-finite values on the nodes")
    return NystromSystem(nodes, weights, matrix)


# ===== Surjectivity kernel =====


def surjectivity_kernel(eta, eta_bar, method: str = "agm"):
    """K(eta, eta') = I'(cos eta cos eta', sin eta sin eta') for eta, eta' in [0, pi/2]."""
    eta = np.asarray(eta, dtype=float)
    eta_bar = np.asarray(eta_bar, dtype=float)
    a = np.abs(np.cos(eta) * np.cos(eta_bar))
    b = np.abs(np.sin(eta) * np.sin(eta_bar))
    return abs_cos_integral(a, b, method)


def orbit_weight(eta: np.ndarray, weight: str = "sphere") -> np.ndarray:
    if weight == "sphere":
        return np.sin(eta) * np.cos(eta)
    if weight == "flat":
        return np.ones_like(eta)
    raise ValueError(f"Unknown weight {weight!r}, expected one of {WEIGHTS}")


# ===== Second kind =====


@dataclass(frozen=True)
class SecondKindSolution:
    lam: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    residual: float
    condition: float
    kernel: Kernel
    rhs: Function

    def __call__(self, x) -> np.ndarray:
        """Nystrom interpolation phi(x) = (f(x) + int K(x, y) phi(y) dy) / lam."""
        x = np.asarray(x, dtype=float)
        integral = np.asarray(self.kernel(x[..., None], self.nodes), dtype=float) @ (self.weights * self.values)
        return (np.asarray(self.rhs(x), dtype=float) + integral) / self.lam

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"x": self.nodes, "phi": self.values})


def solve_second_kind(
    lam: float,
    kernel: Kernel,
    rhs: Function,
    n: int = 32,
    interval: Tuple[float, float] = (0.0, 1.0),
    condition_limit: float = CONDITION_LIMIT,
    orthogonality: float = ORTHOGONALITY_TOLERANCE,
) -> SecondKindSolution:
    """Solves lam phi(x) - int K(x, y) phi(y) dy = f(x) by the Nystrom method.

    When lam is numerically an eigenvalue (condition above `condition_limit`) the Fredholm
    alternative applies: with psi the L2 normalized null vector of the adjoint system, the
    equation is solvable iff <psi, f> = 0, and the minimum norm solution is returned.

    Args:
        lam (float): The nonzero spectral parameter.
        kernel (Kernel): K(x, y), vectorized.
        rhs (Function): f(x), vectorized.
        n (int, optional): Number of Gauss-Legendre nodes. Defaults to 32.
        interval (Tuple[float, float], optional): The interval [a, b]. Defaults to (0, 1).

    Raises:
        SingularSystem: If lam is an eigenvalue and <psi, f> does not vanish.

    Returns:
        SecondKindSolution: Node values, residual and condition number.
    """
    if lam == 0:
        raise ValueError("lam must be nonzero for a second kind equation")
    system = nystrom_system(kernel, interval, n)
    f = np.broadcast_to(np.asarray(rhs(system.nodes), dtype=float), system.nodes.shape)
    matrix = lam * np.eye(n) - system.operator()
    left, singular, _ = np.linalg.svd(matrix)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf")

    if condition > condition_limit:
        psi = left[:, -1] / system.weights
        psi = psi / np.sqrt(np.sum(system.weights * psi * psi))
        inner = float(np.sum(system.weights * psi * f))
        f_norm = float(np.sqrt(np.sum(system.weights * f * f)))
        logger.info(f"lam = {lam} is an eigenvalue (condition {condition:.3e}), <psi, f> = {inner:.3e}")
        if abs(inner) > orthogonality * max(f_norm, 1e-300):
            raise SingularSystem(inner, condition, psi)
        values = np.linalg.lstsq(matrix, f, rcond=None)[0]
    else:
        values = np.linalg.solve(matrix, f)

    residual = float(np.max(np.abs(matrix @ values - f)))
    return SecondKindSolution(lam, system.nodes, system.weights, values, residual, condition, kernel, rhs)


# ===== First kind =====


@dataclass(frozen=True)
class FirstKindSolution:
    nodes: np.ndarray
    density: np.ndarray
    residual: float
    residual_l2: float
    condition: float
    reg: float
    weight: str

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"eta": self.nodes, "f": self.density})

    def diagnostics(self) -> Dict[str, float]:
        return {
            "residual": self.residual,
            "residual_l2": self.residual_l2,
            "condition": self.condition,
            "reg": self.reg,
            "weight": self.weight,
        }


def first_kind_matrix(n: int, weight: str = "sphere", sources: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The matrix A[i, j] = K(eta'_i, eta_j) w_j omega(eta_j) on [0, pi/2].

    Rows use n target nodes; columns use `sources` nodes (default n).

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: (matrix, target nodes, source nodes)
    """
    targets, _ = gauss_legendre(n).mapped(0.0, np.pi / 2.0)
    nodes, weights = gauss_legendre(sources or n).mapped(0.0, np.pi / 2.0)
    kernel = surjectivity_kernel(targets[:, None], nodes[None, :])
    return kernel * (weights * orbit_weight(nodes, weight))[None, :], targets, nodes


def _tikhonov(left: np.ndarray, singular: np.ndarray, right_t: np.ndarray, data: np.ndarray, reg: float) -> np.ndarray:
    if reg > 0:
        filtered = singular / (singular * singular + reg)
    else:
        filtered = np.where(singular > singular[0] * 1e-15, 1.0 / np.where(singular > 0, singular, 1.0), 0.0)
    return right_t.T @ (filtered * (left.T @ data))


def quadrature_error_estimate(n: int, weight: str = "sphere") -> float:
    """Relative change of A applied to the constant density when the source nodes are doubled."""
    coarse, _, _ = first_kind_matrix(n, weight)
    fine, _, _ = first_kind_matrix(n, weight, sources=2 * n)
    a = coarse.sum(axis=1)
    b = fine.sum(axis=1)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def solve_first_kind(
    profile: MetricProfile,
    n: int = 64,
    reg: Optional[float] = None,
    weight: str = "sphere",
    discrepancy: bool = False,
    condition_limit: float = CONDITION_LIMIT,
) -> FirstKindSolution:
    """Finds a Crofton density for the profile by Tikhonov regularized least squares.

    Minimizes ||A f - F||^2 + reg ||f||^2 through the SVD of A. Without an explicit reg the
    system is solved unregularized while its condition stays below `condition_limit`, and with
    DEFAULT_REGULARIZATION past it. With `discrepancy` set, reg is the largest value of
    REGULARIZATION_GRID whose residual is within twice the quadrature error.

    Args:
        profile (MetricProfile): The values F(eta).
        n (int, optional): Number of nodes. Defaults to 64.
        reg (float, optional): Regularization parameter, >= 0. Defaults to None (automatic).
        weight (str, optional): "sphere" for sin(eta) cos(eta), "flat" for 1. Defaults to "sphere".
        discrepancy (bool, optional): Whether to select reg by the discrepancy principle. Defaults to False.
        condition_limit (float, optional): Condition above which the system counts as ill posed. Defaults to 1e12.

    Raises:
        ValueError: If reg is negative or the profile is not positive.

    Returns:
        FirstKindSolution: The density on the nodes and its diagnostics.
    """
    if reg is not None and reg < 0:
        raise ValueError(f"reg must be nonnegative, got {reg}")
    matrix, targets, nodes = first_kind_matrix(n, weight)
    data = profile(targets)
    if np.any(data <= 0):
        raise ValueError(f"Profile {profile.label} must be positive on [0, pi/2]")
    left, singular, right_t = np.linalg.svd(matrix)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else float("inf")
    ill_posed = condition > condition_limit
    if ill_posed:
        warnings.warn(
            f"First kind system has condition {condition:.3e}; the unregularized problem is ill posed",
            IllConditioned,
            stacklevel=2,
        )

    def fit(value: float) -> Tuple[np.ndarray, np.ndarray]:
        density = _tikhonov(left, singular, right_t, data, value)
        return density, matrix @ density - data

    if discrepancy:
        target = 2.0 * quadrature_error_estimate(n, weight)
        chosen = REGULARIZATION_GRID[-1]
        for candidate in REGULARIZATION_GRID:
            _, misfit = fit(candidate)
            if np.max(np.abs(misfit)) / np.max(np.abs(data)) <= target:
                chosen = candidate
                break
        logger.info(f"Discrepancy principle chose reg = {chosen:g} (target residual {target:.3e})")
        reg = chosen
    elif reg is None:
        reg = DEFAULT_REGULARIZATION if ill_posed else 0.0
        logger.info(f"Condition {condition:.3e} against limit {condition_limit:.1e}, using reg = {reg:g}")

    density, misfit = fit(reg)
    residual = float(np.max(np.abs(misfit)) / np.max(np.abs(data)))
    residual_l2 = float(np.linalg.norm(misfit) / np.linalg.norm(data))
    return FirstKindSolution(nodes, density, residual, residual_l2, condition, reg, weight)


def forward_profile(density: Function, n: int = 64, weight: str = "sphere") -> MetricProfile:
    """The profile F = A f produced by a density, evaluated through the n node rule."""
    nodes, weights = gauss_legendre(n).mapped(0.0, np.pi / 2.0)
    scaled = weights * orbit_weight(nodes, weight) * np.asarray(density(nodes), dtype=float)

    def values(eta: np.ndarray) -> np.ndarray:
        return surjectivity_kernel(np.asarray(eta)[..., None], nodes) @ scaled

    return MetricProfile(values, "forward")


# ===== Norms =====


def euclidean_norm(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.hypot(u, v)


def l1_norm(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.abs(u) + np.abs(v)


def linf_norm(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(u), np.abs(v))


R2_NORMS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "euclid": euclidean_norm,
    "l1": l1_norm,
    "linf": linf_norm,
}


def metric_from_r2_norm(norm: Callable[[np.ndarray, np.ndarray], np.ndarray], label: str = "norm") -> MetricProfile:
    """The profile F(eta) = norm(cos eta, sin eta) of the torus invariant extension of a norm on R^2.

    Raises:
        NotHomogeneous: If norm(t u) differs from t norm(u) beyond 1e-10 at t in (0.5, 2, 10).
        ValueError: If the norm is not positive on the unit quarter circle.
    """
    eta = np.linspace(0.0, np.pi / 2.0, 7)
    u, v = np.cos(eta), np.sin(eta)
    base = np.asarray(norm(u, v), dtype=float)
    if np.any(base <= 0):
        raise ValueError(f"Norm {label} must be positive on the unit circle")
    for scale in HOMOGENEITY_SCALES:
        scaled = np.asarray(norm(scale * u, scale * v), dtype=float)
        defect = float(np.max(np.abs(scaled - scale * base) / (scale * base)))
        if defect > HOMOGENEITY_TOLERANCE:
            raise NotHomogeneous(scale, defect)
    return MetricProfile(lambda e: norm(np.cos(e), np.sin(e)), label)


def profile_from_csv(path: str) -> MetricProfile:
    """Reads a profile table with columns eta and F and interpolates it by a cubic spline.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the columns are missing.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Profile file not found: {path}")
    frame = pd.read_csv(path)
    if not {"eta", "F"} <= set(frame.columns):
        raise ValueError(f"{path} needs columns 'eta' and 'F', got {list(frame.columns)}")
    frame = frame.sort_values("eta")
    spline = CubicSpline(frame["eta"].to_numpy(), frame["F"].to_numpy())
    logger.info(f"Read a {len(frame)} point profile from {os.path.abspath(path)}")
    return MetricProfile(spline, os.path.basename(path))


# ===== Builtin second kind problems =====


SECOND_KIND_KERNELS: Dict[str, Kernel] = {
    "xy": lambda x, y: x * y,
    "zero": lambda x, y: np.zeros(np.broadcast(x, y).shape),
    "min": lambda x, y: np.minimum(x, y),
    "exp": lambda x, y: np.exp(-np.abs(x - y)),
}

SECOND_KIND_RHS: Dict[str, Function] = {
    "x": lambda x: x,
    "one": lambda x: np.ones_like(x),
    "sin": lambda x: np.sin(np.pi * x),
    "orth_x": lambda x: 1.0 - 1.5 * x,
}
