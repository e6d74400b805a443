"""The torus reduced cosine transform C_T on the square of Gluck-Warner heights.

For torus invariant f, (C_T f)(x, y) = 1/4 int int K_T(x, y; x', y') f(x', y') dx' dy', where the
kernel is the pairing averaged over both torus angles,

    K_T = 1/(8 pi^2) int_0^{2 pi} J(a cos u + d, b) du,
    a = sqrt(1 - x^2) sqrt(1 - x'^2),  b = sqrt(1 - y^2) sqrt(1 - y'^2),  d = x x' + y y',

and J(m, b) is the integral of |m + b cos v| over one period. The products p_m(x) p_n(y) are
eigenfunctions; those with even m - n and |m - n| >= 4 are annihilated.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Tuple
import logging
import os
import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from torus_cosine.legendre_spectral import (
    MomentMatrix,
    gauss_legendre,
    legendre_eval,
    legendre_table,
    tensor_square_points,
)

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 64
DEFAULT_KERNEL_ORDER = 128
DEFAULT_TABLE_ORDER = 16
CHECK_GRID_SIZE = 9

# Rows of the kernel evaluated per block
_BLOCK = 64


@dataclass(frozen=True)
class TorusInvariantFunction:
    """A function of the heights (x, y) that is even under (x, y) -> (-x, -y)."""

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = "f"

    def __call__(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(np.asarray(self.evaluator(x, y), dtype=float), np.broadcast(x, y).shape)

    def is_antipodal(self, samples: int = 32, seed: int = 0, tolerance: float = 1e-10) -> bool:
        """Spot checks f(x, y) = f(-x, -y) on random points."""
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(-1.0, 1.0, (2, samples))
        scale = max(1.0, float(np.max(np.abs(self(x, y)))))
        return bool(np.max(np.abs(self(x, y) - self(-x, -y))) <= tolerance * scale)

    def sup_norm(self, size: int = CHECK_GRID_SIZE) -> float:
        """max |f| on the check grid linspace(-1, 1, size)^2."""
        x, y = check_grid(size)
        return float(np.max(np.abs(self(x, y))))

    def scaled(self, factor: float) -> "TorusInvariantFunction":
        return TorusInvariantFunction(lambda x, y: factor * self(x, y), f"{factor:g}*{self.label}")

    def plus(self, other: "TorusInvariantFunction") -> "TorusInvariantFunction":
        return TorusInvariantFunction(lambda x, y: self(x, y) + other(x, y), f"{self.label}+{other.label}")


def constant_function(value: float = 1.0) -> TorusInvariantFunction:
    return TorusInvariantFunction(lambda x, y: np.full(np.broadcast(x, y).shape, value), f"{value:g}")


def legendre_product(m: int, n: int) -> TorusInvariantFunction:
    """p_m(x) p_n(y); antipodally even exactly when m + n is even."""
    return TorusInvariantFunction(lambda x, y: legendre_eval(m, x) * legendre_eval(n, y), f"p{m}p{n}")


def series_function(coefficients: MomentMatrix) -> TorusInvariantFunction:
    """The truncated Legendre series with the given coefficients (or raw moments)."""
    return TorusInvariantFunction(coefficients.evaluate, "series")


def function_from_csv(path: str) -> TorusInvariantFunction:
    """Reads f from a table with columns x, y, f sampled on a rectangular grid.

    Values between grid points are interpolated linearly.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the columns are missing or the samples do not form a grid.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Function file not found: {path}")
    frame = pd.read_csv(path)
    if not {"x", "y", "f"} <= set(frame.columns):
        raise ValueError(f"{path} needs columns x, y and f, got {list(frame.columns)}")
    table = frame.pivot_table(index="x", columns="y", values="f")
    if table.isna().to_numpy().any():
        raise ValueError(f"{path} does not sample a rectangular grid")
    interpolator = RegularGridInterpolator(
        (table.index.to_numpy(), table.columns.to_numpy()), table.to_numpy(), bounds_error=False, fill_value=None
    )
    logger.info(f"Read a {table.shape[0]}x{table.shape[1]} function grid from {os.path.abspath(path)}")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(x, y)
        return interpolator(np.stack([x.ravel(), y.ravel()], axis=-1)).reshape(x.shape)

    return TorusInvariantFunction(evaluate, os.path.basename(path))


def check_grid(size: int = CHECK_GRID_SIZE) -> Tuple[np.ndarray, np.ndarray]:
    points = np.linspace(-1.0, 1.0, size)
    x, y = np.meshgrid(points, points, indexing="ij")
    return x.ravel(), y.ravel()


# ===== Kernel =====


def abs_affine_cos_integral(m, b):
    """J(m, b) = int_0^{2 pi} |m + b cos v| dv for b >= 0.

    Equals 2 pi |m| when |m| >= b, otherwise 4 sqrt(b^2 - m^2) + 4 |m| arcsin(|m| / b).
    """
    m = np.abs(np.asarray(m, dtype=float))
    b = np.asarray(b, dtype=float)
    if np.any(b < 0.0):
        raise ValueError("b must be nonnegative")
    inside = m < b
    safe_b = np.where(inside, b, 1.0)
    ratio = np.where(inside, m / safe_b, 0.0)
    crossing = 4.0 * np.sqrt(np.where(inside, b * b - m * m, 0.0)) + 4.0 * m * np.arcsin(np.clip(ratio, 0.0, 1.0))
    value = np.where(inside, crossing, 2.0 * np.pi * m)
    return float(value) if np.ndim(value) == 0 else value


def _kernel_values(
    x: np.ndarray, y: np.ndarray, xs: np.ndarray, ys: np.ndarray, kernel_order: int
) -> np.ndarray:
    # x, y broadcast against xs, ys; the u integral is split where |a cos u + d| = b
    a = np.sqrt(np.clip(1.0 - x * x, 0.0, None)) * np.sqrt(np.clip(1.0 - xs * xs, 0.0, None))
    b = np.sqrt(np.clip(1.0 - y * y, 0.0, None)) * np.sqrt(np.clip(1.0 - ys * ys, 0.0, None))
    d = x * xs + y * ys
    safe_a = np.where(a > 0.0, a, 1.0)
    first = np.where(a > 0.0, np.arccos(np.clip((b - d) / safe_a, -1.0, 1.0)), 0.0)
    second = np.where(a > 0.0, np.arccos(np.clip((-b - d) / safe_a, -1.0, 1.0)), np.pi)
    per_segment = max(1, kernel_order // 3)
    rule = gauss_legendre(per_segment)
    total = np.zeros(np.broadcast(a, b, d).shape)
    for lower, upper in ((0.0, first), (first, second), (second, np.pi)):
        half = (upper - lower) / 2.0
        for node, weight in zip(rule.nodes, rule.weights):
            u = lower + half * (node + 1.0)
            total = total + weight * half * abs_affine_cos_integral(a * np.cos(u) + d, b)
    return total / (4.0 * np.pi**2)


def reduced_kernel(x, y, xp, yp, kernel_order: int = DEFAULT_KERNEL_ORDER):
    """K_T(x, y; x', y'), the pairing averaged over the torus orbits of both planes.

    Args:
        x, y (float or np.ndarray): Heights of the first plane.
        xp, yp (float or np.ndarray): Heights of the second plane.
        kernel_order (int, optional): Total Gauss nodes over [0, pi], split into three cells.
            Defaults to 128.

    Returns:
        float or np.ndarray: Kernel values in [0, 1].
    """
    arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, xp, yp)))
    value = _kernel_values(*arrays, kernel_order)
    return float(value) if np.ndim(value) == 0 else value


def _kernel_block(
    tx: np.ndarray, ty: np.ndarray, sx: np.ndarray, sy: np.ndarray, kernel_order: int
) -> np.ndarray:
    rows = []
    for start in range(0, len(tx), _BLOCK):
        stop = start + _BLOCK
        rows.append(
            _kernel_values(tx[start:stop, None], ty[start:stop, None], sx[None, :], sy[None, :], kernel_order)
        )
    return np.vstack(rows) if rows else np.zeros((0, len(sx)))


@lru_cache(maxsize=16)
def _cached_block(targets: bytes, order: int, kernel_order: int) -> np.ndarray:
    points = np.frombuffer(targets, dtype=float).reshape(2, -1)
    sx, sy, _ = _source_nodes(order)
    block = _kernel_block(points[0], points[1], sx, sy, kernel_order)
    block.setflags(write=False)
    logger.debug(f"Built kernel block {block.shape} at order {order}")
    return block


@lru_cache(maxsize=8)
def _source_nodes(order: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, y, w = tensor_square_points(gauss_legendre(order))
    return x, y, w / 4.0


@dataclass(frozen=True)
class ReducedKernelTable:
    """K_T on a shared tensor node set, with the probability weights of the square.

    The matrix is symmetric by construction, so the discretized operator is self adjoint
    for the weighted inner product.
    """

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    order: int
    kernel_order: int

    def apply(self, values: np.ndarray) -> np.ndarray:
        """(C_T f) on the nodes from f on the nodes."""
        return self.matrix @ (self.weights * values)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.weights * f * g))

    def sample(self, f: TorusInvariantFunction) -> np.ndarray:
        return f(self.x, self.y)


@lru_cache(maxsize=8)
def build_kernel_table(order: int = DEFAULT_TABLE_ORDER, kernel_order: int = DEFAULT_KERNEL_ORDER) -> ReducedKernelTable:
    """Builds (and caches) the kernel table on the order x order tensor Gauss nodes."""
    x, y, w = _source_nodes(order)
    matrix = _kernel_block(x, y, x, y, kernel_order)
    matrix = (matrix + matrix.T) / 2.0
    matrix.setflags(write=False)
    logger.info(f"Kernel table with {len(x)} nodes built (kernel order {kernel_order})")
    return ReducedKernelTable(x, y, w, matrix, order, kernel_order)


# ===== Operator =====


def apply_cosine(
    f: TorusInvariantFunction, order: int = DEFAULT_ORDER, kernel_order: int = DEFAULT_KERNEL_ORDER
) -> TorusInvariantFunction:
    """C_T f with the order x order tensor Gauss rule on the source square.

    The result is evaluated lazily; kernel rows for each distinct set of evaluation points
    are cached, so repeated sup norms on the check grid reuse one table.
    """
    sx, sy, w = _source_nodes(order)
    weighted = w * f(sx, sy)

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        targets = np.ascontiguousarray(np.vstack([x.ravel(), y.ravel()]))
        block = _cached_block(targets.tobytes(), order, kernel_order)
        return (block @ weighted).reshape(x.shape)

    return TorusInvariantFunction(evaluate, f"C_T[{f.label}]")


def self_adjointness_defect(
    f: TorusInvariantFunction,
    g: TorusInvariantFunction,
    order: int = DEFAULT_TABLE_ORDER,
    kernel_order: int = DEFAULT_KERNEL_ORDER,
) -> float:
    """|<C_T f, g> - <f, C_T g>| for the discretized operator on shared nodes."""
    table = build_kernel_table(order, kernel_order)
    fv, gv = table.sample(f), table.sample(g)
    return abs(table.inner(table.apply(fv), gv) - table.inner(fv, table.apply(gv)))


def weighted_norm(f: TorusInvariantFunction, order: int = DEFAULT_TABLE_ORDER) -> float:
    """L2 norm of f for the probability measure on the square, on the table nodes."""
    x, y, w = _source_nodes(order)
    values = f(x, y)
    return float(np.sqrt(np.sum(w * values * values)))


def _basis_indices(degree: int) -> List[Tuple[int, int]]:
    return [(m, n) for m in range(degree + 1) for n in range(degree + 1) if (m + n) % 2 == 0]


def operator_matrix(
    degree: int, order: int = DEFAULT_TABLE_ORDER, kernel_order: int = DEFAULT_KERNEL_ORDER
) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    """Matrix of C_T between antipodally even products p_m(x) p_n(y), m, n <= degree.

    Entries are <p_m p_n, C_T p_m' p_n'> for the probability measure; the matrix is symmetric.

    Returns:
        Tuple[np.ndarray, List[Tuple[int, int]]]: (matrix, basis indices)
    """
    table = build_kernel_table(order, kernel_order)
    indices = _basis_indices(degree)
    px = legendre_table(degree, table.x)
    py = legendre_table(degree, table.y)
    basis = np.column_stack([px[m] * py[n] for m, n in indices])
    weighted = table.weights[:, None] * basis
    matrix = weighted.T @ table.matrix @ weighted
    return (matrix + matrix.T) / 2.0, indices


def eigenvalue_table(
    degree: int, order: int = DEFAULT_TABLE_ORDER, kernel_order: int = DEFAULT_KERNEL_ORDER
) -> pd.DataFrame:
    """Rayleigh quotients of C_T on the products p_m(x) p_n(y).

    The exact eigenvalue of p_m p_n is M[m, n] / 8 with M the raw moments of |x + y|; for
    (2, 2) it is -1/105, so C_T is not positive semidefinite.

    Returns:
        pd.DataFrame: Columns m, n, eigenvalue, kernel_index.
    """
    matrix, indices = operator_matrix(degree, order, kernel_order)
    table = build_kernel_table(order, kernel_order)
    records = []
    for position, (m, n) in enumerate(indices):
        values = legendre_product(m, n)(table.x, table.y)
        norm = table.inner(values, values)
        records.append(
            {
                "m": m,
                "n": n,
                "eigenvalue": matrix[position, position] / norm,
                "kernel_index": abs(m - n) >= 4,
            }
        )
    return pd.DataFrame.from_records(records)


# ===== Spectral projectors =====


def kernel_mask(shape: Tuple[int, int]) -> np.ndarray:
    """Indices with m - n even and |m - n| > 2."""
    m, n = np.indices(shape)
    difference = np.abs(m - n)
    return (difference % 2 == 0) & (difference > 2)


def image_mask(shape: Tuple[int, int]) -> np.ndarray:
    """Indices with |m - n| in {0, 2}."""
    m, n = np.indices(shape)
    difference = np.abs(m - n)
    return (difference == 0) | (difference == 2)


def kernel_projection(M: MomentMatrix) -> MomentMatrix:
    """Keeps the entries whose products p_m p_n lie in the kernel of C_T."""
    return M.masked(kernel_mask(M.shape))


def image_projection(M: MomentMatrix) -> MomentMatrix:
    """Keeps the entries whose products p_m p_n lie in the image of C_T."""
    return M.masked(image_mask(M.shape))


# ===== Checks =====


def annihilation_report(
    indices: Iterable[Tuple[int, int]],
    order: int = DEFAULT_ORDER,
    kernel_order: int = DEFAULT_KERNEL_ORDER,
    annihilation: float = 1e-3,
    image_floor: float = 1e-2,
) -> pd.DataFrame:
    """Measures ||C_T(p_m p_n)|| on the check grid relative to ||C_T 1||.

    Kernel indices pass when the norm is at most `annihilation` times ||C_T 1||; image
    indices pass when it is at least `image_floor` times ||C_T 1||.

    Returns:
        pd.DataFrame: Columns indices, kind, norm, threshold, pass.
    """
    reference = apply_cosine(constant_function(), order, kernel_order).sup_norm()
    records = []
    for m, n in indices:
        norm = apply_cosine(legendre_product(m, n), order, kernel_order).sup_norm()
        difference = abs(m - n)
        if difference % 2 == 1:
            kind, threshold, passed = "odd", float("nan"), True
        elif difference > 2:
            kind, threshold = "kernel", annihilation * reference
            passed = norm <= threshold
        else:
            kind, threshold = "image", image_floor * reference
            passed = norm >= threshold
        logger.debug(f"C_T(p{m}p{n}): sup {norm:.3e} ({kind})")
        records.append({"indices": f"{m},{n}", "kind": kind, "norm": norm, "threshold": threshold, "pass": bool(passed)})
    return pd.DataFrame.from_records(records, columns=["indices", "kind", "norm", "threshold", "pass"])


def random_polynomial(degree: int, rng: np.random.Generator) -> TorusInvariantFunction:
    """A random antipodally even polynomial of total degree at most `degree`."""
    coefficients = np.zeros((degree + 1, degree + 1))
    for m in range(degree + 1):
        for n in range(degree + 1 - m):
            if (m + n) % 2 == 0:
                coefficients[m, n] = rng.normal()
    return series_function(MomentMatrix(coefficients, normalized=True))


def self_adjointness_sweep(
    pairs: int = 20,
    degree: int = 6,
    seed: int = 0,
    order: int = DEFAULT_TABLE_ORDER,
    kernel_order: int = DEFAULT_KERNEL_ORDER,
) -> pd.DataFrame:
    """Defects for random polynomial pairs, with the bound 1e-10 ||f|| ||g|| attached."""
    rng = np.random.default_rng(seed)
    records = []
    for trial in range(pairs):
        f, g = random_polynomial(degree, rng), random_polynomial(degree, rng)
        defect = self_adjointness_defect(f, g, order, kernel_order)
        bound = 1e-10 * weighted_norm(f, order) * weighted_norm(g, order)
        records.append({"trial": trial, "defect": defect, "bound": bound, "pass": defect <= bound})
    return pd.DataFrame.from_records(records)
