"""Legendre polynomials, Gauss-Legendre rules and raw two dimensional Legendre moments.

Moments are stored raw, M[m, n] = integral of f(x, y) p_m(x) p_n(y) over [-1, 1]^2.
Normalized coefficients c[m, n] = (2m+1)(2n+1)/4 M[m, n] are derived on demand.
"""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple
import logging
import numpy as np
import pandas as pd
from numpy.polynomial import legendre as npleg
from scipy.special import binom

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 64

# Quadrant signs in summation order, counterclockwise from the first quadrant
_QUADRANTS = ((1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0))

BivariateFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes in (-1, 1) and their positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.nodes)

    def mapped(self, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weights affinely mapped onto [a, b]."""
        half = (b - a) / 2.0
        return a + half * (self.nodes + 1.0), half * self.weights

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], a: float = -1.0, b: float = 1.0) -> float:
        nodes, weights = self.mapped(a, b)
        return float(weights @ f(nodes))


@dataclass(frozen=True)
class MomentMatrix:
    """Raw Legendre moments, or normalized coefficients when `normalized` is set.

    Rows run over the degree in x and columns over the degree in y.
    """

    entries: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-D array")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def degree(self) -> int:
        return max(self.entries.shape) - 1

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape

    def __getitem__(self, index: Tuple[int, int]) -> float:
        return float(self.entries[index])

    def _scales(self) -> np.ndarray:
        rows, cols = self.entries.shape
        m = 2.0 * np.arange(rows) + 1.0
        n = 2.0 * np.arange(cols) + 1.0
        return np.outer(m, n) / 4.0

    def coefficients(self) -> "MomentMatrix":
        """The normalized coefficient form c[m, n] = (2m+1)(2n+1)/4 M[m, n]."""
        if self.normalized:
            return self
        return MomentMatrix(self.entries * self._scales(), normalized=True)

    def raw(self) -> "MomentMatrix":
        """The raw moment form, inverse of `coefficients`."""
        if not self.normalized:
            return self
        return MomentMatrix(self.entries / self._scales(), normalized=False)

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Sums the truncated Legendre series at (x, y)."""
        c = self.coefficients().entries
        px = legendre_table(c.shape[0] - 1, x)
        py = legendre_table(c.shape[1] - 1, y)
        return np.einsum("m...,mn,n...->...", px, c, py)

    def masked(self, keep: np.ndarray) -> "MomentMatrix":
        return MomentMatrix(np.where(keep, self.entries, 0.0), normalized=self.normalized)

    def to_frame(self) -> pd.DataFrame:
        """One row per (m, n) entry, in row-major order."""
        rows, cols = self.entries.shape
        m, n = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        column = "coefficient" if self.normalized else "moment"
        return pd.DataFrame({"m": m.ravel(), "n": n.ravel(), column: self.entries.ravel()})


def legendre_eval(n: int, x):
    """Evaluates p_n at x by the three term recurrence.

    Args:
        n (int): The degree, n >= 0.
        x (float or np.ndarray): Evaluation points, usually in [-1, 1].

    Returns:
        float or np.ndarray: p_n(x), matching the shape of x.
    """
    if n < 0:
        raise ValueError(f"Degree must be nonnegative, got {n}")
    table = legendre_table(n, x)
    value = table[n]
    return float(value) if np.ndim(value) == 0 else value


def legendre_table(degree: int, x) -> np.ndarray:
    """Stacks p_0(x)..p_degree(x) along a new leading axis."""
    x = np.asarray(x, dtype=float)
    table = np.empty((degree + 1,) + x.shape)
    table[0] = 1.0
    if degree >= 1:
        table[1] = x
    for k in range(1, degree):
        table[k + 1] = ((2 * k + 1) * x * table[k] - k * table[k - 1]) / (k + 1)
    return table


def gauss_legendre(n: int = DEFAULT_ORDER) -> QuadratureRule:
    """The n point Gauss-Legendre rule on [-1, 1].

    Raises:
        ValueError: If n < 1.
    """
    if n < 1:
        raise ValueError(f"A quadrature rule needs at least one node, got {n}")
    nodes, weights = npleg.leggauss(n)
    return QuadratureRule(nodes, weights)


def _triangle_points(rule: QuadratureRule, corner1: np.ndarray, corner2: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # collapsed square map of the triangle (0, corner1, corner2)
    s = (rule.nodes + 1.0) / 2.0
    t = (rule.nodes + 1.0) / 2.0
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(rule.weights, rule.weights) / 4.0
    jacobian = abs(corner1[0] * (corner2[1] - corner1[1]) - corner1[1] * (corner2[0] - corner1[0]))
    x = S * corner1[0] + S * T * (corner2[0] - corner1[0])
    y = S * corner1[1] + S * T * (corner2[1] - corner1[1])
    return x.ravel(), y.ravel(), (W * S * jacobian).ravel()


def split_square_points(rule: QuadratureRule) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature points on [-1, 1]^2 cut along both axes and both diagonals.

    Each quadrant is split into two triangles along its diagonal; every triangle gets a
    collapsed product rule. Cells are concatenated in a fixed order.

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: (x, y, weights)
    """
    xs, ys, ws = [], [], []
    for sx, sy in _QUADRANTS:
        diagonal = np.array([sx, sy])
        for corner in (np.array([sx, 0.0]), np.array([0.0, sy])):
            x, y, w = _triangle_points(rule, corner, diagonal)
            xs.append(x)
            ys.append(y)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)


def tensor_square_points(rule: QuadratureRule) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The plain product rule on [-1, 1]^2."""
    X, Y = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    return X.ravel(), Y.ravel(), np.outer(rule.weights, rule.weights).ravel()


def moments_2d(
    f: BivariateFunction,
    degree: int,
    rule: QuadratureRule = None,
    split_diagonals: bool = True,
) -> MomentMatrix:
    """Raw Legendre moments of f up to the given degree in each variable.

    Args:
        f (BivariateFunction): A vectorized function of (x, y).
        degree (int): The largest degree N; the result is (N+1)x(N+1).
        rule (QuadratureRule, optional): The 1-D rule used per cell. Defaults to 64 nodes.
        split_diagonals (bool, optional): Whether to cut the square along the axes and x = +-y,
            which keeps the rule spectrally accurate for |.| and max type kinks. Defaults to True.

    Returns:
        MomentMatrix: The raw moments.
    """
    rule = rule if rule is not None else gauss_legendre(DEFAULT_ORDER)
    if split_diagonals:
        x, y, w = split_square_points(rule)
    else:
        x, y, w = tensor_square_points(rule)
    values = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)
    px = legendre_table(degree, x)
    py = legendre_table(degree, y)
    entries = (px * (w * values)) @ py.T
    logger.debug(f"Computed {degree + 1}x{degree + 1} moments on {len(x)} points")
    return MomentMatrix(entries)


def delta_torus_coefficients(K: int, L: int) -> MomentMatrix:
    """Normalized Legendre coefficients of delta(x) delta(y) up to degrees 2K and 2L.

    c[2k, 2l] = (4k+1)(4l+1)/4 binom(-1/2, k) binom(-1/2, l), using p_{2k}(0) = binom(-1/2, k).
    Odd rows and columns vanish.

    Returns:
        MomentMatrix: A (2K+1)x(2L+1) coefficient matrix.
    """
    if K < 0 or L < 0:
        raise ValueError(f"Degrees must be nonnegative, got ({K}, {L})")
    entries = np.zeros((2 * K + 1, 2 * L + 1))
    for k in range(K + 1):
        for l in range(L + 1):
            entries[2 * k, 2 * l] = (4 * k + 1) * (4 * l + 1) / 4.0 * binom(-0.5, k) * binom(-0.5, l)
    return MomentMatrix(entries, normalized=True)


# ===== Builtin integrands =====


def max_abs(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.maximum(np.abs(x), np.abs(y))


def abs_sum(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.abs(x + y)


def abs_difference(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.abs(x - y)


def constant_one(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones_like(x)


BUILTIN_FUNCTIONS: Dict[str, BivariateFunction] = {
    "one": constant_one,
    "max": max_abs,
    "abs_sum": abs_sum,
    "abs_diff": abs_difference,
}


def vanishing_indices(moments: MomentMatrix, tolerance: float) -> List[Tuple[int, int]]:
    """Indices whose moments are at most `tolerance` relative to |M[0, 0]|."""
    scale = max(abs(moments[0, 0]), 1.0)
    rows, cols = np.nonzero(np.abs(moments.entries) <= tolerance * scale)
    return list(zip(rows.tolist(), cols.tolist()))


def abs_sum_report(degree: int, rule: QuadratureRule = None, tolerance: float = 1e-10) -> pd.DataFrame:
    """Tabulates the moments of |x + y| together with where they vanish.

    For each (m, n) the table carries the moment, whether it vanishes numerically, and
    whether m, n are even with |m - n| in {0, 2}. The observed pattern is that the moments
    vanish exactly when m + n is odd or |m - n| >= 3; the even |m - n| in {0, 2} entries
    are the nonzero ones.

    Returns:
        pd.DataFrame: Columns m, n, moment, vanishes, even_near_diagonal.
    """
    moments = moments_2d(abs_sum, degree, rule)
    frame = moments.to_frame()
    vanished = set(vanishing_indices(moments, tolerance))
    frame["vanishes"] = [(m, n) in vanished for m, n in zip(frame["m"], frame["n"])]
    difference = (frame["m"] - frame["n"]).abs()
    frame["even_near_diagonal"] = (frame["m"] % 2 == 0) & (frame["n"] % 2 == 0) & difference.isin([0, 2])
    return frame
