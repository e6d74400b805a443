"""The Hermitian range test on CP^{n-1}.

Projection areas of squares spanned by v and i v onto complex lines are |<v, e>|^2, so every
metric in the range of the cosine transform on CP^{n-1} has a squared norm that is a Hermitian
quadratic form sum h_ij z_i conj(z_j). The test fits that form by weighted least squares on a
deterministic sample of lines and reads the verdict off the misfit.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Tuple
import logging
import os
import numpy as np
import pandas as pd
from scipy.stats import norm as normal
from scipy.stats import qmc

from torus_cosine.errors import NotHomogeneous, NotUnit, RankDeficientSample

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12
HERMITIAN_TOLERANCE = 1e-12
DEFAULT_TOLERANCE = 1e-8
DEFAULT_SAMPLE_SIZE = 1000

ComplexNorm = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class HermitianForm:
    """An n x n Hermitian matrix h with quadratic form sum h_ij z_i conj(z_j)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"A Hermitian form needs a square matrix, got shape {entries.shape}")
        defect = float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0
        if defect > HERMITIAN_TOLERANCE * max(1.0, float(np.max(np.abs(entries)))):
            raise ValueError(f"Matrix is not Hermitian (defect {defect:.3e})")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def quadratic(self, z: np.ndarray) -> np.ndarray:
        """Evaluates sum h_ij z_i conj(z_j) on the rows of z."""
        z = np.asarray(z, dtype=complex)
        return np.real(np.einsum("...i,ij,...j->...", z, self.entries, z.conj()))

    def norm(self, z: np.ndarray) -> np.ndarray:
        return np.sqrt(np.clip(self.quadratic(z), 0.0, None))

    def to_record(self) -> Dict[str, list]:
        return {"h_real": self.entries.real.tolist(), "h_imag": self.entries.imag.tolist()}


@dataclass(frozen=True)
class ProjectiveSample:
    """Unit representatives of lines in CP^{n-1} with positive weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.atleast_2d(np.array(self.points, dtype=complex))
        weights = np.array(self.weights, dtype=float)
        if len(points) == 0:
            raise ValueError("A projective sample needs at least one point")
        if weights.shape != (len(points),) or np.any(weights <= 0):
            raise ValueError("Weights must be positive, one per point")
        norms = np.linalg.norm(points, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE * 1e3):
            raise NotUnit(float(norms[np.argmax(np.abs(norms - 1.0))]))
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


def canonical_phase(points: np.ndarray) -> np.ndarray:
    """Rotates each row by a unit scalar so its first nonzero component is real positive."""
    points = np.asarray(points, dtype=complex)
    nonzero = np.abs(points) > 0
    first = np.argmax(nonzero, axis=1)
    leading = points[np.arange(len(points)), first]
    phase = np.where(np.abs(leading) > 0, leading / np.where(np.abs(leading) > 0, np.abs(leading), 1.0), 1.0)
    return points / phase[:, None]


def halton_sample(n: int, size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0) -> ProjectiveSample:
    """A deterministic low discrepancy sample of CP^{n-1} with equal weights.

    Scrambled Halton points in [0, 1)^{2n} are pushed through the normal quantile, normalized
    onto S^{2n-1} and phase canonicalized.
    """
    if n < 1 or size < 1:
        raise ValueError(f"Need n >= 1 and size >= 1, got n={n}, size={size}")
    sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed)
    uniform = np.clip(sampler.random(size), 1e-12, 1.0 - 1e-12)
    gaussian = normal.ppf(uniform)
    points = gaussian[:, :n] + 1j * gaussian[:, n:]
    points = points / np.linalg.norm(points, axis=1)[:, None]
    return ProjectiveSample(canonical_phase(points), np.full(size, 1.0 / size))


def projection_area(v: np.ndarray, e: np.ndarray) -> float:
    """Area |sum v_i conj(e_i)|^2 of the projection of the square (v, i v) onto the line of e.

    Raises:
        NotUnit: If |e| differs from 1 by more than 1e-12.
    """
    v = np.asarray(v, dtype=complex)
    e = np.asarray(e, dtype=complex)
    length = float(np.linalg.norm(e))
    if abs(length - 1.0) > UNIT_TOLERANCE:
        raise NotUnit(length)
    return float(abs(np.vdot(e, v)) ** 2)


def hermitian_moments(density: Callable[[np.ndarray], np.ndarray], sample: ProjectiveSample) -> HermitianForm:
    """h_ij = sum_k w_k conj(e_ki) e_kj f(e_k), symmetrized so h is exactly Hermitian."""
    values = np.asarray(density(sample.points), dtype=float) * sample.weights
    points = sample.points
    h = np.einsum("k,ki,kj->ij", values, points.conj(), points)
    return HermitianForm((h + h.conj().T) / 2.0)


def _features(points: np.ndarray) -> Tuple[np.ndarray, list]:
    # real parametrization: h_ii, Re h_ij and Im h_ij for i < j
    n = points.shape[1]
    columns, labels = [], []
    for i in range(n):
        columns.append(np.abs(points[:, i]) ** 2)
        labels.append(("diag", i, i))
    for i in range(n):
        for j in range(i + 1, n):
            product = points[:, i] * points[:, j].conj()
            columns.append(2.0 * product.real)
            labels.append(("real", i, j))
            columns.append(-2.0 * product.imag)
            labels.append(("imag", i, j))
    return np.column_stack(columns), labels


def _assemble(parameters: np.ndarray, labels: list, n: int) -> np.ndarray:
    h = np.zeros((n, n), dtype=complex)
    for value, (kind, i, j) in zip(parameters, labels):
        if kind == "diag":
            h[i, i] = value
        elif kind == "real":
            h[i, j] += value
            h[j, i] += value
        else:
            h[i, j] += 1j * value
            h[j, i] -= 1j * value
    return h


def fit_hermitian(squared_norm: Callable[[np.ndarray], np.ndarray], sample: ProjectiveSample) -> Tuple[HermitianForm, float]:
    """Least squares Hermitian form for F^2 on the sample.

    Minimizes sum_k w_k (F^2(e_k) - sum_ij h_ij e_ki conj(e_kj))^2 over the n^2 real
    parameters of h.

    Raises:
        RankDeficientSample: If the sample determines fewer than n^2 parameters.

    Returns:
        Tuple[HermitianForm, float]: (h, weighted RMS misfit)
    """
    n = sample.dim
    features, labels = _features(sample.points)
    targets = np.asarray(squared_norm(sample.points), dtype=float)
    root = np.sqrt(sample.weights)
    parameters, _, rank, _ = np.linalg.lstsq(features * root[:, None], targets * root, rcond=None)
    if rank < n * n:
        raise RankDeficientSample(rank, n * n)
    form = HermitianForm(_assemble(parameters, labels, n))
    misfit = targets - form.quadratic(sample.points)
    residual = float(np.sqrt(np.sum(sample.weights * misfit * misfit)))
    logger.debug(f"Hermitian fit on {len(sample)} lines: residual {residual:.3e}")
    return form, residual


def moment_rank(sample: ProjectiveSample) -> int:
    """Rank of the least squares system, n^2 on generic samples."""
    features, _ = _features(sample.points)
    return int(np.linalg.matrix_rank(features * np.sqrt(sample.weights)[:, None]))


def check_homogeneous(metric: ComplexNorm, sample: ProjectiveSample, tolerance: float = 1e-10) -> None:
    """Spot checks F(t z) = t F(z) on the sample.

    Raises:
        NotHomogeneous: On the first failing scale.
        ValueError: If F is not positive on the sample.
    """
    base = np.asarray(metric(sample.points), dtype=float)
    if np.any(base <= 0):
        raise ValueError("Metric must be positive on unit vectors")
    for scale in (0.5, 2.0, 10.0):
        defect = float(np.max(np.abs(np.asarray(metric(scale * sample.points)) - scale * base) / (scale * base)))
        if defect > tolerance:
            raise NotHomogeneous(scale, defect)


def is_hermitian_metric(
    metric: ComplexNorm,
    n: int = 2,
    tol: float = DEFAULT_TOLERANCE,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    seed: int = 0,
) -> Tuple[bool, float, HermitianForm]:
    """Decides whether F^2 is a Hermitian form on a deterministic sample of CP^{n-1}.

    Returns:
        Tuple[bool, float, HermitianForm]: (residual <= tol, residual, fitted form)
    """
    sample = halton_sample(n, sample_size, seed)
    check_homogeneous(metric, sample)
    form, residual = fit_hermitian(lambda z: np.asarray(metric(z)) ** 2, sample)
    return residual <= tol, residual, form


# ===== Builtin metrics =====


def euclidean_metric(z: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(z, dtype=complex), axis=-1)


def complex_l1_metric(z: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(np.asarray(z, dtype=complex)), axis=-1)


def hermitian_metric(form: HermitianForm) -> ComplexNorm:
    """The norm sqrt(h(z, z)) of a positive definite Hermitian form."""
    if np.min(np.linalg.eigvalsh(form.entries)) <= 0:
        raise ValueError("Hermitian form must be positive definite to induce a norm")
    return form.norm


# Positive definite example with a skew off-diagonal pair
SAMPLE_FORM = HermitianForm(np.array([[1.0, 0.3j], [-0.3j, 2.0]]))

COMPLEX_METRICS: Dict[str, ComplexNorm] = {
    "euclid": euclidean_metric,
    "l1": complex_l1_metric,
}


def form_from_csv(path: str) -> HermitianForm:
    """Reads a form from a table with columns i, j, re, im (missing entries are zero).

    Raises:
        FileNotFoundError: If the file does not exist.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Form file not found: {path}")
    frame = pd.read_csv(path)
    n = int(max(frame["i"].max(), frame["j"].max())) + 1
    entries = np.zeros((n, n), dtype=complex)
    for row in frame.itertuples(index=False):
        entries[int(row.i), int(row.j)] = complex(row.re, row.im)
    logger.info(f"Read a {n}x{n} Hermitian form from {os.path.abspath(path)}")
    return HermitianForm(entries)
