"""Plane algebra in R^4 = C^2, the torus action, orbit reduction and the Gluck-Warner map.

A vector (z, w) of C^2 is stored as the real 4-vector (Re z, Im z, Re w, Im w) in the
basis e1..e4. Planes are unoriented real 2-planes; they are stored as two spanning vectors
and compared through their orthogonal projectors.
"""

from dataclasses import dataclass
from typing import Iterable, Tuple
import logging
import re
import numpy as np

from torus_cosine.errors import DegeneratePlane

logger = logging.getLogger(__name__)

# Default tolerances for subspace comparison, Gram determinants and nullspace extraction
PROJECTOR_TOLERANCE = 1e-8
GRAM_TOLERANCE = 1e-12
NULLSPACE_TOLERANCE = 1e-10

TWO_PI = 2.0 * np.pi

# A plain real 4-vector, components in the basis e1..e4
Vector4 = np.ndarray


def vector4(z: complex, w: complex) -> Vector4:
    """Identifies (z, w) in C^2 with (Re z, Im z, Re w, Im w) in R^4."""
    return np.array([z.real, z.imag, w.real, w.imag], dtype=float)


def complex_pair(v: Vector4) -> Tuple[complex, complex]:
    """Inverse of `vector4`."""
    return complex(v[0], v[1]), complex(v[2], v[3])


def quasi_j(v: Vector4, r: float, s: float) -> Vector4:
    """Applies (z, w) -> (i r z, i s w) to a real 4-vector."""
    return np.array([-r * v[1], r * v[0], -s * v[3], s * v[2]], dtype=float)


@dataclass(frozen=True, eq=False)
class Plane:
    """An unoriented real 2-plane of R^4 given by two spanning vectors.

    Two planes are equal when their orthogonal projectors agree within PROJECTOR_TOLERANCE.
    """

    v1: Vector4
    v2: Vector4

    def __post_init__(self):
        for name in ("v1", "v2"):
            value = np.array(getattr(self, name), dtype=float).reshape(-1)
            if value.shape != (4,):
                raise ValueError(f"{name} must have 4 components, got {value.shape[0]}")
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} has non-finite components")
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "Plane":
        """Builds a plane from 8 reals, v1 then v2."""
        values = [float(value) for value in values]
        if len(values) != 8:
            raise ValueError(f"A plane needs 8 reals, got {len(values)}")
        return cls(np.array(values[:4]), np.array(values[4:]))

    def to_list(self) -> list:
        return [float(c) for c in self.v1] + [float(c) for c in self.v2]

    def gram_determinant(self) -> float:
        g11 = float(self.v1 @ self.v1)
        g22 = float(self.v2 @ self.v2)
        g12 = float(self.v1 @ self.v2)
        return g11 * g22 - g12 * g12

    def basis(self) -> np.ndarray:
        """Returns the spanning vectors as the columns of a 4x2 matrix."""
        return np.column_stack([self.v1, self.v2])

    def projector(self) -> np.ndarray:
        """The orthogonal projector onto the plane."""
        u = orthonormalize(self).basis()
        return u @ u.T

    def distance(self, other: "Plane") -> float:
        """Frobenius distance between the orthogonal projectors of two planes."""
        return float(np.linalg.norm(self.projector() - other.projector()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Plane):
            return NotImplemented
        return self.distance(other) <= PROJECTOR_TOLERANCE

    __hash__ = None


@dataclass(frozen=True)
class OrbitParams:
    """The pair (theta, psi) labelling a torus orbit of planes.

    psi lies in [0, pi/2]. theta lies in [0, pi/2] for every orbit reachable from the
    square of representatives, and runs up to pi for the remaining orbits (see reduce_to_orbit).
    """

    theta: float
    psi: float

    def __post_init__(self):
        slack = 1e-12
        if not (-slack <= self.theta <= np.pi + slack):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not (-slack <= self.psi <= np.pi / 2 + slack):
            raise ValueError(f"psi must lie in [0, pi/2], got {self.psi}")
        object.__setattr__(self, "theta", float(min(max(self.theta, 0.0), np.pi)))
        object.__setattr__(self, "psi", float(min(max(self.psi, 0.0), np.pi / 2)))

    @property
    def in_square(self) -> bool:
        """Whether the parameters lie in [0, pi/2]^2."""
        return self.theta <= np.pi / 2


@dataclass(frozen=True)
class TorusElement:
    """The torus element (e^{i alpha}, e^{i beta}), angles reduced into [0, 2 pi)."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(np.mod(self.alpha, TWO_PI)))
        object.__setattr__(self, "beta", float(np.mod(self.beta, TWO_PI)))

    @classmethod
    def identity(cls) -> "TorusElement":
        return cls(0.0, 0.0)

    def compose(self, other: "TorusElement") -> "TorusElement":
        return TorusElement(self.alpha + other.alpha, self.beta + other.beta)

    def inverse(self) -> "TorusElement":
        return TorusElement(-self.alpha, -self.beta)

    def matrix(self) -> np.ndarray:
        """The real 4x4 rotation acting on (Re z, Im z, Re w, Im w)."""
        ca, sa = np.cos(self.alpha), np.sin(self.alpha)
        cb, sb = np.cos(self.beta), np.sin(self.beta)
        return np.array(
            [
                [ca, -sa, 0.0, 0.0],
                [sa, ca, 0.0, 0.0],
                [0.0, 0.0, cb, -sb],
                [0.0, 0.0, sb, cb],
            ]
        )


@dataclass(frozen=True)
class SpherePointPair:
    """Gluck-Warner coordinates ((x, phi1), (y, phi2)) on S^2 x S^2.

    x and y are the b1+ and b1- components; phi1 and phi2 are measured in the (b3, b2) planes,
    so that xi = (sqrt(1-x^2) cos phi1, sqrt(1-x^2) sin phi1, x) in the (b3, b2, b1) frame.
    """

    x: float
    phi1: float
    y: float
    phi2: float

    def xi(self) -> np.ndarray:
        radius = np.sqrt(max(0.0, 1.0 - self.x * self.x))
        return np.array([radius * np.cos(self.phi1), radius * np.sin(self.phi1), self.x])

    def eta(self) -> np.ndarray:
        radius = np.sqrt(max(0.0, 1.0 - self.y * self.y))
        return np.array([radius * np.cos(self.phi2), radius * np.sin(self.phi2), self.y])

    def antipode(self) -> "SpherePointPair":
        """The coordinates of the same plane with the opposite orientation."""
        return SpherePointPair(
            -self.x,
            float(np.mod(self.phi1 + np.pi, TWO_PI)),
            -self.y,
            float(np.mod(self.phi2 + np.pi, TWO_PI)),
        )


@dataclass(frozen=True)
class QuasiJCoefficients:
    """Coefficients of det(v1, v2, J_{r,s} v1, J_{r,s} v2) = A r^2 + B r s + C s^2."""

    A: float
    B: float
    C: float

    def value(self, r: float, s: float) -> float:
        return self.A * r * r + self.B * r * s + self.C * s * s


def parse_plane(text: str) -> Plane:
    """Parses 8 comma or whitespace separated reals (v1 then v2) into a plane.

    Raises:
        ValueError: If the text does not hold exactly 8 reals.
    """
    tokens = [token for token in re.split(r"[,\s;]+", text.strip()) if token]
    return Plane.from_values(float(token) for token in tokens)


def orthonormalize(p: Plane) -> Plane:
    """Returns orthonormal spanning vectors of the same plane (Gram-Schmidt).

    Raises:
        DegeneratePlane: If the Gram determinant of the spanning vectors is below GRAM_TOLERANCE.
    """
    gram = p.gram_determinant()
    if gram < GRAM_TOLERANCE:
        raise DegeneratePlane(gram)
    u1 = p.v1 / np.linalg.norm(p.v1)
    u2 = p.v2 - (u1 @ p.v2) * u1
    # second pass keeps the pair orthogonal to machine precision
    u2 = u2 - (u1 @ u2) * u1
    u2 = u2 / np.linalg.norm(u2)
    return Plane(u1, u2)


def pairing(p: Plane, q: Plane) -> float:
    """|det| of the 2x2 matrix of inner products of orthonormal bases.

    This is the product of the cosines of the principal angles between p and q.

    Raises:
        DegeneratePlane: If either plane is degenerate.
    """
    u = orthonormalize(p).basis()
    v = orthonormalize(q).basis()
    value = abs(float(np.linalg.det(u.T @ v)))
    return min(value, 1.0)


def _representative_vectors(theta: float, psi: float) -> Tuple[Vector4, Vector4]:
    # span((cos psi, sin psi), i (cos(theta+psi), sin(theta+psi)))
    v1 = np.array([np.cos(psi), 0.0, np.sin(psi), 0.0])
    v2 = np.array([0.0, np.cos(theta + psi), 0.0, np.sin(theta + psi)])
    return v1, v2


def representative_plane(theta: float, psi: float) -> Plane:
    """span((cos psi, sin psi), i (cos(theta+psi), sin(theta+psi))) for any real angles."""
    v1, v2 = _representative_vectors(theta, psi)
    return Plane(v1, v2)


def orbit_representative(o: OrbitParams) -> Plane:
    """The representative plane span((cos psi, sin psi), i (cos(theta+psi), sin(theta+psi)))."""
    return representative_plane(o.theta, o.psi)


def torus_act(t: TorusElement, p: Plane) -> Plane:
    """Acts on a plane by (z, w) -> (e^{i alpha} z, e^{i beta} w)."""
    rotation = t.matrix()
    return Plane(rotation @ p.v1, rotation @ p.v2)


def quasi_j_matrix(p: Plane, r: float, s: float) -> np.ndarray:
    """The 4x4 matrix with rows v1, v2, J_{r,s} v1, J_{r,s} v2."""
    return np.vstack([p.v1, p.v2, quasi_j(p.v1, r, s), quasi_j(p.v2, r, s)])


def quasi_j_determinant(p: Plane, r: float, s: float) -> float:
    return float(np.linalg.det(quasi_j_matrix(p, r, s)))


def quasi_j_coefficients(p: Plane) -> QuasiJCoefficients:
    """Interpolates the quadratic form A r^2 + B r s + C s^2 at (1,0), (0,1) and (1,1).

    For the block structure of the determinant A and C both equal
    det(M11) det(M22) with M11 = [[x1, y1], [x2, y2]] and M22 = [[u1, v1], [u2, v2]].

    Raises:
        DegeneratePlane: If the spanning vectors are dependent.
    """
    gram = p.gram_determinant()
    if gram < GRAM_TOLERANCE:
        raise DegeneratePlane(gram)
    a = quasi_j_determinant(p, 1.0, 0.0)
    c = quasi_j_determinant(p, 0.0, 1.0)
    b = quasi_j_determinant(p, 1.0, 1.0) - a - c
    return QuasiJCoefficients(a, b, c)


def quadratic_root(coefficients: QuasiJCoefficients, tolerance: float = 0.0) -> Tuple[float, float]:
    """A nontrivial real root (r, s) of A r^2 + B r s + C s^2 = 0, scaled to unit length.

    Returns the direction (1, 1) when all coefficients vanish and (1, 0) when only B survives.
    Otherwise the larger root of the dehomogenized quadratic is taken (s = 1, or r = 1 when
    |C| > |A|). A slightly negative discriminant is clipped to zero.
    """
    a, b, c = coefficients.A, coefficients.B, coefficients.C
    if abs(a) <= tolerance and abs(c) <= tolerance:
        if abs(b) <= tolerance:
            return (float(np.sqrt(0.5)), float(np.sqrt(0.5)))
        return (1.0, 0.0)
    discriminant = b * b - 4.0 * a * c
    if discriminant < 0.0:
        logger.debug(f"Clipping negative discriminant {discriminant:.3e}")
        discriminant = 0.0
    root = np.sqrt(discriminant)
    lead, tail = (a, c) if abs(a) >= abs(c) else (c, a)
    first = (-b - np.copysign(root, b)) / (2.0 * lead)
    roots = [first]
    if first != 0.0:
        roots.append(tail / (lead * first))
    best = float(max(roots))
    r, s = (best, 1.0) if abs(a) >= abs(c) else (1.0, best)
    norm = float(np.hypot(r, s))
    return (r / norm, s / norm)


def solve_quasi_j(p: Plane) -> Tuple[float, float]:
    """Returns (r, s) != (0, 0) for which P and P_{r,s} = {(i r z, i s w)} intersect nontrivially.

    Raises:
        DegeneratePlane: If the spanning vectors are dependent.
    """
    coefficients = quasi_j_coefficients(p)
    scale = float(p.v1 @ p.v1) * float(p.v2 @ p.v2)
    return quadratic_root(coefficients, tolerance=GRAM_TOLERANCE * scale)


def quasi_j_vector(p: Plane) -> Tuple[Vector4, Tuple[float, float]]:
    """Finds a unit quasi-J-characteristic vector u of p, with J_{r,s} u in p.

    The vector is read off the smallest singular direction of the stacked 4x4 system.

    Returns:
        Tuple[Vector4, Tuple[float, float]]: (u, (r, s))
    """
    r, s = solve_quasi_j(p)
    matrix = quasi_j_matrix(p, r, s)
    left, singular, _ = np.linalg.svd(matrix)
    if singular[-1] > NULLSPACE_TOLERANCE * max(singular[0], 1.0):
        logger.warning(
            f"Quasi-J system is not singular at (r, s) = ({r:.6g}, {s:.6g}): "
            f"smallest singular value {singular[-1]:.3e}"
        )
    combination = left[:, -1]
    u = combination[2] * p.v1 + combination[3] * p.v2
    return u / np.linalg.norm(u), (r, s)


def quasi_j_reduction(p: Plane, tolerance: float = 1e-8) -> Tuple[float, float, TorusElement]:
    """Reads an orbit representative off the quasi-J-characteristic vector of p.

    With u = (|z0| e^{ia}, |w0| e^{ib}) the unit vector from `quasi_j_vector`, the torus element
    (a, b) turns u into (cos psi, sin psi) with psi = atan2(|w0|, |z0|). J_{r,s} commutes with
    the torus, so the rest of the untwisted plane is spanned by i (cos phi, sin phi) and
    theta = phi - psi. A vanishing component of u leaves its phase free; it is then fixed by the
    second in-plane vector.

    The angles are not canonicalized: theta may fall outside [0, pi]. They name the same orbit
    as `reduce_to_orbit`, with Gluck-Warner heights (cos theta, cos(theta + 2 psi)) equal to the
    canonical ones up to a common sign.

    Raises:
        DegeneratePlane: If the plane is degenerate.

    Returns:
        Tuple[float, float, TorusElement]: (theta, psi, t) with torus_act(t, representative_plane(theta, psi)) == p
    """
    u, _ = quasi_j_vector(p)
    basis = orthonormalize(p)
    q = basis.v1 - (basis.v1 @ u) * u
    if np.linalg.norm(q) < 0.5:
        q = basis.v2 - (basis.v2 @ u) * u
    q = q / np.linalg.norm(q)

    z0, w0 = complex_pair(u)
    zq, wq = complex_pair(q)
    psi = float(np.arctan2(abs(w0), abs(z0)))
    alpha = float(np.angle(z0)) if abs(z0) > tolerance else float(np.angle(zq)) - np.pi / 2.0
    beta = float(np.angle(w0)) if abs(w0) > tolerance else float(np.angle(wq)) - np.pi / 2.0

    # untwisted second vector is i (cos phi, sin phi) up to sign
    c1 = zq * np.exp(-1j * alpha)
    c2 = wq * np.exp(-1j * beta)
    if max(abs(c1.real), abs(c2.real)) > np.sqrt(tolerance):
        logger.warning(f"Untwisted quasi-J complement is not imaginary: ({c1:.3e}, {c2:.3e})")
    phi = float(np.arctan2(c2.imag, c1.imag))
    return phi - psi, psi, TorusElement(alpha, beta)


def self_dual_components(p: Plane) -> Tuple[np.ndarray, np.ndarray]:
    """The unit vectors iota1 and iota2 in the bases (b1+, b2+, b3+) and (b1-, b2-, b3-).

    With w the unit bivector of an orthonormal basis, iota1 = (w + *w)/sqrt(2) and
    iota2 = (w - *w)/sqrt(2), where
    b1+- = (e12 +- e34)/sqrt(2), b2+- = (e13 -+ e24)/sqrt(2), b3+- = (e14 +- e23)/sqrt(2).

    Raises:
        DegeneratePlane: If the plane is degenerate.
    """
    u = orthonormalize(p)
    a, b = u.v1, u.v2

    def wedge(i: int, j: int) -> float:
        return a[i] * b[j] - a[j] * b[i]

    w12, w13, w14 = wedge(0, 1), wedge(0, 2), wedge(0, 3)
    w23, w24, w34 = wedge(1, 2), wedge(1, 3), wedge(2, 3)
    iota1 = np.array([w12 + w34, w13 - w24, w14 + w23])
    iota2 = np.array([w12 - w34, w13 + w24, w14 - w23])
    return iota1, iota2


def _sphere_coordinates(iota: np.ndarray) -> Tuple[float, float]:
    height = float(np.clip(iota[0], -1.0, 1.0))
    angle = float(np.mod(np.arctan2(iota[1], iota[2]), TWO_PI))
    return height, angle


def gluck_warner(p: Plane) -> SpherePointPair:
    """Gluck-Warner coordinates of a plane.

    On the representative of (theta, psi) these are x = cos(theta), y = cos(theta + 2 psi)
    and phi1 = phi2 = 0 whenever the equatorial parts are nonzero.

    Raises:
        DegeneratePlane: If the plane is degenerate.
    """
    iota1, iota2 = self_dual_components(p)
    x, phi1 = _sphere_coordinates(iota1)
    y, phi2 = _sphere_coordinates(iota2)
    return SpherePointPair(x, phi1, y, phi2)


def gluck_warner_pairing(first: SpherePointPair, second: SpherePointPair) -> float:
    """|<xi_P, xi_Q> + <eta_P, eta_Q>| / 2, equal to pairing(P, Q)."""
    value = abs(float(first.xi() @ second.xi() + first.eta() @ second.eta())) / 2.0
    return min(value, 1.0)


def in_torus_family(p: Plane, tolerance: float = NULLSPACE_TOLERANCE) -> bool:
    """Whether p = span((z, 0), (0, w)), i.e. both Gluck-Warner heights vanish."""
    iota1, iota2 = self_dual_components(p)
    return abs(iota1[0]) <= tolerance and abs(iota2[0]) <= tolerance


def reduce_to_orbit(p: Plane) -> Tuple[OrbitParams, TorusElement]:
    """Finds (theta, psi) and a torus element t with torus_act(t, orbit_representative) == p.

    The torus fixes both Gluck-Warner heights and rotates the two spheres about their
    b1 axes, so the orbit is read off the heights. The orientation is chosen so that
    y <= x (ties broken towards x >= 0), which gives theta = arccos x and
    theta + 2 psi = arccos y <= pi. This is the lexicographically smallest representative.
    Orbits whose heights satisfy y > x >= 0 in both orientations have no representative
    with theta <= pi/2; for them theta comes out in (pi/2, pi].

    The quasi-J construction of `quasi_j_reduction` lands on the same orbit. Its heights are
    checked against these up to a common sign, and a mismatch is logged.

    Raises:
        DegeneratePlane: If the plane is degenerate.
    """
    iota1, iota2 = self_dual_components(p)
    tie = 1e-14
    if iota2[0] > iota1[0] + tie or (abs(iota2[0] - iota1[0]) <= tie and iota1[0] < 0.0):
        iota1, iota2 = -iota1, -iota2

    radius1 = float(np.hypot(iota1[1], iota1[2]))
    radius2 = float(np.hypot(iota2[1], iota2[2]))
    theta = float(np.arctan2(radius1, iota1[0]))
    total = float(np.arctan2(radius2, iota2[0]))
    params = OrbitParams(theta, max(0.0, (total - theta) / 2.0))

    # rotation angles that carry the representative onto p
    rep1, rep2 = self_dual_components(orbit_representative(params))
    shift1 = 0.0
    if radius1 > GRAM_TOLERANCE:
        shift1 = np.arctan2(rep1[1], rep1[2]) - np.arctan2(iota1[1], iota1[2])
    shift2 = 0.0
    if radius2 > GRAM_TOLERANCE:
        shift2 = np.arctan2(iota2[1], iota2[2]) - np.arctan2(rep2[1], rep2[2])
    element = TorusElement((shift1 + shift2) / 2.0, (shift1 - shift2) / 2.0)

    defect = torus_act(element, orbit_representative(params)).distance(p)
    if defect > PROJECTOR_TOLERANCE:
        logger.warning(f"Orbit reduction round trip is off by {defect:.3e}")

    raw_theta, raw_psi, _ = quasi_j_reduction(p)
    heights = np.array([np.cos(params.theta), np.cos(params.theta + 2.0 * params.psi)])
    raw = np.array([np.cos(raw_theta), np.cos(raw_theta + 2.0 * raw_psi)])
    mismatch = min(np.max(np.abs(raw - heights)), np.max(np.abs(raw + heights)))
    if mismatch > np.sqrt(PROJECTOR_TOLERANCE):
        logger.warning(f"Quasi-J reduction disagrees with the Gluck-Warner heights by {mismatch:.3e}")
    return params, element
