"""Exceptions and warnings raised by the numerical routines.

Every failure that the command line reports as a numerical failure derives from
`TorusCosineError`, so callers can catch one type and still read the payload of
the specific error through `to_record`.
"""

from typing import Any, Dict, Optional
import numpy as np


class TorusCosineError(Exception):
    """Base class for numerical failures of the library."""

    def to_record(self) -> Dict[str, Any]:
        """Returns a JSON friendly description of the error.

        Returns:
            Dict[str, Any]: The error name, its message, and any payload fields.
        """
        return {"error": type(self).__name__, "message": str(self)}


class DegeneratePlane(TorusCosineError, ValueError):
    """The two spanning vectors of a plane are (numerically) dependent."""

    def __init__(self, gram_determinant: float):
        self.gram_determinant = float(gram_determinant)
        super().__init__(
            f"Spanning vectors are dependent (Gram determinant {self.gram_determinant:.3e})"
        )

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["gram_determinant"] = self.gram_determinant
        return record


class SingularSystem(TorusCosineError):
    """The second kind system is singular and the right hand side violates solvability.

    The payload carries the L2 normalized null vector of the adjoint system and its
    weighted inner product with the right hand side.
    """

    def __init__(
        self,
        inner_product: float,
        condition: float,
        null_vector: Optional[np.ndarray] = None,
    ):
        self.inner_product = float(inner_product)
        self.condition = float(condition)
        self.null_vector = null_vector
        super().__init__(
            f"lambda is an eigenvalue of the discretized operator (condition {self.condition:.3e}); "
            f"<psi, f> = {self.inner_product:.3e} is not zero"
        )

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["inner_product"] = self.inner_product
        record["condition"] = self.condition
        return record


class NotHomogeneous(TorusCosineError, ValueError):
    """A supplied norm failed the positive 1-homogeneity spot check."""

    def __init__(self, scale: float, defect: float):
        self.scale = float(scale)
        self.defect = float(defect)
        super().__init__(
            f"Norm is not 1-homogeneous: relative defect {self.defect:.3e} at scale {self.scale}"
        )

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["scale"] = self.scale
        record["defect"] = self.defect
        return record


class NotUnit(TorusCosineError, ValueError):
    """A vector that should span a complex line is not of unit length."""

    def __init__(self, norm: float):
        self.norm = float(norm)
        super().__init__(f"Expected a unit vector, got norm {self.norm!r}")

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["norm"] = self.norm
        return record


class RankDeficientSample(TorusCosineError):
    """The sample does not determine every real parameter of a Hermitian form."""

    def __init__(self, rank: int, required: int):
        self.rank = int(rank)
        self.required = int(required)
        super().__init__(
            f"Moment system has rank {self.rank}, {self.required} is needed to fit a Hermitian form"
        )

    def to_record(self) -> Dict[str, Any]:
        record = super().to_record()
        record["rank"] = self.rank
        record["required"] = self.required
        return record


class IllConditioned(UserWarning):
    """Issued when an unregularized first kind system is too ill conditioned to trust."""


class SlowConvergence(UserWarning):
    """Issued when the binomial elliptic series is asked for a modulus close to one."""
