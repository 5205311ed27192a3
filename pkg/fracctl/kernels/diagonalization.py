from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..exceptions import InputError

# relative asymmetry accepted as round-off
SYMMETRY_TOL = 1e-10
# eigenvalues down to -PSD_TOL (1 + |lambda|_max) count as zero
PSD_TOL = 1e-10


def as_square_matrix(A, name="A"):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {A.shape}", field=name)
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} must be finite", field=name)
    return A


def check_symmetric(A, tol=SYMMETRY_TOL, name="A"):
    """Raise InputError unless |A - A^T| <= tol (1 + |A|) in spectral norm."""
    A = as_square_matrix(A, name)
    asym = np.linalg.norm(A - A.T, 2)
    if asym > tol * (1 + np.linalg.norm(A, 2)):
        raise InputError(f"{name} symmetric: asymmetry {asym:.3e} exceeds tolerance", field=name)
    return A


@dataclass(frozen=True)
class Diagonalization:
    """
    A = U diag(eigenvalues) U^T for a symmetric A.

    Eigenvalues ascend; each eigenvector's first nonzero component is positive.
    """
    U: np.ndarray
    eigenvalues: np.ndarray
    tol: float = SYMMETRY_TOL

    @property
    def d(self):
        return self.eigenvalues.shape[0]

    @property
    def lambda_max(self):
        """Largest eigenvalue modulus."""
        return float(np.max(np.abs(self.eigenvalues))) if self.d else 0.0

    @property
    def matrix(self):
        return (self.U * self.eigenvalues) @ self.U.T

    def to_eigenbasis(self, x):
        """U^T x along the last axis."""
        return np.asarray(x, dtype=float) @ self.U

    def from_eigenbasis(self, x):
        return np.asarray(x, dtype=float) @ self.U.T

    def transform_input(self, B):
        """B~ = U^T B."""
        return self.U.T @ np.atleast_2d(np.asarray(B, dtype=float))

    def is_psd(self, tol=PSD_TOL):
        return bool(np.all(self.eigenvalues >= -tol * (1 + self.lambda_max)))


def diagonalize(A, tol=SYMMETRY_TOL):
    """
    Orthogonal diagonalization of a symmetric matrix.

    Parameters
        A: np.ndarray
            (d, d) symmetric matrix
        tol: float
            Relative asymmetry tolerance
    Returns
        diag: Diagonalization
    """
    A = check_symmetric(A, tol)
    eigenvalues, U = linalg.eigh(0.5 * (A + A.T))
    for k in range(U.shape[1]):
        col = U[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if lead.size and col[lead[0]] < 0:
            U[:, k] = -col
    return Diagonalization(U=U, eigenvalues=eigenvalues, tol=tol)
