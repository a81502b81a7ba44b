"""Small dense linear-algebra kernel used by every other module.

Backed by LAPACK through numpy/scipy: symmetric eigendecomposition via
``numpy.linalg.eigh`` and linear solves via partial-pivot LU
(``scipy.linalg.lu_factor``), with the singularity threshold exposed
explicitly so callers get a deterministic error instead of garbage.
"""

import warnings
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ContractError, SingularMatrixError

#: pivots below this fraction of the largest row norm count as singular
SINGULARITY_RTOL = 1e-12

#: relative asymmetry accepted by eig_sym
SYMMETRY_RTOL = 1e-10


class EigenResult(NamedTuple):
    """Eigendecomposition of a symmetric matrix.

    eigenvalues are ascending; eigenvectors are the orthonormal columns of
    ``vectors``, paired with ``values`` by position.
    """

    values: np.ndarray
    vectors: np.ndarray


def as_square_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractError(f"{name} has non-finite entries")
    return M


def sym_part(M):
    """Symmetric part (M + M^T)/2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def eig_sym(M, sym_rtol=SYMMETRY_RTOL):
    """Eigendecomposition of a symmetric matrix, eigenvalues ascending.

    Parameters
    ----------
    M : array_like
        Square matrix, symmetric to ``sym_rtol`` relative.

    Returns
    -------
    EigenResult

    Raises
    ------
    ContractError
        If M is not square or not symmetric within tolerance.
    """
    M = as_square_matrix(M, "M")
    scale = np.abs(M).max()
    if scale > 0 and np.abs(M - M.T).max() > sym_rtol * scale:
        raise ContractError("M is not symmetric within tolerance")
    values, vectors = np.linalg.eigh(M)
    return EigenResult(values, vectors)


def solve_linear(M, b):
    """Solve M x = b by partial-pivot LU.

    Raises SingularMatrixError when a pivot falls below
    ``SINGULARITY_RTOL`` times the largest row norm of M.
    """
    M = as_square_matrix(M, "M")
    b = np.asarray(b, dtype=float)
    if b.shape[0] != M.shape[0]:
        raise ContractError(f"rhs length {b.shape[0]} does not match matrix size {M.shape[0]}")
    if M.shape[0] == 0:
        return np.zeros_like(b)
    row_norm = float(np.max(np.linalg.norm(M, axis=1)))
    if row_norm == 0.0:
        raise SingularMatrixError("matrix is identically zero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    if np.abs(np.diag(lu)).min() < SINGULARITY_RTOL * row_norm:
        raise SingularMatrixError(
            f"pivot below {SINGULARITY_RTOL:g} * largest row norm ({row_norm:g})")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def lu_factorize(M):
    """Factorize once for repeated solves; same singularity contract as solve_linear."""
    M = as_square_matrix(M, "M")
    row_norm = float(np.max(np.linalg.norm(M, axis=1)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    if row_norm == 0.0 or np.abs(np.diag(lu)).min() < SINGULARITY_RTOL * row_norm:
        raise SingularMatrixError("matrix is singular to working precision")
    return lu, piv


def lu_solve(factors, b):
    return scipy.linalg.lu_solve(factors, b, check_finite=False)


def is_positive_definite(M, tol=0.0):
    """True iff the symmetric part of M has all eigenvalues above tol.

    Matches the quadratic-form definition w^T M w > 0, which only sees
    (M + M^T)/2, so the answer is the same for M and M^T.
    """
    M = as_square_matrix(M, "M")
    return bool(np.linalg.eigvalsh(sym_part(M)).min() > tol)


def eigvals_sym(M):
    """Ascending eigenvalues of a (symmetrized) matrix; convenience wrapper."""
    return np.linalg.eigvalsh(sym_part(as_square_matrix(M, "M")))
