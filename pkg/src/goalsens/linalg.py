"""Small dense linear-algebra kernels.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 in numpy's
default row-major (C) layout; ensemble matrices store one member per column.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import ConfigError, DegenerateVector, DimensionMismatch, SingularSystem

#: Relative norm below which a Gram-Schmidt residual counts as degenerate.
GS_DEGENERACY_TOL = 1e-12
#: Cosine with a basis vector above which a classical Gram-Schmidt pass is repeated.
GS_ORTHOGONALITY_TOL = 1e-10
GS_MAX_PASSES = 3

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RegularizationPolicy:
    """Diagonal shift ``eps_s = alpha_s / E * trace(M^T M)`` for the normal equations."""

    alpha_s: float = 1e-14
    enabled: bool = True

    def __post_init__(self):
        if not (self.alpha_s >= 0.0 and np.isfinite(self.alpha_s)):
            raise ConfigError(f"alpha_s must be finite and >= 0, got {self.alpha_s!r}")

    @property
    def effective_alpha(self) -> float:
        return self.alpha_s if self.enabled else 0.0

    @classmethod
    def off(cls) -> "RegularizationPolicy":
        return cls(alpha_s=0.0, enabled=False)


def as_matrix(M, name="M") -> np.ndarray:
    """Validate and return ``M`` as a finite 2-D float64 array."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _as_vector(v, name="v") -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {x.shape}")
    return x


def matvec(A, x) -> np.ndarray:
    """Return ``A @ x``."""
    A = np.asarray(A, dtype=float)
    x = _as_vector(x, "x")
    if A.ndim != 2 or A.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by vector of length {x.shape[0]}")
    return A @ x


def matTvec(A, y) -> np.ndarray:
    """Return ``A.T @ y``."""
    A = np.asarray(A, dtype=float)
    y = _as_vector(y, "y")
    if A.ndim != 2 or A.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape}^T by vector of length {y.shape[0]}")
    return A.T @ y


def matmul(A, B) -> np.ndarray:
    """Return ``A @ B`` for two 2-D arrays."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def regularization_shift(gram: np.ndarray, policy: RegularizationPolicy | None) -> float:
    """``alpha_s / E * trace(gram)``, zero when regularisation is off."""
    if policy is None or policy.effective_alpha == 0.0:
        return 0.0
    return policy.effective_alpha / gram.shape[0] * float(np.trace(gram))


def solve_spd(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive (semi)definite system.

    Cholesky is tried first and pivoted Gaussian elimination second. Either
    way a pivot below ``eps * max(diag(A))`` raises :class:`SingularSystem`.
    Works for a vector or a matrix right-hand side.
    """
    scale = float(np.max(np.abs(np.diag(A)))) if A.size else 0.0
    threshold = _EPS * scale
    if scale == 0.0:
        raise SingularSystem("normal matrix is identically zero")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        pivots = np.diag(L) ** 2
        if pivots.min() <= threshold:
            raise SingularSystem(
                f"Cholesky pivot {pivots.min():.3e} below threshold {threshold:.3e}"
            )
        y = scipy.linalg.solve_triangular(L, rhs, lower=True, check_finite=False)
        return scipy.linalg.solve_triangular(L.T, y, lower=False, check_finite=False)
    with warnings.catch_warnings():
        # an exactly zero pivot is reported below as SingularSystem
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    u = np.abs(np.diag(lu))
    if u.min() <= threshold:
        raise SingularSystem(f"LU pivot {u.min():.3e} below threshold {threshold:.3e}")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def regularized_normal_solve(M, rhs, policy: RegularizationPolicy | None = None) -> np.ndarray:
    """Solve ``(M^T M + eps_s I) x = rhs``.

    Parameters
    ----------
    M : array_like, shape (N, E)
        Ensemble matrix, one column per member.
    rhs : array_like, shape (E,)
    policy : RegularizationPolicy, optional
        ``None`` means unregularised.

    Returns
    -------
    x : ndarray, shape (E,)

    Raises
    ------
    SingularSystem
        If a pivot of the (shifted) normal matrix falls below
        ``eps * max(diag)``.
    """
    M = as_matrix(M)
    rhs = _as_vector(rhs, "rhs")
    if rhs.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected {M.shape[1]}")
    gram = M.T @ M
    shift = regularization_shift(gram, policy)
    if shift:
        gram = gram + shift * np.eye(gram.shape[0])
    return solve_spd(gram, rhs)


def gram_schmidt_against(v, basis: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Remove from ``v`` its projections onto each basis vector.

    ``basis`` is a sequence of vectors, or a 2-D array with one vector per row.

    Classical Gram-Schmidt: every coefficient ``b_k^T v / b_k^T b_k`` uses the
    original ``v``. The pass is repeated (up to ``GS_MAX_PASSES`` times) until
    the cosine between the result and every basis vector is below
    ``GS_ORTHOGONALITY_TOL``.

    Raises
    ------
    DegenerateVector
        If the residual norm drops below ``GS_DEGENERACY_TOL * ||v||``, a
        basis vector has zero norm, or the passes fail to orthogonalise.
    """
    v = _as_vector(v)
    vnorm = float(np.linalg.norm(v))
    if len(basis) == 0:
        if vnorm == 0.0:
            raise DegenerateVector("zero vector")
        return v.copy()
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.ndim != 2 or B.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"basis vectors must have length {v.shape[0]}")
    norms2 = np.einsum("ij,ij->i", B, B)
    if np.any(norms2 == 0.0):
        raise DegenerateVector("basis contains a zero vector")
    bnorms = np.sqrt(norms2)

    r = v - B.T @ ((B @ v) / norms2)
    for _ in range(GS_MAX_PASSES):
        rnorm = float(np.linalg.norm(r))
        if rnorm <= GS_DEGENERACY_TOL * vnorm or rnorm == 0.0:
            raise DegenerateVector(f"residual norm {rnorm:.3e} vs input norm {vnorm:.3e}")
        # cosine between the residual and each basis vector
        if np.all(np.abs(B @ r) < GS_ORTHOGONALITY_TOL * bnorms * rnorm):
            return r
        r = r - B.T @ ((B @ r) / norms2)
    raise DegenerateVector(f"not orthogonal after {GS_MAX_PASSES} passes")


def orthonormalize_columns(D) -> np.ndarray:
    """Gram-Schmidt orthonormalisation of the columns of ``D`` in order.

    Returns ``Q`` with ``Q^T Q = I`` and ``span(Q[:, :j]) = span(D[:, :j])``.
    """
    D = as_matrix(D, "D")
    N, E = D.shape
    Q = np.empty_like(D)
    for j in range(E):
        r = gram_schmidt_against(D[:, j], Q[:, :j].T)
        Q[:, j] = r / np.linalg.norm(r)
    return Q
