"""Geometry on the Stiefel manifold.

Bases are plain ``(M, R)`` float arrays with orthonormal columns. Every
public function validates its inputs with :func:`check_orthonormal` so a
caller never has to wrap arrays in a container type.
"""

from __future__ import annotations

import warnings

import numpy as np

ORTHO_TOL = 1e-10
SYM_TOL = 1e-10


class DegenerateSubspaceWarning(UserWarning):
    """The requested R-dimensional subspace is not uniquely determined."""


def check_orthonormal(H, tol: float = ORTHO_TOL) -> np.ndarray:
    """Return ``H`` as a float array, raising if ``H^T H != I``.

    Parameters
    ----------
    H : array_like, shape (M, R)
    tol : float
        Maximum allowed absolute deviation of ``H^T H`` from the identity.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2:
        raise ValueError(f"basis must be a 2-D array, got shape {H.shape}")
    M, R = H.shape
    if R < 1 or R > M:
        raise ValueError(f"basis shape {H.shape} needs 1 <= R <= M")
    err = np.max(np.abs(H.T @ H - np.eye(R)))
    if not err <= tol:
        raise ValueError(f"columns are not orthonormal (max |H^T H - I| = {err:.3g})")
    return H


def _check_pair(U, V) -> tuple[np.ndarray, np.ndarray]:
    U = check_orthonormal(U)
    V = check_orthonormal(V)
    if U.shape != V.shape:
        raise ValueError(f"dimension mismatch: {U.shape} vs {V.shape}")
    return U, V


def check_symmetric(A, tol: float = SYM_TOL) -> np.ndarray:
    """Validate a square symmetric matrix; the tolerance is relative to max|A|."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    asym = float(np.max(np.abs(A - A.T))) if A.size else 0.0
    if not asym <= tol * scale:
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3g})")
    return A


def principal_angles(U, V) -> np.ndarray:
    """Principal angles (radians, ascending) between ``span(U)`` and ``span(V)``.

    The cosines are the singular values of ``U^T V``, clipped to [0, 1].
    """
    U, V = _check_pair(U, V)
    s = np.linalg.svd(U.T @ V, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, 0.0, 1.0)))


def subspace_sq_distance(U, V) -> float:
    """Squared projection distance ``R - ||U^T V||_F^2`` (= sum of sin^2 of the angles)."""
    U, V = _check_pair(U, V)
    d = U.shape[1] - float(np.sum((U.T @ V) ** 2))
    return max(d, 0.0)


def _top_eigvecs(A: np.ndarray, R: int) -> tuple[np.ndarray, np.ndarray]:
    w, E = np.linalg.eigh(A)
    # eigh is ascending; flip so column 0 is the leading eigenvector
    return w[::-1], E[:, ::-1][:, :R]


def principal_subspace(A, R: int, warn: bool = True) -> np.ndarray:
    """Eigenvectors of the ``R`` algebraically largest eigenvalues of ``A``.

    ``A`` is symmetrized as ``(A + A^T) / 2`` first. When the R-th and
    (R+1)-th eigenvalues coincide the result is one valid basis of a
    non-unique invariant subspace and a :class:`DegenerateSubspaceWarning`
    is issued (suppress with ``warn=False``).
    """
    A = check_symmetric(A)
    M = A.shape[0]
    if not 1 <= R <= M:
        raise ValueError(f"R={R} must satisfy 1 <= R <= M={M}")
    w, E = _top_eigvecs(0.5 * (A + A.T), R)
    if warn and R < M:
        scale = max(1.0, float(np.max(np.abs(w))))
        if w[R - 1] - w[R] <= 1e-12 * scale:
            warnings.warn(
                f"eigenvalues {R} and {R + 1} are tied; principal subspace is not unique",
                DegenerateSubspaceWarning,
                stacklevel=2,
            )
    return E


def orthonormalize(G: np.ndarray) -> np.ndarray:
    """Thin QR with the sign convention ``diag(R) > 0``."""
    Q, Rf = np.linalg.qr(G)
    d = np.sign(np.diag(Rf))
    d[d == 0] = 1.0
    return Q * d


def uniform_stiefel(M: int, R: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a basis uniformly from the Stiefel manifold ``V_R(R^M)``."""
    if not 1 <= R <= M:
        raise ValueError(f"R={R} must satisfy 1 <= R <= M={M}")
    return orthonormalize(rng.standard_normal((M, R)))


def complement_basis(H: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``span(H)``."""
    M, R = H.shape
    if R == 0:
        return np.eye(M)
    Q, _ = np.linalg.qr(H, mode="complete")
    return Q[:, R:]
