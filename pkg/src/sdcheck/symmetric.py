"""Dense symmetric-matrix kernels.

Spectral decomposition with descending eigenvalue order, distance to and
projection onto the PSD cone, and the scaled upper-triangle vectorization
that turns constraint maps into ordinary matrices.

The eigensolver is a cyclic Jacobi iteration rather than a LAPACK call: it
is deterministic across BLAS builds and keeps high relative accuracy on the
tiny eigenvalues (down to ~1e-13) that the path diagnostics track.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidDimension, InvalidMatrix

_RT2 = np.sqrt(2.0)

# off-diagonal reduction target for the Jacobi sweep, relative to ||X||_F
JACOBI_TOL = 1e-13
_MAX_SWEEPS = 64


def symmetrize(M, rel_tol=1e-9):
    """Validate and exactly symmetrize a square matrix.

    Inputs within `rel_tol` (relative, Frobenius) of symmetric are averaged
    to (M + M^T)/2; anything worse, non-square, or non-finite raises
    InvalidMatrix.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidMatrix(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidMatrix("matrix has non-finite entries")
    scale = np.linalg.norm(M)
    skew = np.linalg.norm(M - M.T)
    if skew > rel_tol * max(1.0, scale):
        raise InvalidMatrix(f"matrix is asymmetric beyond tolerance: |M - M^T| = {skew:.3e}")
    return 0.5 * (M + M.T)


def inner(X, Y):
    """Trace inner product <X, Y> = trace(XY) for symmetric X, Y."""
    return float(np.tensordot(X, Y))


@dataclass(frozen=True)
class Spectrum:
    """Ordered spectral decomposition: values descending, vectors as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self):
        return self.values.shape[0]

    def reconstruct(self):
        return (self.vectors * self.values) @ self.vectors.T


def _jacobi(A):
    """Cyclic Jacobi sweeps; returns (diagonal values, accumulated rotations)."""
    n = A.shape[0]
    A = A.copy()
    V = np.eye(n)
    scale = np.linalg.norm(A)
    if scale == 0.0 or n == 1:
        return np.diag(A).copy(), V
    tol = JACOBI_TOL * scale
    for _ in range(_MAX_SWEEPS):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol:
            break
        # rotations below this size cannot move the off-norm past tol
        thresh = tol / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                app, aqq = A[p, p], A[q, q]
                colp = A[:, p].copy()
                colq = A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp = A[p, :].copy()
                rowq = A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                # rotated entries have closed forms; use them for accuracy
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def eig_desc(X):
    """Spectral decomposition with eigenvalues sorted descending.

    Deterministic for a fixed input. Raises InvalidMatrix on non-finite or
    asymmetric input.
    """
    X = symmetrize(X)
    values, vectors = _jacobi(X)
    order = np.argsort(-values, kind="stable")
    return Spectrum(values=values[order], vectors=vectors[:, order])


def dist_psd(X):
    """Frobenius distance from X to the PSD cone: ||min(lambda(X), 0)||_2."""
    lam = eig_desc(X).values
    return float(np.linalg.norm(np.minimum(lam, 0.0)))


def proj_psd(X):
    """Nearest PSD matrix in Frobenius norm: clip negative eigenvalues."""
    spec = eig_desc(X)
    lam = np.maximum(spec.values, 0.0)
    P = (spec.vectors * lam) @ spec.vectors.T
    return 0.5 * (P + P.T)


def svec(X):
    """Isometric vectorization: upper triangle with off-diagonals scaled by sqrt(2).

    Satisfies svec(X) . svec(Y) = <X, Y>.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    iu = np.triu_indices(n)
    w = np.where(iu[0] == iu[1], 1.0, _RT2)
    return X[iu] * w


def smat(v, n=None):
    """Inverse of svec. Raises InvalidDimension if the length is not triangular."""
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round((np.sqrt(8.0 * v.size + 1.0) - 1.0) / 2.0))
    if n * (n + 1) // 2 != v.size:
        raise InvalidDimension(f"svec length {v.size} does not match order {n}")
    X = np.zeros((n, n))
    iu = np.triu_indices(n)
    w = np.where(iu[0] == iu[1], 1.0, 1.0 / _RT2)
    X[iu] = v * w
    return X + np.triu(X, 1).T


def svec_basis(n):
    """n^2 x n(n+1)/2 matrix S with orthonormal columns and vec(X) = S svec(X)."""
    s = n * (n + 1) // 2
    S = np.zeros((n * n, s))
    k = 0
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / _RT2
            S[:, k] = E.reshape(-1)
            k += 1
    return S
