"""Spectrahedra: affine slices of the PSD cone, faces, and error measures.

A feasibility region {X >= 0 : <A_i, X> = b_i} is held as the list of
constraint matrices plus the right-hand side. The svec image of the map is
cached as an ordinary matrix so that affine distances along a path reduce
to repeated least-squares solves against one factorization.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import (
    EmptyFace,
    InfeasibleAffine,
    InvalidDimension,
    InvalidMap,
    InvalidMatrix,
    InvalidSample,
    OracleUnavailable,
)
from .symmetric import eig_desc, inner, proj_psd, smat, svec, symmetrize

# numerical rank cutoff (relative to the largest singular value) used both for
# the surjectivity flag and for dropping dependent rows after a face restriction
RANK_TOL = 1e-9


class LinearMapA:
    """Constraint map: m symmetric matrices A_i of order n plus rhs b.

    m = 0 (the whole cone) is allowed when the order is passed explicitly.
    """

    def __init__(self, mats, b, n=None, row_map=None):
        mats = [symmetrize(A) for A in mats]
        b = np.asarray(b, dtype=float).reshape(-1)
        if len(mats) != b.size:
            raise InvalidMap(f"{len(mats)} constraint matrices but rhs of length {b.size}")
        if not np.all(np.isfinite(b)):
            raise InvalidMap("rhs has non-finite entries")
        if mats:
            n0 = mats[0].shape[0]
            if any(A.shape[0] != n0 for A in mats):
                raise InvalidMap("constraint matrices have mixed orders")
            if n is not None and n != n0:
                raise InvalidMap(f"declared order {n} but matrices have order {n0}")
            n = n0
        elif n is None:
            raise InvalidMap("empty map needs an explicit order n")
        self.n = int(n)
        self.m = len(mats)
        self.mats = mats
        self.b = b
        # rows of the original map that survived reductions, for replay bookkeeping
        self.row_map = list(range(self.m)) if row_map is None else list(row_map)
        s = self.n * (self.n + 1) // 2
        self.Asv = (
            np.array([svec(A) for A in mats]) if mats else np.zeros((0, s))
        )  # m x n(n+1)/2
        sv = np.linalg.svd(self.Asv, compute_uv=False) if self.m else np.array([])
        self.sigma_max = float(sv[0]) if sv.size else 0.0
        rank = int(np.sum(sv >= RANK_TOL * max(self.sigma_max, 1e-300)))
        self.surjective = rank == self.m
        self._pinv = None

    def apply(self, X):
        """Forward map: component i is <A_i, X>."""
        X = np.asarray(X, dtype=float)
        if X.shape != (self.n, self.n):
            raise InvalidDimension(f"expected order {self.n}, got {X.shape}")
        return self.Asv @ svec(X)

    def adjoint(self, y):
        """Adjoint map: sum_i y_i A_i."""
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size != self.m:
            raise InvalidDimension(f"expected length {self.m}, got {y.size}")
        return smat(self.Asv.T @ y, self.n)

    def pinv_apply(self, r):
        """Minimum-norm svec correction d with Asv @ d = r (least squares)."""
        if self.m == 0:
            return np.zeros(self.n * (self.n + 1) // 2)
        if self._pinv is None:
            self._pinv = np.linalg.pinv(self.Asv, rcond=RANK_TOL)
        return self._pinv @ r

    def __repr__(self):
        return f"LinearMapA(n={self.n}, m={self.m}, surjective={self.surjective})"


@dataclass(frozen=True)
class FaceRep:
    """Face of the PSD cone as (V, W): range basis V, exposing vector W, WV = 0."""

    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if V.ndim != 2:
            raise InvalidMatrix("V must be a matrix")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "W", symmetrize(self.W))
        n, r = V.shape
        if self.W.shape[0] != n:
            raise InvalidDimension("V and W orders differ")
        if r > 0 and np.linalg.norm(V.T @ V - np.eye(r)) > 1e-6:
            raise InvalidMatrix("V does not have orthonormal columns")
        wnorm = np.linalg.norm(self.W)
        if np.linalg.norm(self.W @ V) > 1e-6 * max(1.0, wnorm):
            raise InvalidMatrix("W V != 0: not a face pair")
        lam_w = eig_desc(self.W).values
        if lam_w[-1] < -1e-9 * max(1.0, lam_w[0]):
            raise InvalidMatrix("exposing vector is not PSD")
        comp = eig_desc(self.W + V @ V.T).values
        if comp[-1] <= 1e-9:
            raise InvalidMatrix("W + V V^T is not positive definite")

    @property
    def r(self):
        return self.V.shape[1]


@dataclass
class Certificate:
    """Ground-truth annotations attached by generators, used by oracles and replay."""

    sd_true: Optional[int] = None
    max_rank_true: Optional[int] = None
    solution_face: Optional[FaceRep] = None
    singleton_solution: Optional[np.ndarray] = None
    exposing_chain: Optional[list] = None  # list of (y, Z) pairs in reduced coordinates


@dataclass
class Spectrahedron:
    """Feasibility region {X >= 0 : A(X) = b} with optional certificate."""

    map: LinearMapA
    certificate: Optional[Certificate] = None

    @property
    def n(self):
        return self.map.n

    @property
    def m(self):
        return self.map.m


def backward_error(F, X):
    """Distance to the affine subspace plus distance to the PSD cone.

    The affine term is the norm of the minimum-norm symmetric correction
    restoring A(X + D) = b. Raises InfeasibleAffine when the constraint map
    is rank-deficient and b is not in its range.
    """
    amap = F.map if isinstance(F, Spectrahedron) else F
    X = symmetrize(X)
    r = amap.b - amap.apply(X)
    d = amap.pinv_apply(r)
    resid = np.linalg.norm(amap.Asv @ d - r)
    if resid > 1e-8 * max(1.0, np.linalg.norm(amap.b)):
        raise InfeasibleAffine(f"rhs outside the range of the map (residual {resid:.3e})")
    from .symmetric import dist_psd

    return float(np.linalg.norm(d) + dist_psd(X))


def _project_face_affine(face_map, R0):
    """Projection of R0 onto {R : face_map(R) = b} (affine part only)."""
    r = face_map.b - face_map.apply(R0)
    return R0 + smat(face_map.pinv_apply(r), R0.shape[0])


def _dykstra_project(face_map, R0, tol=1e-10, max_iter=5000):
    """Dykstra alternating projections onto {R >= 0} and the affine slice.

    Returns an affine-feasible, PSD (up to projection residual) point. The
    final PSD clip error is folded back through one more affine projection,
    keeping the output on the affine subspace.
    """
    R = _project_face_affine(face_map, R0)
    P = np.zeros_like(R)
    Q = np.zeros_like(R)
    scale = max(1.0, np.linalg.norm(R0))
    last = None
    for _ in range(max_iter):
        Y = proj_psd(R + P)
        P = R + P - Y
        R_new = _project_face_affine(face_map, Y + Q)
        Q = Y + Q - R_new
        move = np.linalg.norm(R_new - R)
        R = R_new
        if last is not None and move <= tol * scale and last <= tol * scale:
            break
        last = move
    # land on the affine slice with the PSD defect as a reported gap bound
    lam_min = eig_desc(R).values[-1]
    psd_defect = max(0.0, -lam_min)
    return R, psd_defect


def forward_error(F, X, tol=1e-10):
    """Frobenius distance from X to the feasible set, via the certificate.

    Exact for singleton certificates. For a certified face (V, W), the set is
    {V R V^T : R >= 0, A(V R V^T) = b}; the projection splits into the fixed
    out-of-face component plus a Dykstra solve in the r x r face coordinates.
    Raises OracleUnavailable without a usable certificate.
    """
    cert = F.certificate
    X = symmetrize(X)
    if cert is not None and cert.singleton_solution is not None:
        return float(np.linalg.norm(X - cert.singleton_solution))
    if cert is not None and cert.solution_face is not None:
        V = cert.solution_face.V
        if V.shape[1] == 0:
            # face is the origin
            return float(np.linalg.norm(X))
        face_map = reduce_map(F.map, V, drop_dependent=True)
        R0 = V.T @ X @ V
        R, psd_defect = _dykstra_project(face_map, R0, tol=tol)
        out_of_face = np.linalg.norm(X - V @ R0 @ V.T) ** 2
        dist2 = out_of_face + np.linalg.norm(R - R0) ** 2
        # psd_defect bounds how far R sits outside the cone; fold into the value
        return float(np.sqrt(dist2) + psd_defect)
    raise OracleUnavailable("certificate provides neither a singleton nor a solution face")


def reduce_map(amap, V, drop_dependent=True):
    """Restrict the map to a face: matrices V^T A_i V, same rhs, order r.

    Dependent constraint rows (after restriction) are dropped with a
    rank-revealing pivoted QR at threshold RANK_TOL * sigma_max, restoring
    surjectivity for the path follower. Raises EmptyFace for r = 0.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != amap.n:
        raise InvalidDimension(f"V must be {amap.n} x r")
    r = V.shape[1]
    if r == 0:
        raise EmptyFace("face restriction has rank zero")
    if amap.m == 0:
        return LinearMapA([], [], n=r, row_map=[])
    red = [0.5 * ((V.T @ A @ V) + (V.T @ A @ V).T) for A in amap.mats]
    Asv = np.array([svec(A) for A in red])
    if not drop_dependent:
        return LinearMapA(red, amap.b, row_map=amap.row_map)
    # pivoted QR on rows: keep a maximal well-conditioned independent subset
    _, R, piv = scipy.linalg.qr(Asv.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.array([])
    if diag.size and diag[0] > 0:
        keep_count = int(np.sum(diag >= RANK_TOL * diag[0]))
    else:
        keep_count = 0
    keep = sorted(piv[:keep_count])
    if not keep:
        # all rows restricted to zero; a nonzero rhs on a zeroed row is an
        # inconsistency the caller must see
        if np.any(np.abs(amap.b) > 1e-10):
            raise InfeasibleAffine("face restriction zeroed a row with nonzero rhs")
        return LinearMapA([], [], n=r, row_map=[])
    mats = [red[i] for i in keep]
    b = amap.b[keep]
    row_map = [amap.row_map[i] for i in keep]
    return LinearMapA(mats, b, row_map=row_map)


def is_exposing(F, W, samples, feas_tol=1e-8):
    """True iff W is PSD (to tolerance) and orthogonal to every feasible sample.

    Samples are rechecked for feasibility (backward error <= feas_tol);
    an infeasible sample raises InvalidSample. A zero W is vacuously exposing.
    """
    W = symmetrize(W)
    wnorm = np.linalg.norm(W)
    if wnorm == 0.0:
        return True
    lam = eig_desc(W).values
    if lam[-1] < -1e-9 * max(1.0, lam[0]):
        return False
    for idx, Xs in enumerate(samples):
        Xs = symmetrize(Xs)
        be = backward_error(F, Xs)
        if be > feas_tol * max(1.0, np.linalg.norm(Xs)):
            raise InvalidSample(f"sample {idx} has backward error {be:.3e}")
        if abs(inner(W, Xs)) > 1e-8 * wnorm * max(1.0, np.linalg.norm(Xs)):
            return False
    return True
