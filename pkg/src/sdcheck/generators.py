"""Certified instance generators and analytic fixtures.

Every generated region carries a certificate (true singularity degree, true
maximum rank, a solution face or singleton, and an exposing chain) that the
facial-reduction replay can validate independently. Generation is
deterministic in the seed: identical specs serialize to identical bytes.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import GenFailed, InvalidSpec, OutOfDomain
from .pathfollow import PathPoint, PathTrace
from .spectrahedron import (
    Certificate,
    FaceRep,
    LinearMapA,
    Spectrahedron,
    reduce_map,
)
from .symmetric import eig_desc, svec

# rank cutoff used when splitting an exposing vector during chain construction
_CHAIN_RANK_TOL = 1e-9


@dataclass(frozen=True)
class InstanceSpec:
    """Declarative description of a generated instance."""

    kind: str  # worst_case | slater | rank_r_sd1 | direct_sum | from_file
    n: int = 0
    m: Optional[int] = None
    r: Optional[int] = None
    seed: Optional[int] = None
    children: tuple = field(default_factory=tuple)
    path: Optional[str] = None


def _basis_outer(n, i, j=None):
    E = np.zeros((n, n))
    if j is None or i == j:
        E[i, i] = 1.0
    else:
        E[i, j] = E[j, i] = 0.5
    return E


def _build_chain(amap, targets):
    """Construct an exposing chain by replaying the reduction with known targets.

    `targets` are PSD contributions in original coordinates, one per step;
    each is pulled back to the current face coordinates, matched to a
    multiplier by least squares, and used to shrink the face exactly as the
    reduction algorithm would. Returns (chain, V_final, final_map).
    """
    n = amap.n
    Vk = np.eye(n)
    amap_k = amap
    chain = []
    for T in targets:
        Zt = Vk.T @ T @ Vk
        Zt = 0.5 * (Zt + Zt.T)
        y, *_ = np.linalg.lstsq(amap_k.Asv.T, svec(Zt), rcond=None)
        resid = np.linalg.norm(amap_k.Asv.T @ y - svec(Zt))
        if resid > 1e-8 * max(1.0, np.linalg.norm(Zt)):
            raise GenFailed(f"exposing target not in the range of the adjoint ({resid:.2e})")
        if abs(y @ amap_k.b) > 1e-9 * max(1.0, np.linalg.norm(y) * np.linalg.norm(amap_k.b)):
            raise GenFailed("exposing multiplier has nonzero inner product with rhs")
        chain.append((y.copy(), Zt.copy()))
        spec = eig_desc(Zt)
        q = int(np.sum(spec.values > _CHAIN_RANK_TOL * max(spec.values[0], 1e-300)))
        if q == 0:
            raise GenFailed("zero exposing target")
        Q2 = spec.vectors[:, q:]
        if Q2.shape[1] == 0:
            Vk = np.zeros((n, 0))
            break
        Vk = Vk @ Q2
        amap_k = reduce_map(amap_k, Q2)
    return chain, Vk, amap_k


def gen_worst_case(n):
    """The cascade family: X_11 = 1, X_22 = 0, X_{j+1,j+1} = X_{1,j} for j = 2..n-1.

    The feasible set is the singleton with 1 in the upper-left corner and
    zeros elsewhere; each facial-reduction step exposes exactly one more
    coordinate, so the singularity degree is n - 1.
    """
    if n < 2:
        raise InvalidSpec("worst_case needs n >= 2")
    mats = [_basis_outer(n, 0), _basis_outer(n, 1)]
    b = np.zeros(n)
    b[0] = 1.0
    for j in range(2, n):
        A = _basis_outer(n, j) - _basis_outer(n, 0, j - 1)
        mats.append(A)
    amap = LinearMapA(mats, b)
    targets = [_basis_outer(n, k) for k in range(1, n)]
    chain, V_final, _ = _build_chain(amap, targets)
    singleton = _basis_outer(n, 0)
    W_face = np.eye(n) - singleton  # exposes the singleton's face exactly
    cert = Certificate(
        sd_true=n - 1,
        max_rank_true=1,
        solution_face=FaceRep(V=np.eye(n)[:, :1], W=W_face),
        singleton_solution=singleton,
        exposing_chain=chain,
    )
    return Spectrahedron(map=amap, certificate=cert)


def _random_orth(rng, n, k):
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return Q[:, :k]


def _random_sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def gen_slater(n, m, seed):
    """Strictly feasible instance: random map, rhs from a random X0 > 0.

    The first constraint fixes the trace, which keeps the region bounded for
    the path follower. Eigenvalues of X0 are drawn from [0.5, 2].
    """
    if not 1 <= m <= n * (n + 1) // 2 - 1:
        raise InvalidSpec(f"slater needs 1 <= m <= {n * (n + 1) // 2 - 1}")
    rng = np.random.default_rng(seed)
    for _ in range(10):
        Q = _random_orth(rng, n, n)
        X0 = Q @ np.diag(rng.uniform(0.5, 2.0, n)) @ Q.T
        X0 = 0.5 * (X0 + X0.T)
        mats = [np.eye(n)] + [_random_sym(rng, n) for _ in range(m - 1)]
        amap = LinearMapA(mats, [float(np.tensordot(A, X0)) for A in mats])
        if amap.surjective:
            cert = Certificate(
                sd_true=0,
                max_rank_true=n,
                solution_face=FaceRep(V=np.eye(n), W=np.zeros((n, n))),
            )
            return Spectrahedron(map=amap, certificate=cert)
    raise GenFailed(f"no surjective draw for slater(n={n}, m={m}, seed={seed})")


def gen_rank_r_sd1(n, r, seed):
    """Singularity-degree-1 instance with known maximum rank r.

    A seeded face basis V and a positive-definite exposing vector W on its
    complement; the constraint <W, X> = 0 (rhs 0) exposes the face in one
    step. Further constraints (trace plus n random ones) are made consistent
    with a seeded interior point of the face, so the maximum rank is exactly r.
    """
    if not 1 <= r <= n - 1:
        raise InvalidSpec("rank_r_sd1 needs 1 <= r <= n - 1")
    rng = np.random.default_rng(seed)
    for _ in range(10):
        Q = _random_orth(rng, n, n)
        V, U = Q[:, :r], Q[:, r:]
        W = U @ np.diag(rng.uniform(0.5, 2.0, n - r)) @ U.T
        W = 0.5 * (W + W.T)
        QR_ = _random_orth(rng, r, r)
        Rbar = QR_ @ np.diag(rng.uniform(0.5, 2.0, r)) @ QR_.T
        Xbar = V @ Rbar @ V.T
        Xbar = 0.5 * (Xbar + Xbar.T)
        mats = [W, np.eye(n)] + [_random_sym(rng, n) for _ in range(n)]
        b = [float(np.tensordot(A, Xbar)) for A in mats]
        b[0] = 0.0  # exact: <W, V R V^T> vanishes by construction
        amap = LinearMapA(mats, b)
        if not amap.surjective:
            continue
        chain, _, _ = _build_chain(amap, [W])
        cert = Certificate(
            sd_true=1,
            max_rank_true=r,
            solution_face=FaceRep(V=V, W=W),
            exposing_chain=chain,
        )
        return Spectrahedron(map=amap, certificate=cert)
    raise GenFailed(f"no surjective draw for rank_r_sd1(n={n}, r={r}, seed={seed})")


def _chain_increments(F):
    """Exposing contributions of a certified chain in original coordinates."""
    chain = F.certificate.exposing_chain or []
    n = F.map.n
    Vk = np.eye(n)
    out = []
    for _, Z in chain:
        out.append(Vk @ Z @ Vk.T)
        spec = eig_desc(Z)
        q = int(np.sum(spec.values > _CHAIN_RANK_TOL * max(spec.values[0], 1e-300)))
        Q2 = spec.vectors[:, q:]
        Vk = Vk @ Q2
    return out


def gen_direct_sum(children):
    """Block-diagonal composition of certified instances.

    Constraints are zero-padded per block; the composite face is the block
    diagonal of the children's faces and the composite chain exposes all
    children's step-l vectors simultaneously, so the singularity degree is
    the maximum over children (validated by replay, not assumed).
    """
    if len(children) < 2:
        raise InvalidSpec("direct_sum needs at least two children")
    for c in children:
        if c.certificate is None or c.certificate.sd_true is None:
            raise InvalidSpec("direct_sum children must be certified")
        if c.certificate.solution_face is None and c.certificate.singleton_solution is None:
            raise InvalidSpec("direct_sum children must carry a face or singleton")
    ns = [c.map.n for c in children]
    n = sum(ns)
    offs = np.cumsum([0] + ns)
    mats, b = [], []
    for c, off in zip(children, offs):
        for A, bi in zip(c.map.mats, c.map.b):
            M = np.zeros((n, n))
            M[off:off + A.shape[0], off:off + A.shape[0]] = A
            mats.append(M)
            b.append(float(bi))
    amap = LinearMapA(mats, b)

    # composite face: block diagonal of the children's faces
    def child_face(c):
        cert = c.certificate
        if cert.solution_face is not None:
            return cert.solution_face.V, cert.solution_face.W
        lam = eig_desc(cert.singleton_solution)
        rr = int(np.sum(lam.values > 1e-9 * max(lam.values[0], 1e-300)))
        V = lam.vectors[:, :rr]
        W = lam.vectors[:, rr:] @ lam.vectors[:, rr:].T
        return V, W

    faces = [child_face(c) for c in children]
    r_tot = sum(V.shape[1] for V, _ in faces)
    V_comp = np.zeros((n, r_tot))
    W_comp = np.zeros((n, n))
    col = 0
    for (V, W), off, nc in zip(faces, offs, ns):
        V_comp[off:off + nc, col:col + V.shape[1]] = V
        W_comp[off:off + nc, off:off + nc] = W
        col += V.shape[1]

    # composite chain: at step l, expose every child's step-l contribution
    incs = [_chain_increments(c) for c in children]
    sd = max(len(i) for i in incs)
    targets = []
    for step in range(sd):
        T = np.zeros((n, n))
        for inc, off, nc in zip(incs, offs, ns):
            if step < len(inc):
                T[off:off + nc, off:off + nc] = inc[step]
        targets.append(T)
    chain, _, _ = _build_chain(amap, targets)
    cert = Certificate(
        sd_true=sd,
        max_rank_true=sum(
            c.certificate.max_rank_true for c in children
        ),
        solution_face=FaceRep(V=V_comp, W=W_comp),
        exposing_chain=chain,
    )
    return Spectrahedron(map=amap, certificate=cert)


def cexample_trace(alphas):
    """Analytic fixture with two vanishing eigenvalues of identical rate.

    The 3x3 curve has diagonal entries decaying at different rates while both
    vanishing eigenvalues are Theta(alpha^3); packaged as a PathTrace so the
    ratio diagnostics accept it. The dual side is filled via Z = alpha X^{-1}.
    Requires positive, strictly decreasing, geometric alphas below sqrt(3).
    """
    alphas = np.asarray(alphas, dtype=float).reshape(-1)
    if alphas.size < 3:
        raise InvalidSpec("need at least three alphas")
    if np.any(alphas <= 0.0) or np.any(np.diff(alphas) >= 0.0):
        raise InvalidSpec("alphas must be positive and strictly decreasing")
    if np.any(alphas >= np.sqrt(3.0)):
        raise OutOfDomain("fixture requires alpha < sqrt(3)")
    sigma = alphas[1] / alphas[0]
    if np.any(np.abs(alphas[1:] / alphas[:-1] - sigma) > 1e-9 * sigma):
        raise InvalidSpec("ratio diagnostics need a geometric alpha grid")
    points, eigsX, eigsZ = [], [], []
    for a in alphas:
        S = np.array([
            [3.0, np.sqrt(a), 0.0],
            [np.sqrt(a), a / (3.0 - a * a), 0.0],
            [0.0, 0.0, a ** 3],
        ])
        # 2x2 block eigenvalues in cancellation-safe form
        tr = 3.0 + a / (3.0 - a * a)
        det = a ** 3 / (3.0 - a * a)
        lam_big = 0.5 * tr + np.sqrt(0.25 * tr * tr - det)
        lam_small = det / lam_big
        lam = np.sort(np.array([lam_big, lam_small, a ** 3]))[::-1]
        eigsX.append(lam)
        eigsZ.append(np.sort(a / lam)[::-1])
        Z = a * np.linalg.inv(S)
        points.append(PathPoint(alpha=float(a), X=S, y=np.zeros(0),
                                Z=0.5 * (Z + Z.T), res_primal=0.0,
                                res_dual=0.0, res_cent=0.0))
    return PathTrace(
        sigma=float(sigma),
        B=np.eye(3),
        alphas=alphas,
        points=points,
        eigsX=np.array(eigsX),
        eigsZ=np.array(eigsZ),
        berr=np.zeros(alphas.size),
    )


def from_spec(spec):
    """Materialize an InstanceSpec (from_file specs are handled by the io layer)."""
    if spec.kind == "worst_case":
        return gen_worst_case(spec.n)
    if spec.kind == "slater":
        if spec.m is None or spec.seed is None:
            raise InvalidSpec("slater needs m and seed")
        return gen_slater(spec.n, spec.m, spec.seed)
    if spec.kind == "rank_r_sd1":
        if spec.r is None or spec.seed is None:
            raise InvalidSpec("rank_r_sd1 needs r and seed")
        return gen_rank_r_sd1(spec.n, spec.r, spec.seed)
    if spec.kind == "direct_sum":
        if not spec.children:
            raise InvalidSpec("direct_sum needs children")
        return gen_direct_sum([from_spec(c) for c in spec.children])
    raise InvalidSpec(f"unknown instance kind {spec.kind!r}")
