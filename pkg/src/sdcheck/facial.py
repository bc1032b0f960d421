"""Facial reduction driven by dual path limits.

Strict feasibility is decided from a path trace: the extrapolated dual limit
is (up to noise) zero exactly when a strictly feasible point exists, and
otherwise it is a maximum-rank exposing vector of the minimal face. One
reduction step restricts the constraints to the null space of that vector;
iterating reaches the minimal face, and the number of steps taken with
maximum-rank vectors is the singularity degree.

Numerical rank of an exposing limit is decided twice, independently: from a
magnitude threshold on the extrapolated eigenvalues, and from the per-row
decay classification of the dual eigenvalue curves. Disagreement surfaces as
an undecided result rather than a confident wrong answer; instability of
this kind is expected once the singularity degree exceeds one.
"""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .diagnostics import curves_from_eigs, max_rank_bound
from .exceptions import (
    FRDiverged,
    InsufficientTrace,
    InvalidSpec,
    LineSearchStall,
    MaxIterations,
    NoExposingVectorFound,
    SdUndecided,
    UndecidedAlternative,
)
from .pathfollow import dual_limit, follow, limit_eigenvalues
from .spectrahedron import FaceRep, Spectrahedron, reduce_map
from .symmetric import eig_desc, proj_psd, svec

# default rank threshold relative to the top eigenvalue of the dual limit
EPS_RANK = 1e-7

# dual limit is declared zero (Slater alternative) below this relative size
_Z_ZERO_RTOL = 1e-6


@dataclass
class FRStep:
    """One reduction step: multiplier, exposing vector, and face bookkeeping."""

    k: int
    y: np.ndarray
    Z: np.ndarray  # in the coordinates of the step's reduced problem
    q: int
    Q1: np.ndarray
    Q2: np.ndarray
    Vk: np.ndarray  # accumulated basis, original coordinates
    Wk: np.ndarray  # accumulated exposing vector, original coordinates


@dataclass
class FRResult:
    """Output of the reduction: chain length d, final face (V, W, r), steps."""

    d: int
    steps: list
    V: np.ndarray
    W: np.ndarray
    r: int
    mode: str

    def face(self):
        return FaceRep(V=self.V, W=self.W) if self.r > 0 else None


def _trace_for(F, sigma, k_max, **follow_kwargs):
    try:
        trace = follow(F, sigma=sigma, k_max=k_max, **follow_kwargs)
    except (MaxIterations, LineSearchStall) as exc:
        raise UndecidedAlternative(f"path failure: {exc}") from exc
    return trace


def _z_scale(trace):
    return max(1e-12, float(np.max(trace.eigsZ[:, 0])))


def slater_check(F, sigma=0.6, k_check=25, tau=0.9, tail_window=10, trace=None):
    """Decide strict feasibility from a (shallow) path trace.

    Returns (True, witness) or (False, None). The verdict combines two
    independent signals: the extrapolated dual limit must be zero, and every
    primal eigenvalue row must be classified as surviving. Disagreement or a
    path failure raises UndecidedAlternative; a bare False is never silently
    produced by numerical trouble.
    """
    if F.map.m == 0:
        return True, np.eye(F.map.n)
    if trace is None:
        trace = _trace_for(F, sigma, k_check)
    try:
        Xbar, _, _ = dual_limit(trace)
        z_limits = limit_eigenvalues(trace, side="Z")
        curves = curves_from_eigs(trace.eigsX, trace.sigma, trace.alphas,
                                  tail_window=tail_window,
                                  drop_last=2 if trace.near_floor else 0)
    except InsufficientTrace as exc:
        raise UndecidedAlternative(f"trace too short: {exc}") from exc
    z_zero = z_limits[0] <= _Z_ZERO_RTOL * _z_scale(trace)
    r_bar, _, _ = max_rank_bound(curves, tau=tau)
    all_surviving = r_bar == trace.n
    if z_zero and all_surviving:
        return True, Xbar
    if not z_zero and not all_surviving:
        return False, None
    raise UndecidedAlternative(
        f"dual-limit and eigenvalue-rate tests disagree "
        f"(lambda_1(Zbar)={z_limits[0]:.2e}, surviving rows={r_bar}/{trace.n})"
    )


def exposing_vector(F, trace=None, sigma=0.6, k_max=48, eps_rank=EPS_RANK,
                    tau=0.9, tail_window=10):
    """Maximum-rank exposing vector from the dual path limit.

    Returns (Z, y, q): the PSD-projected, rank-truncated dual limit, the
    multiplier re-fitted so the adjoint reproduces Z, and the numerical rank.
    Rank is accepted only when the magnitude threshold on the extrapolated
    eigenvalues and the decay-rate classification of the dual curves agree;
    otherwise SdUndecided is raised. A numerically zero limit raises
    NoExposingVectorFound (the Slater alternative).
    """
    if trace is None:
        trace = _trace_for(F, sigma, k_max)
    Xbar, Zbar, ybar = dual_limit(trace)
    z_limits = limit_eigenvalues(trace, side="Z")
    scale = _z_scale(trace)
    if z_limits[0] <= max(1e-9, 1e-9 * scale):
        raise NoExposingVectorFound(
            f"dual limit is numerically zero (lambda_1 = {z_limits[0]:.2e})"
        )
    q_mag = int(np.sum(z_limits > eps_rank * z_limits[0]))
    curves_z = curves_from_eigs(trace.eigsZ, trace.sigma, trace.alphas,
                                tail_window=tail_window,
                                drop_last=2 if trace.near_floor else 0)
    n_surviving, _, _ = max_rank_bound(curves_z, tau=tau)
    if q_mag != n_surviving:
        raise SdUndecided(
            f"exposing rank unstable: magnitude says {q_mag}, decay rates say {n_surviving}",
            partial={"Zbar": Zbar, "eigs": z_limits},
        )
    q = q_mag
    spec = eig_desc(Zbar)
    Z = (spec.vectors[:, :q] * spec.values[:q]) @ spec.vectors[:, :q].T
    Z = 0.5 * (Z + Z.T)
    y, *_ = np.linalg.lstsq(F.map.Asv.T, svec(Z), rcond=None)
    ytb = abs(float(y @ F.map.b))
    if ytb > 1e-8 * max(1.0, np.linalg.norm(y) * np.linalg.norm(F.map.b)):
        raise SdUndecided(
            f"refit multiplier violates y^T b = 0 ({ytb:.2e})",
            partial={"Zbar": Zbar, "y": y},
        )
    return Z, y, q


def _split(Z, q):
    spec = eig_desc(Z)
    return spec.vectors[:, :q], spec.vectors[:, q:]


def facial_reduction(F, mode="numerical", sigma=0.6, k_check=25, k_deep=48,
                     eps_rank=EPS_RANK, tau=0.9, tail_window=10):
    """Run the reduction loop to the minimal face.

    numerical: exposing vectors come from dual path limits; instability
    surfaces as FRDiverged (iteration budget) or SdUndecided (rank tests
    disagree). certified: replays the certificate's exposing chain, validating
    every invariant, and still verifies strict feasibility of the final
    reduced problem numerically.
    """
    n = F.map.n
    if mode == "certified":
        cert = F.certificate
        if cert is None or cert.exposing_chain is None:
            raise InvalidSpec("certified mode requires certificate.exposing_chain")
        return _replay_chain(F, cert.exposing_chain, sigma=sigma, k_check=k_check, tau=tau)
    if mode != "numerical":
        raise InvalidSpec(f"unknown mode {mode!r}")

    V = np.eye(n)
    W = np.zeros((n, n))
    Fk = F
    steps = []
    guard = None  # (r_bar, d_lower) of the original problem
    result = None
    # at most n - 1 steps, except that the order-1 origin case needs one
    for k in range(1, max(2, n)):
        trace = None
        if Fk.map.m > 0:
            try:
                trace = _trace_for(Fk, sigma, k_deep)
            except UndecidedAlternative as exc:
                raise FRDiverged(f"step {k}: {exc}", partial=steps) from exc
        if k == 1 and trace is not None:
            guard = _outcome_guard(trace, tau, tail_window)
        try:
            holds, _ = slater_check(Fk, sigma=sigma, tau=tau,
                                    tail_window=tail_window, trace=trace)
        except UndecidedAlternative as exc:
            raise FRDiverged(f"step {k}: {exc}", partial=steps) from exc
        if holds:
            result = FRResult(d=k - 1, steps=steps, V=V, W=W, r=V.shape[1],
                              mode="numerical")
            break
        try:
            Z, y, q = exposing_vector(Fk, trace=trace, eps_rank=eps_rank,
                                      tau=tau, tail_window=tail_window)
        except NoExposingVectorFound as exc:
            raise FRDiverged(
                f"step {k}: strict feasibility fails but no exposing vector found ({exc})",
                partial=steps,
            ) from exc
        except SdUndecided as exc:
            raise FRDiverged(f"step {k}: {exc}", partial=steps) from exc
        Q1, Q2 = _split(Z, q)
        W = W + V @ Z @ V.T
        W = 0.5 * (W + W.T)
        V_new = V @ Q2
        steps.append(FRStep(k=k, y=y, Z=Z, q=q, Q1=Q1, Q2=Q2, Vk=V_new, Wk=W.copy()))
        V = V_new
        if V.shape[1] == 0:
            result = FRResult(d=k, steps=steps, V=V, W=W, r=0, mode="numerical")
            break
        Fk = Spectrahedron(map=reduce_map(Fk.map, Q2), certificate=None)
    if result is None:
        # n - 1 reductions always end at a strictly feasible face or the origin
        try:
            holds, _ = slater_check(Fk, sigma=sigma, tau=tau, tail_window=tail_window)
        except UndecidedAlternative:
            holds = False
        if not holds:
            raise FRDiverged(f"no strictly feasible face after {n - 1} reductions",
                             partial=steps)
        result = FRResult(d=n - 1, steps=steps, V=V, W=W, r=V.shape[1], mode="numerical")
    _check_outcome(result, guard)
    return result


def _outcome_guard(trace, tau, tail_window):
    """Sound bounds of the original problem, used to reject inconsistent chains."""
    from .diagnostics import diagnose
    from .exceptions import SdcheckError

    try:
        _, report = diagnose(trace, tau=tau, tail_window=tail_window)
    except (SdcheckError, ValueError):
        return None
    return report.r_bar, report.d_lower


def _check_outcome(result, guard):
    """Reject chains that contradict the rank/degree bounds of the input problem.

    The final face dimension cannot exceed the rank bound, and the chain
    cannot be shorter than the singularity-degree lower bound; truncation
    noise accumulated over reductions shows up exactly this way (a perturbed
    problem acquires a spurious interior), which is the known instability for
    singularity degree above one.
    """
    if guard is None:
        return
    r_bar, d_lower = guard
    if result.r > r_bar:
        raise FRDiverged(
            f"chain ended on a face of dimension {result.r}, above the rank bound "
            f"{r_bar} of the input problem (accumulated reduction noise)",
            partial=result.steps,
        )
    if d_lower is not None and result.d < d_lower:
        raise FRDiverged(
            f"chain of length {result.d} contradicts the singularity-degree lower "
            f"bound {d_lower} of the input problem (accumulated reduction noise)",
            partial=result.steps,
        )


def _replay_chain(F, chain, sigma=0.6, k_check=25, tau=0.9):
    """Validate and replay a certified exposing chain step by step."""
    n = F.map.n
    V = np.eye(n)
    W = np.zeros((n, n))
    Fk = F
    steps = []
    if len(chain) > max(1, n - 1):
        raise InvalidSpec(f"chain of length {len(chain)} exceeds the n-1 bound")
    for k, (y, Z) in enumerate(chain, start=1):
        y = np.asarray(y, dtype=float).reshape(-1)
        Z = np.asarray(Z, dtype=float)
        rk = Fk.map.n
        if Z.shape != (rk, rk) or y.size != Fk.map.m:
            raise InvalidSpec(f"step {k}: chain entry has wrong dimensions")
        adj = Fk.map.adjoint(y)
        if np.linalg.norm(adj - Z) > 1e-8 * max(1.0, np.linalg.norm(Z)):
            raise InvalidSpec(f"step {k}: Z is not the adjoint image of y")
        ytb = abs(float(y @ Fk.map.b))
        if ytb > 1e-9 * max(1.0, np.linalg.norm(y) * np.linalg.norm(Fk.map.b)):
            raise InvalidSpec(f"step {k}: y^T b = {ytb:.2e} is not zero")
        lam = eig_desc(Z).values
        if lam[0] <= 1e-12:
            raise InvalidSpec(f"step {k}: exposing vector is numerically zero")
        if lam[-1] < -1e-9 * lam[0]:
            raise InvalidSpec(f"step {k}: exposing vector is not PSD")
        q = int(np.sum(lam > 1e-9 * lam[0]))
        Q1, Q2 = _split(Z, q)
        W = W + V @ Z @ V.T
        W = 0.5 * (W + W.T)
        V_new = V @ Q2
        steps.append(FRStep(k=k, y=y, Z=Z, q=q, Q1=Q1, Q2=Q2, Vk=V_new, Wk=W.copy()))
        # the pair (V, W) must stay a valid face representation
        if V_new.shape[1] > 0:
            FaceRep(V=V_new, W=W)
        V = V_new
        if V.shape[1] == 0:
            return FRResult(d=k, steps=steps, V=V, W=W, r=0, mode="certified")
        Fk = Spectrahedron(map=reduce_map(Fk.map, Q2), certificate=None)
    try:
        holds, _ = slater_check(Fk, sigma=sigma, k_check=k_check, tau=tau)
    except UndecidedAlternative as exc:
        raise InvalidSpec(f"final reduced problem not verifiably strictly feasible: {exc}")
    if not holds:
        raise InvalidSpec("certificate chain does not reach a strictly feasible face")
    return FRResult(d=len(chain), steps=steps, V=V, W=W, r=V.shape[1], mode="certified")


def singularity_degree(F, mode="numerical", **kwargs):
    """Number of reduction steps to the minimal face.

    The origin-only region comes out as 1 (one full-rank exposing step).
    Numerical-mode divergence propagates as SdUndecided with the partial
    chain attached.
    """
    try:
        result = facial_reduction(F, mode=mode, **kwargs)
    except FRDiverged as exc:
        raise SdUndecided(str(exc), partial=exc.partial) from exc
    return result.d


class FacialReduction(BaseEstimator):
    """Estimator facade: fit(F) stores the reduction as fitted attributes."""

    def __init__(self, mode="numerical", sigma=0.6, k_check=25, k_deep=48,
                 eps_rank=EPS_RANK, tau=0.9, tail_window=10):
        self.mode = mode
        self.sigma = sigma
        self.k_check = k_check
        self.k_deep = k_deep
        self.eps_rank = eps_rank
        self.tau = tau
        self.tail_window = tail_window

    def fit(self, F, y=None):
        result = facial_reduction(
            F,
            mode=self.mode,
            sigma=self.sigma,
            k_check=self.k_check,
            k_deep=self.k_deep,
            eps_rank=self.eps_rank,
            tau=self.tau,
            tail_window=self.tail_window,
        )
        self.result_ = result
        self.d_ = result.d
        self.r_ = result.r
        self.V_ = result.V
        self.W_ = result.W
        self.steps_ = result.steps
        return self
