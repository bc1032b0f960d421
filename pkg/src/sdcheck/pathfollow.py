"""Perturbed log-det central path follower.

For a feasibility region F = {X >= 0 : A(X) = b} and a fixed B > 0, the path
point at parameter a > 0 is the log-det maximizer over the perturbed slice
{X >= 0 : A(X) = b + a A(B)}. Its optimality system couples the primal X,
multipliers y, and dual slack Z through

    A*(y) - Z = 0,   A(X) = b + a A(B),   Z X - a I = 0,

which we solve by a Gauss-Newton least-squares iteration on the stacked
residual, with a fraction-to-boundary line search keeping X and Z positive
definite. Points are polished until the residual stalls at its numerical
floor, never accepted straight from a warm start, so the tiny eigenvalues
stay accurate in relative terms at deep parameter values.
"""
import functools
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import (
    InsufficientTrace,
    InvalidMap,
    LineSearchStall,
    MaxIterations,
)
from .spectrahedron import Spectrahedron, backward_error
from .symmetric import eig_desc, smat, svec, svec_basis, symmetrize

# below this parameter value the Newton system is no longer trusted
ALPHA_FLOOR = 1e-13

_EPS = np.finfo(float).eps


@functools.lru_cache(maxsize=16)
def _svec_basis_cached(n):
    return svec_basis(n)


@dataclass(frozen=True)
class PathPoint:
    """One accepted point of the primal-dual path."""

    alpha: float
    X: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    res_primal: float
    res_dual: float
    res_cent: float
    iterations: int = 0


@dataclass
class PathTrace:
    """Discretized path on the grid alpha = sigma^k, k = k_start..k_last."""

    sigma: float
    B: np.ndarray
    alphas: np.ndarray
    points: list
    eigsX: np.ndarray  # (num_points, n), rows descending
    eigsZ: np.ndarray
    berr: np.ndarray  # backward error against the unperturbed region
    truncated: bool = False
    k_start: int = 1

    def __len__(self):
        return len(self.points)

    @property
    def n(self):
        return self.eigsX.shape[1]

    @property
    def k_last(self):
        return self.k_start + len(self.alphas) - 1

    @property
    def near_floor(self):
        """True when the grid ends within two steps of the conditioning floor."""
        return self.alphas[-1] * self.sigma**2 < ALPHA_FLOOR


def _is_pd(M):
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


def center(F, B, alpha, warm=None, tol_primal=1e-12, tol_dual=1e-12,
           tol_cent=1e-8, max_iter=200):
    """Solve the optimality system at one parameter value.

    Returns a PathPoint; deterministic given (F, B, alpha, warm). Raises
    MaxIterations when the outer budget is exhausted (typical cause: an
    unbounded region) and LineSearchStall when no further progress is
    possible while the residuals are still above tolerance.
    """
    amap = F.map if isinstance(F, Spectrahedron) else F
    if not amap.surjective:
        raise InvalidMap("constraint map must be surjective for path following")
    if amap.m == 0:
        raise InvalidMap("path following needs at least one constraint")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n, m = amap.n, amap.m
    s = n * (n + 1) // 2
    B = symmetrize(B)
    AB = amap.apply(B)
    b_alpha = amap.b + alpha * AB
    In = np.eye(n)
    Sd = _svec_basis_cached(n)

    if warm is not None:
        X, y, Z = warm.X.copy(), warm.y.copy(), warm.Z.copy()
    else:
        tau = max(1.0, float(np.linalg.norm(b_alpha)))
        X = tau * In
        y = np.zeros(m)
        Z = (alpha / tau) * In

    nb = max(1.0, float(np.linalg.norm(b_alpha)))

    def residuals(X, y, Z):
        rd = np.linalg.norm(svec(amap.adjoint(y) - Z))
        rp = np.linalg.norm(amap.apply(X) - b_alpha)
        rc = np.linalg.norm(Z @ X - alpha * In)
        return rp, rd, rc

    def cent_tol(X, Z):
        # float floor of the bilinear residual; below it the product carries no information
        floor = 50 * n * _EPS * max(1.0, np.linalg.norm(Z) * np.linalg.norm(X))
        return max(tol_cent * n * alpha, floor)

    history = []
    lam_reg = 0.0
    nvar = 2 * s + m
    for it in range(max_iter):
        rp, rd, rc = residuals(X, y, Z)
        tot = float(np.sqrt(rp * rp + rd * rd + rc * rc))
        spec_ok = rp <= tol_primal * nb and rd <= tol_dual and rc <= cent_tol(X, Z)
        if spec_ok:
            # accept immediately only a genuinely centered warm start; otherwise
            # polish until progress stalls so eigenvalues are fresh at this alpha
            if it == 0 and tot <= 1e-6 * alpha:
                break
            if len(history) >= 1 and tot > 0.5 * history[-1]:
                break
        elif len(history) >= 12 and tot > 0.97 * history[-8]:
            # damped steps can wander for a while before the quadratic snap,
            # so only a long progress-free stretch counts as a stall
            raise LineSearchStall(
                f"stalled at alpha={alpha:.3e} above tolerance", residuals=(rp, rd, rc)
            )
        if np.linalg.norm(X) > 1e8 * max(1.0, nb):
            raise MaxIterations(
                f"iterate blow-up at alpha={alpha:.3e}: region looks unbounded",
                residuals=(rp, rd, rc),
            )
        history.append(tot)

        # Gauss-Newton step on the stacked residual; a Marquardt term damps the
        # near-singular directions that make the plain step overshoot at deep alpha
        F1 = svec(amap.adjoint(y) - Z)
        F2 = amap.apply(X) - b_alpha
        F3 = (Z @ X - alpha * In).reshape(-1)
        J = np.zeros((s + m + n * n, nvar))
        J[:s, s:s + m] = amap.Asv.T
        J[:s, s + m:] = -np.eye(s)
        J[s:s + m, :s] = amap.Asv
        J[s + m:, :s] = np.kron(Z, In) @ Sd
        J[s + m:, s + m:] = np.kron(In, X) @ Sd
        Fvec = np.concatenate([F1, F2, F3])
        if lam_reg > 0.0:
            Jaug = np.vstack([J, np.sqrt(lam_reg) * np.eye(nvar)])
            rhs = np.concatenate([-Fvec, np.zeros(nvar)])
        else:
            Jaug, rhs = J, -Fvec
        d = np.linalg.lstsq(Jaug, rhs, rcond=None)[0]
        dX = smat(d[:s], n)
        dy = d[s:s + m]
        dZ = smat(d[s + m:], n)

        # fraction-to-boundary: stay 2% inside the cone along the step
        t = 1.0
        boundary_ok = False
        for _ in range(60):
            if _is_pd(X + (t / 0.98) * dX) and _is_pd(Z + (t / 0.98) * dZ):
                boundary_ok = True
                break
            t *= 0.7
        if not boundary_ok:
            if spec_ok:
                break
            raise LineSearchStall(
                f"cannot keep iterates positive definite at alpha={alpha:.3e}",
                residuals=(rp, rd, rc),
            )

        f0 = tot * tot
        improved = False
        for _ in range(40):
            # symmetric + symmetric stays exactly symmetric entrywise
            Xn = X + t * dX
            Zn = Z + t * dZ
            yn = y + t * dy
            if _is_pd(Xn) and _is_pd(Zn):
                gp, gd, gc = residuals(Xn, yn, Zn)
                if gp * gp + gd * gd + gc * gc < f0:
                    improved = True
                    break
            t *= 0.5
        if not improved:
            if spec_ok:
                break
            raise LineSearchStall(
                f"line search found no decrease at alpha={alpha:.3e}",
                residuals=(rp, rd, rc),
            )
        # adapt the damping: heavily cut steps ask for more, full steps for less
        jscale = np.linalg.norm(J) ** 2 / nvar
        if t < 0.5:
            lam_reg = max(lam_reg * 10.0, 1e-14 * jscale)
        elif t >= 0.99:
            lam_reg = 0.0 if lam_reg < 1e-13 * jscale else lam_reg / 10.0
        X, y, Z = Xn, yn, Zn
    else:
        rp, rd, rc = residuals(X, y, Z)
        raise MaxIterations(
            f"no convergence in {max_iter} steps at alpha={alpha:.3e} "
            "(region unbounded, or alpha below the conditioning floor?)",
            residuals=(rp, rd, rc),
        )

    rp, rd, rc = residuals(X, y, Z)
    return PathPoint(alpha=float(alpha), X=X, y=y, Z=Z,
                     res_primal=float(rp), res_dual=float(rd), res_cent=float(rc),
                     iterations=len(history))


def clamp_k_max(sigma, k_max):
    """Largest k <= k_max with sigma^k above the conditioning floor."""
    k_eff = k_max
    while k_eff > 1 and sigma**k_eff < ALPHA_FLOOR:
        k_eff -= 1
    return k_eff


def _geometric_predict(prev2, prev):
    """Entrywise geometric continuation: exact for power-law decay in alpha.

    Entries whose two-step ratio is unstable keep their last value.
    """
    pred = prev.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = prev / prev2
    ok = np.isfinite(ratio) & (ratio > 0.05) & (ratio < 2.0) & (prev2 * prev > 0)
    pred[ok] = prev[ok] * ratio[ok]
    return pred


def _predict_warm(p2, p1):
    X = _geometric_predict(p2.X, p1.X)
    X = 0.5 * (X + X.T)
    Z = _geometric_predict(p2.Z, p1.Z)
    Z = 0.5 * (Z + Z.T)
    if not (_is_pd(X) and _is_pd(Z)):
        return p1
    y = _geometric_predict(p2.y, p1.y)
    return PathPoint(alpha=p1.alpha, X=X, y=y, Z=Z, res_primal=np.inf,
                     res_dual=np.inf, res_cent=np.inf)


def follow(F, B=None, sigma=0.6, k_max=60, tol_primal=1e-12, tol_dual=1e-12,
           tol_cent=1e-8, max_iter=200, k_start=1):
    """Follow the path on the geometric grid alpha = sigma^k, warm-starting each solve.

    Solver failures truncate the trace at the last successful k and mark it;
    a failure at the very first point propagates.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError("sigma must lie in (0, 1)")
    k_eff = clamp_k_max(sigma, k_max)
    if k_eff != k_max:
        warnings.warn(
            f"k_max={k_max} puts sigma^k below the conditioning floor {ALPHA_FLOOR:g}; "
            f"clamped to {k_eff}",
            RuntimeWarning,
        )
    amap = F.map if isinstance(F, Spectrahedron) else F
    B = np.eye(amap.n) if B is None else symmetrize(B)
    points = []
    eigsX, eigsZ, berr, alphas = [], [], [], []
    truncated = False
    warm = None
    for k in range(k_start, k_eff + 1):
        alpha = sigma**k
        if len(points) >= 2:
            warm = _predict_warm(points[-2], points[-1])
        try:
            pt = center(F, B, alpha, warm=warm, tol_primal=tol_primal,
                        tol_dual=tol_dual, tol_cent=tol_cent, max_iter=max_iter)
        except (MaxIterations, LineSearchStall):
            if not points:
                raise
            truncated = True
            break
        warm = pt
        points.append(pt)
        eigsX.append(eig_desc(pt.X).values)
        eigsZ.append(eig_desc(pt.Z).values)
        berr.append(backward_error(F, pt.X))
        alphas.append(alpha)
    return PathTrace(
        sigma=float(sigma),
        B=B,
        alphas=np.array(alphas),
        points=points,
        eigsX=np.array(eigsX),
        eigsZ=np.array(eigsZ),
        berr=np.array(berr),
        truncated=truncated,
        k_start=k_start,
    )


def _aitken(s0, s1, s2):
    """Componentwise Aitken delta-squared limit estimate.

    Extrapolation is applied only where consecutive differences share a sign
    (a genuine one-mode decay) and the correction stays within 50x the recent
    movement; a geometric mode of ratio rho needs rho^2/(1-rho) times the last
    difference, so everything up to rho ~ 0.98 passes while noise-dominated
    (converged) components keep their last value instead of amplifying.
    """
    d2 = s2 - s1
    d1 = s1 - s0
    den = d2 - d1
    out = np.array(s2, dtype=float, copy=True)
    move = np.abs(d2) + np.abs(d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(den != 0.0, d2 * d2 / den, 0.0)
    mask = (d2 * d1 > 0.0) & (den != 0.0) & (np.abs(corr) <= 50.0 * move)
    out[mask] = s2[mask] - corr[mask]
    return out


def dual_limit(trace, window=6):
    """Extrapolated limits (Xbar, Zbar, ybar) from the trace tail.

    Componentwise one-term Richardson extrapolation with the decay ratio
    estimated from the data (Aitken form), so both the geometrically
    vanishing components and the slower fractional-rate components are
    cancelled. Zbar is clipped to the PSD cone. Requires >= 6 points.
    """
    if len(trace) < max(3, window):
        raise InsufficientTrace(f"need at least {max(3, window)} points, have {len(trace)}")
    pts = trace.points[-3:]
    Xbar = _aitken(*(p.X for p in pts))
    Zbar = _aitken(*(p.Z for p in pts))
    ybar = _aitken(*(p.y for p in pts))
    from .symmetric import proj_psd

    Xbar = 0.5 * (Xbar + Xbar.T)
    Zbar = proj_psd(0.5 * (Zbar + Zbar.T))
    return Xbar, Zbar, ybar


def limit_eigenvalues(trace, side="Z"):
    """Extrapolated limits of the ordered eigenvalue curves, clipped at zero.

    Each eigenvalue sequence carries a single dominant decay mode, so the
    per-curve extrapolation is far cleaner than eigenvalues of the
    componentwise matrix limit, whose entries mix modes of all directions.
    Requires >= 3 points.
    """
    if len(trace) < 3:
        raise InsufficientTrace(f"need at least 3 points, have {len(trace)}")
    lam = trace.eigsZ if side == "Z" else trace.eigsX
    est = _aitken(lam[-3], lam[-2], lam[-1])
    return np.maximum(est, 0.0)


class CentralPathFollower(BaseEstimator):
    """Estimator facade for the path follower.

    fit(F) runs the grid solve and exposes the result as `trace_`; parameters
    mirror the experiment protocol (sigma, grid depth, perturbation direction,
    solve tolerances).
    """

    def __init__(self, sigma=0.6, k_max=60, B=None, tol_primal=1e-12,
                 tol_dual=1e-12, tol_cent=1e-8, max_iter=200):
        self.sigma = sigma
        self.k_max = k_max
        self.B = B
        self.tol_primal = tol_primal
        self.tol_dual = tol_dual
        self.tol_cent = tol_cent
        self.max_iter = max_iter

    def fit(self, F, y=None):
        self.trace_ = follow(
            F,
            B=self.B,
            sigma=self.sigma,
            k_max=self.k_max,
            tol_primal=self.tol_primal,
            tol_dual=self.tol_dual,
            tol_cent=self.tol_cent,
            max_iter=self.max_iter,
        )
        return self

    def limits(self):
        from sklearn.exceptions import NotFittedError

        if not hasattr(self, "trace_"):
            raise NotFittedError("call fit() first")
        return dual_limit(self.trace_)
