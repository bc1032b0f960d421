"""Eigenvalue-ratio diagnostics over a path trace.

Two ratio families are tracked on the geometric grid alpha = sigma^k:

  RQ(i, k) = lambda_i(X(sigma^{k+1})) / lambda_i(X(sigma^k))   (per-row decay)
  RN(i, k) = lambda_i(X(sigma^k)) / lambda_{i+1}(X(sigma^k))   (adjacent gap)

Rows whose RQ tail stays at 1 belong to eigenvalues converging to positive
limits; rows bounded away from 1 vanish. From the split we derive an upper
bound r_bar on the maximum feasible rank, a lower bound on forward error
(the norm of the eigenvalues past r_bar), a lower bound d_lower on
singularity degree via the threshold ladder sigma^(2^-(d-1)), and the count
N_lambda of distinct vanishing rates seen in RN.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import InsufficientTrace, InvalidSeries

# relative slack applied when a proxy is compared against a ladder value;
# absorbs float noise in ratios of eigenvalues that sit exactly at the rate
LADDER_RTOL = 1e-3

# rows with tail minimum in (tau, tau + (1-tau)*BAND) are resolved by the
# stationarity of their gap to 1 rather than by the threshold alone
BAND = 0.5


@dataclass
class RatioCurves:
    """Elementwise ratio curves plus the tail window used by every bound."""

    sigma: float
    RQ: np.ndarray  # (n, K-1)
    RN: np.ndarray  # (n-1, K)
    alphas: np.ndarray
    tail_window: int = 10
    drop_last: int = 0  # trailing columns ignored by tail statistics

    @property
    def n(self):
        return self.RQ.shape[0]

    def tail_slice(self):
        """Column range of RQ used as the liminf window."""
        K = self.RQ.shape[1]
        hi = K - self.drop_last
        lo = hi - self.tail_window
        if lo < 0:
            raise InsufficientTrace(
                f"trace of {K + 1} points cannot fill a window of {self.tail_window}"
                f" (+{self.drop_last} dropped)"
            )
        return lo, hi

    def liminf_proxy(self):
        """Per-row minimum of RQ over the tail window."""
        lo, hi = self.tail_slice()
        return self.RQ[:, lo:hi].min(axis=1)


def curves_from_eigs(lam, sigma, alphas, tail_window=10, drop_last=0):
    """Ratio curves from a (num_points, n) array of per-point eigenvalue rows."""
    lam = np.asarray(lam, dtype=float)
    K = lam.shape[0]
    if K < tail_window + 2:
        raise InsufficientTrace(f"need at least {tail_window + 2} points, have {K}")
    if np.any(lam <= 0.0):
        raise InvalidSeries("eigenvalue rows must be positive")
    RQ = (lam[1:] / lam[:-1]).T
    RN = (lam[:, :-1] / lam[:, 1:]).T
    curves = RatioCurves(
        sigma=float(sigma),
        RQ=RQ,
        RN=RN,
        alphas=np.asarray(alphas, dtype=float),
        tail_window=tail_window,
        drop_last=drop_last,
    )
    lo, hi = curves.tail_slice()
    if np.max(RQ[:, lo:hi]) > 1.1:
        warnings.warn("ratio curve exceeds 1.1 on the tail window; "
                      "path may not have converged", RuntimeWarning)
    return curves


def ratios(trace, tail_window=10):
    """Exact elementwise ratio curves of the stored eigenvalues.

    The final two grid points are excluded from tail statistics when the
    trace ends near the conditioning floor. Raises InsufficientTrace when the
    trace cannot fill the window.
    """
    drop = 2 if getattr(trace, "near_floor", False) else 0
    return curves_from_eigs(trace.eigsX, trace.sigma, trace.alphas,
                            tail_window=tail_window, drop_last=drop)


def _gap_stationary(row, lo, hi):
    """True when the row's gap to 1 does not decay across the window.

    Rows converging to 1 shrink their gap geometrically; rows with a limit
    below 1 keep an essentially constant gap.
    """
    head = 1.0 - np.mean(row[lo:lo + 2])
    tail = 1.0 - np.mean(row[hi - 2:hi])
    if head <= 0.0 or tail <= 0.0:
        return False
    return tail > 0.5 * head


def max_rank_bound(curves, tau=0.9):
    """Smallest r_bar whose rows above it all look vanishing, at threshold tau.

    A row is vanishing when its tail minimum is <= tau, or when it sits in
    the ambiguity band just above tau with a stationary gap to 1 (slowly
    vanishing rows of deep chains sit at sigma^(2^-(d-1)), which approaches 1;
    surviving rows close their gap geometrically instead). Returns
    (r_bar, verdict, vanishing_mask).
    """
    if not 0.0 < tau <= 0.95:
        raise ValueError("tau must lie in (0, 0.95]")
    proxy = curves.liminf_proxy()
    lo, hi = curves.tail_slice()
    band_top = tau + (1.0 - tau) * BAND
    n = proxy.size
    vanishing = np.zeros(n, dtype=bool)
    for i in range(n):
        if proxy[i] <= tau:
            vanishing[i] = True
        elif proxy[i] <= band_top and _gap_stationary(curves.RQ[i], lo, hi):
            vanishing[i] = True
    idx = np.nonzero(vanishing)[0]
    if idx.size == 0:
        return n, "clean", vanishing
    first = int(idx[0])
    if np.all(vanishing[first:]):
        return first, "clean", vanishing
    # no clean split: smallest r_bar with everything above it vanishing
    last_surviving = int(np.nonzero(~vanishing)[0][-1])
    return last_surviving + 1, "split-unclean", vanishing


def ferror_lower_bound(eigenvalues, r_bar):
    """Euclidean norm of the eigenvalues past position r_bar.

    Any point of the feasible set has rank at most r_bar, so the distance to
    it is at least this tail norm.
    """
    lam = np.asarray(eigenvalues, dtype=float).reshape(-1)
    if not 0 <= r_bar <= lam.size:
        raise ValueError(f"r_bar must lie in [0, {lam.size}]")
    return float(np.linalg.norm(lam[r_bar:]))


def sd_ladder(sigma, n):
    """Threshold ladder sigma^(2^-(d-1)) for d = 1..n-1."""
    return np.array([sigma ** (2.0 ** -(d - 1)) for d in range(1, n)])


def sd_lower_bound(curves, r_bar):
    """Smallest d >= 1 whose ladder value splits the rows exactly at r_bar.

    Returns (d_lower, ladder, verdict); verdict is "saturated" when no
    d <= n-1 achieves the split, in which case n-1 is returned.
    """
    proxy = curves.liminf_proxy()
    n = proxy.size
    ladder = sd_ladder(curves.sigma, n)
    for d in range(1, n):
        thr = ladder[d - 1] * (1.0 + LADDER_RTOL)
        below = proxy <= thr
        if np.all(below[r_bar:]) and not np.any(below[:r_bar]):
            return d, ladder, "clean"
    return n - 1, ladder, "saturated"


def count_rates(curves, r_bar, slope_min_factor=0.05):
    """Number of distinct vanishing rates among rows past r_bar.

    A group boundary at position i (within the vanishing block) is declared
    when log RN(i, k) grows linearly in k with slope above
    slope_min_factor * |log sigma|; the count is boundaries + 1. Divergence is
    tested by slope rather than magnitude because a ratio may blow up slowly.
    """
    n = curves.n
    if r_bar >= n:
        return 0
    lo, hi = curves.tail_slice()
    ks = np.arange(lo, hi, dtype=float)
    slope_min = slope_min_factor * abs(np.log(curves.sigma))
    boundaries = 0
    for i in range(r_bar + 1, n):
        row = curves.RN[i - 1, lo:hi]  # RN row i-1 separates eigenvalues i and i+1
        if np.any(row <= 0.0):
            continue
        slope = np.polyfit(ks, np.log(row), 1)[0]
        if slope > slope_min:
            boundaries += 1
    return boundaries + 1


def sturm_exponent(ef, eb, tail_window=10):
    """Least-squares slope of log ef against log eb over the tail window.

    Empirical exponent s in ef ~ eb^s, for comparison against 2^-sd. Raises
    InvalidSeries for nonpositive entries, length mismatch, or series shorter
    than max(tail_window, 10).
    """
    ef = np.asarray(ef, dtype=float).reshape(-1)
    eb = np.asarray(eb, dtype=float).reshape(-1)
    if ef.size != eb.size:
        raise InvalidSeries("series lengths differ")
    if ef.size < max(tail_window, 10):
        raise InvalidSeries(f"need at least {max(tail_window, 10)} entries, have {ef.size}")
    if np.any(ef <= 0.0) or np.any(eb <= 0.0):
        raise InvalidSeries("series must be strictly positive")
    w = ef[-tail_window:]
    v = eb[-tail_window:]
    return float(np.polyfit(np.log(v), np.log(w), 1)[0])


@dataclass
class DiagnosticsReport:
    """Bound summary for one trace, in the shape of one results-table row."""

    r_bar: int
    eps_lower: float
    d_lower: int | None
    N_lambda: int
    tau_used: float
    threshold_ladder: np.ndarray
    liminf_proxy: np.ndarray
    verdicts: dict = field(default_factory=dict)


def diagnose(trace, tau=0.9, tail_window=10, slope_min_factor=0.05):
    """Full diagnostics pipeline: curves, rank bound, error bound, sd bound, rates."""
    curves = ratios(trace, tail_window=tail_window)
    r_bar, rank_verdict, vanishing = max_rank_bound(curves, tau=tau)
    n = curves.n
    eps_lower = ferror_lower_bound(trace.eigsX[-1], r_bar)
    verdicts = {"rank_split": rank_verdict}
    if r_bar < n:
        d_lower, ladder, sd_verdict = sd_lower_bound(curves, r_bar)
        N_lambda = count_rates(curves, r_bar, slope_min_factor=slope_min_factor)
        verdicts["sd_split"] = sd_verdict
    else:
        d_lower = None
        N_lambda = 0
        ladder = sd_ladder(curves.sigma, n)
        verdicts["sd_split"] = "undefined"
    report = DiagnosticsReport(
        r_bar=int(r_bar),
        eps_lower=float(eps_lower),
        d_lower=d_lower,
        N_lambda=int(N_lambda),
        tau_used=float(tau),
        threshold_ladder=ladder,
        liminf_proxy=curves.liminf_proxy(),
        verdicts=verdicts,
    )
    return curves, report


class PathDiagnostics(BaseEstimator):
    """Estimator facade: fit(trace) computes `curves_` and `report_`."""

    def __init__(self, tau=0.9, tail_window=10, slope_min_factor=0.05):
        self.tau = tau
        self.tail_window = tail_window
        self.slope_min_factor = slope_min_factor

    def fit(self, trace, y=None):
        self.curves_, self.report_ = diagnose(
            trace,
            tau=self.tau,
            tail_window=self.tail_window,
            slope_min_factor=self.slope_min_factor,
        )
        return self
