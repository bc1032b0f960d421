import numpy as np
import pytest

import sdcheck as sd
from sdcheck.diagnostics import sd_ladder
from sdcheck.exceptions import InsufficientTrace, InvalidSeries

from conftest import synthetic_trace

SIGMA = 0.6


def trace_from_rows(rows, K=20, sigma=SIGMA):
    """Eigenvalue curves lambda_i(sigma^k) = c_i * sigma^(p_i * k)."""
    ks = np.arange(1, K + 1)
    eigs = np.array([[c * sigma ** (p * k) for (c, p) in rows] for k in ks])
    # keep rows sorted descending at every k
    assert np.all(np.diff(eigs, axis=1) <= 0)
    return synthetic_trace(eigs, sigma=sigma)


class TestRatios:
    def test_pure_geometric_rows(self):
        tr = trace_from_rows([(3.0, 1.0), (1.0, 1.0)], K=20)
        curves = sd.ratios(tr)
        assert np.allclose(curves.RQ, SIGMA)

    def test_constant_rows(self):
        tr = trace_from_rows([(3.0, 0.0), (1.0, 0.0)], K=20)
        curves = sd.ratios(tr)
        assert np.allclose(curves.RQ, 1.0)
        assert np.allclose(curves.RN, 3.0)

    def test_worst2_closed_form(self):
        # lambda = (1 + sigma^k, sigma^k): row 1 tends to 1, row 2 sits at sigma,
        # and the adjacent ratio diverges
        ks = np.arange(1, 31)
        eigs = np.stack([1.0 + SIGMA**ks, SIGMA**ks], axis=1)
        curves = sd.ratios(synthetic_trace(eigs))
        assert abs(curves.RQ[0, -1] - 1.0) < 1e-3
        assert np.allclose(curves.RQ[1], SIGMA)
        assert np.all(np.diff(curves.RN[0]) > 0)

    def test_insufficient(self):
        tr = trace_from_rows([(1.0, 1.0)], K=8)
        with pytest.raises(InsufficientTrace):
            sd.ratios(tr, tail_window=10)

    def test_nonconvergent_warns(self):
        ks = np.arange(1, 21)
        eigs = np.stack([2.0**ks.astype(float), np.ones(20)], axis=1)[:, ::-1]
        eigs = np.sort(eigs, axis=1)[:, ::-1]
        with pytest.warns(RuntimeWarning):
            sd.ratios(synthetic_trace(eigs))


class TestMaxRankBound:
    def test_trivial_example(self):
        # constant proxies (1.0, 0.99, 0.6): the 0.99 row sits above the
        # ambiguity band and survives
        tr = trace_from_rows([(4.0, 0.0), (2.0, 0.0), (1.0, 1.0)], K=20)
        tr.eigsX[:, 1] = 2.0 * 0.99 ** np.arange(1, 21)
        curves = sd.ratios(tr)
        r_bar, verdict, _ = sd.max_rank_bound(curves, tau=0.9)
        assert (r_bar, verdict) == (2, "clean")

    def test_all_surviving(self):
        tr = trace_from_rows([(2.0, 0.0), (1.0, 0.0)], K=20)
        r_bar, _, _ = sd.max_rank_bound(sd.ratios(tr), tau=0.9)
        assert r_bar == 2

    def test_all_vanishing_r0(self):
        tr = trace_from_rows([(2.0, 1.0), (1.0, 1.0)], K=20)
        r_bar, _, _ = sd.max_rank_bound(sd.ratios(tr), tau=0.9)
        assert r_bar == 0

    def test_band_stationary_row_vanishes(self):
        # row stuck at ratio 0.93 (inside (0.9, 0.95]) is a slow vanisher
        ks = np.arange(1, 26)
        eigs = np.stack([np.full(25, 2.0), 0.93**ks], axis=1)
        r_bar, _, _ = sd.max_rank_bound(sd.ratios(synthetic_trace(eigs)), tau=0.9)
        assert r_bar == 1

    def test_band_decaying_gap_survives(self):
        # row whose ratio climbs to 1 geometrically is a survivor even though
        # its tail minimum dips into the band
        ks = np.arange(0, 25)
        ratios_row = 1.0 - 0.08 * 0.8**ks
        lam = np.concatenate([[1.0], np.cumprod(ratios_row)])
        eigs = np.stack([np.full(26, 9.0), 8.0 * lam], axis=1)
        r_bar, _, _ = sd.max_rank_bound(sd.ratios(synthetic_trace(eigs)), tau=0.9)
        assert r_bar == 2

    def test_unclean_split_recorded(self):
        ks = np.arange(1, 21)
        rows = np.stack([
            2.0 * SIGMA**ks,          # vanishing
            np.full(20, 1.0),          # surviving but below the vanisher...
        ], axis=1)
        rows = np.sort(rows, axis=1)[:, ::-1]
        # construct directly: row1 vanishing on top, row2 constant below
        eigs = np.stack([np.full(20, 5.0), 4.0 * SIGMA**ks, np.full(20, 1e-3)], axis=1)
        curves = sd.ratios(synthetic_trace(eigs))
        r_bar, verdict, _ = sd.max_rank_bound(curves, tau=0.9)
        assert verdict == "split-unclean"
        assert r_bar == 3

    def test_tau_validated(self):
        tr = trace_from_rows([(1.0, 1.0)], K=20)
        with pytest.raises(ValueError):
            sd.max_rank_bound(sd.ratios(tr), tau=0.97)


class TestFerrorLowerBound:
    def test_full_rank_gives_zero(self):
        assert sd.ferror_lower_bound(np.array([3.0, 1.0]), 2) == 0.0

    def test_tail_norm(self):
        lam = np.array([1.0, 0.1, 0.01])
        assert np.isclose(sd.ferror_lower_bound(lam, 1), np.hypot(0.1, 0.01))

    def test_range_validated(self):
        with pytest.raises(ValueError):
            sd.ferror_lower_bound(np.ones(3), 4)


class TestSdLowerBound:
    def make_curves(self, proxies, K=20):
        ks = np.arange(1, K + 1)
        eigs = np.stack(
            [(10.0 - i) * np.asarray(p, dtype=float) ** ks for i, p in enumerate(proxies)],
            axis=1,
        )
        return sd.ratios(synthetic_trace(eigs))

    def test_example_d1(self):
        curves = self.make_curves([1.0, 1.0, 0.6])
        d, ladder, verdict = sd.sd_lower_bound(curves, r_bar=2)
        assert (d, verdict) == (1, "clean")
        assert np.isclose(ladder[0], 0.6)

    def test_example_d3(self):
        # proxy 0.78 clears neither 0.6 nor 0.7746, but does clear 0.8801
        curves = self.make_curves([1.0, 1.0, 0.78, 0.6])
        d, ladder, verdict = sd.sd_lower_bound(curves, r_bar=2)
        assert (d, verdict) == (3, "clean")
        assert np.allclose(ladder, [0.6, 0.6**0.5, 0.6**0.25])

    def test_saturated(self):
        curves = self.make_curves([1.0, 0.96, 0.6])
        d, _, verdict = sd.sd_lower_bound(curves, r_bar=1)
        assert verdict == "saturated"
        assert d == 2

    def test_ladder_values(self):
        lad = sd_ladder(0.6, 5)
        assert np.allclose(lad, [0.6, 0.6**0.5, 0.6**0.25, 0.6**0.125])


class TestCountRates:
    def test_single_rate(self):
        tr = trace_from_rows([(9.0, 0.0), (2.0, 1.0), (1.0, 1.0)], K=20)
        assert sd.count_rates(sd.ratios(tr), r_bar=1) == 1

    def test_two_rates(self):
        tr = trace_from_rows([(9.0, 0.0), (2.0, 0.5), (1.0, 1.0)], K=20)
        assert sd.count_rates(sd.ratios(tr), r_bar=1) == 2

    def test_r_bar_full(self):
        tr = trace_from_rows([(9.0, 0.0), (1.0, 0.0)], K=20)
        assert sd.count_rates(sd.ratios(tr), r_bar=2) == 0


class TestSturmExponent:
    def test_identity(self):
        eb = 0.5 ** np.arange(1, 21)
        assert np.isclose(sd.sturm_exponent(eb, eb), 1.0)

    def test_sqrt(self):
        eb = 0.5 ** np.arange(1, 21)
        assert np.isclose(sd.sturm_exponent(np.sqrt(eb), eb), 0.5)

    def test_invalid(self):
        with pytest.raises(InvalidSeries):
            sd.sturm_exponent(np.ones(20), -np.ones(20))
        with pytest.raises(InvalidSeries):
            sd.sturm_exponent(np.ones(5), np.ones(5))
        with pytest.raises(InvalidSeries):
            sd.sturm_exponent(np.ones(20), np.ones(19))


class TestSequenceComparison:
    # numeric surrogate of the two-sequence lemma: if a_k <= b_k pointwise and
    # both vanish, the tail-min ratio of a cannot exceed the tail-max ratio of b
    @pytest.mark.parametrize("pa,pb,ca,cb", [
        (1.0, 0.5, 1.0, 2.0),
        (1.0, 1.0, 0.3, 1.0),
        (2.0, 0.25, 0.1, 5.0),
    ])
    def test_tail_ratio_ordering(self, pa, pb, ca, cb):
        ks = np.arange(1, 31)
        a = ca * SIGMA ** (pa * ks)
        b = cb * SIGMA ** (pb * ks)
        assert np.all(a <= b)
        ra = (a[1:] / a[:-1])[-10:]
        rb = (b[1:] / b[:-1])[-10:]
        assert ra.min() <= rb.max() + 1e-12


class TestDiagnoseAndEstimator:
    def test_estimator_roundtrip(self, worst5_trace):
        est = sd.PathDiagnostics(tau=0.9, tail_window=10)
        est.fit(worst5_trace)
        assert est.report_.r_bar == 1
        assert est.get_params()["tau"] == 0.9

    def test_report_fields(self, worst5_report):
        _, report = worst5_report
        assert report.tau_used == 0.9
        assert len(report.liminf_proxy) == 5
        assert len(report.threshold_ladder) == 4
        assert report.verdicts["rank_split"] == "clean"
