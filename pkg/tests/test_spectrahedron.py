import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sdcheck as sd
from sdcheck.exceptions import (
    EmptyFace,
    InfeasibleAffine,
    InvalidDimension,
    InvalidMatrix,
    InvalidSample,
    OracleUnavailable,
)
from sdcheck.spectrahedron import reduce_map


def e(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def outer(n, i, j=None):
    if j is None:
        j = i
    v, w = e(n, i), e(n, j)
    M = np.outer(v, w)
    return 0.5 * (M + M.T)


def rand_sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


class TestMap:
    def test_apply_examples(self):
        amap = sd.LinearMapA([np.eye(2)], [2.0])
        assert np.allclose(amap.apply(np.eye(2)), [2.0])
        amap2 = sd.LinearMapA([outer(2, 0), outer(2, 1)], [0.0, 0.0])
        assert np.allclose(amap2.apply(np.diag([3.0, 5.0])), [3.0, 5.0])

    def test_adjoint_examples(self):
        amap = sd.LinearMapA([outer(2, 1)], [0.0])
        assert np.allclose(amap.adjoint([0.0]), np.zeros((2, 2)))
        assert np.allclose(amap.adjoint([1.0]), outer(2, 1))

    @given(st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=25, deadline=None)
    def test_adjoint_consistency(self, seed):
        rng = np.random.default_rng(seed)
        n, m = 4, 3
        amap = sd.LinearMapA([rand_sym(rng, n) for _ in range(m)], rng.standard_normal(m))
        X = rand_sym(rng, n)
        y = rng.standard_normal(m)
        assert np.isclose(sd.inner(amap.adjoint(y), X), float(y @ amap.apply(X)),
                          rtol=1e-12, atol=1e-12)

    @given(st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=25, deadline=None)
    def test_adjoint_linearity(self, seed):
        rng = np.random.default_rng(seed)
        amap = sd.LinearMapA([rand_sym(rng, 3) for _ in range(2)], np.zeros(2))
        y, z = rng.standard_normal(2), rng.standard_normal(2)
        assert np.allclose(amap.adjoint(y + z), amap.adjoint(y) + amap.adjoint(z))

    def test_dimension_errors(self):
        amap = sd.LinearMapA([np.eye(2)], [1.0])
        with pytest.raises(InvalidDimension):
            amap.apply(np.eye(3))
        with pytest.raises(InvalidDimension):
            amap.adjoint([1.0, 2.0])

    def test_surjectivity_flag(self):
        A = rand_sym(np.random.default_rng(0), 3)
        good = sd.LinearMapA([A, np.eye(3)], [0.0, 1.0])
        assert good.surjective
        dup = sd.LinearMapA([A, A], [0.0, 0.0])
        assert not dup.surjective

    def test_empty_map(self):
        amap = sd.LinearMapA([], [], n=3)
        assert amap.m == 0 and amap.apply(np.eye(3)).size == 0
        assert amap.surjective


class TestBackwardError:
    def test_feasible_point_is_zero(self):
        F = sd.gen_worst_case(3)
        assert sd.backward_error(F, F.certificate.singleton_solution) <= 1e-10

    def test_affine_distance_closed_form(self):
        # {X >= 0 : X_11 = 1}; at X = 0 the minimum-norm correction is the
        # single constrained entry, so the affine distance is exactly 1
        F = sd.Spectrahedron(map=sd.LinearMapA([outer(2, 0)], [1.0]))
        assert np.isclose(sd.backward_error(F, np.zeros((2, 2))), 1.0)

    def test_psd_part_unconstrained_entry(self):
        F = sd.Spectrahedron(map=sd.LinearMapA([outer(2, 0)], [1.0]))
        for t in (0.1, 1.0, 2.5):
            X = np.diag([1.0, -t])
            assert np.isclose(sd.backward_error(F, X), t, rtol=1e-12)

    def test_inconsistent_rank_deficient(self):
        A = outer(2, 0)
        F = sd.Spectrahedron(map=sd.LinearMapA([A, A], [0.0, 1.0]))
        with pytest.raises(InfeasibleAffine):
            sd.backward_error(F, np.zeros((2, 2)))


class TestForwardError:
    def test_singleton_examples(self):
        F = sd.gen_worst_case(2)
        X_star = F.certificate.singleton_solution
        assert sd.forward_error(F, X_star) == 0.0
        assert np.isclose(sd.forward_error(F, X_star + np.diag([0.0, 0.1])), 0.1)

    def test_no_certificate(self):
        F = sd.Spectrahedron(map=sd.LinearMapA([np.eye(2)], [1.0]))
        with pytest.raises(OracleUnavailable):
            sd.forward_error(F, np.eye(2))

    def test_face_case_matches_grid_oracle(self):
        # face {V R V^T : R >= 0, trace R = 1} in S^3 has two free parameters;
        # two-stage grid search is the independent projection oracle
        n = 3
        V = np.eye(3)[:, :2]
        W = outer(3, 2)
        amap = sd.LinearMapA([np.eye(3), W], [1.0, 0.0])
        cert = sd.Certificate(solution_face=sd.FaceRep(V=V, W=W), max_rank_true=2)
        F = sd.Spectrahedron(map=amap, certificate=cert)
        rng = np.random.default_rng(7)
        X = rand_sym(rng, 3) * 0.5 + np.eye(3)

        def feas_dist(r11, r12):
            r22 = 1.0 - r11
            R = np.array([[r11, r12], [r12, r22]])
            if np.linalg.eigvalsh(R)[0] < 0.0:
                return np.inf
            return np.linalg.norm(V @ R @ V.T - X)

        # coarse pass then a zoomed pass around the winner
        g1 = np.linspace(0.0, 1.0, 201)
        g2 = np.linspace(-0.5, 0.5, 201)
        best = min(((feas_dist(a, b), a, b) for a in g1 for b in g2))
        da, db = 1.0 / 200, 1.0 / 200
        g1f = np.linspace(best[1] - da, best[1] + da, 161)
        g2f = np.linspace(best[2] - db, best[2] + db, 161)
        grid_val = min(feas_dist(a, b) for a in g1f for b in g2f)

        assert np.isclose(sd.forward_error(F, X), grid_val, atol=1e-6)

    def test_backward_components_below_forward(self):
        # the nearest feasible point witnesses each backward-error term
        # separately, so each term (and half the sum) is below forward error
        F = sd.gen_worst_case(3)
        rng = np.random.default_rng(11)
        for _ in range(5):
            X = F.certificate.singleton_solution + 0.1 * rand_sym(rng, 3)
            ef = sd.forward_error(F, X)
            r = F.map.b - F.map.apply(X)
            affine = np.linalg.norm(F.map.pinv_apply(r))
            psd = sd.dist_psd(X)
            assert affine <= ef + 1e-10
            assert psd <= ef + 1e-10
            assert sd.backward_error(F, X) <= 2.0 * ef + 1e-10


class TestReduce:
    def test_identity_keeps_map(self):
        F = sd.gen_worst_case(3)
        red = reduce_map(F.map, np.eye(3))
        X = rand_sym(np.random.default_rng(1), 3)
        assert red.m == F.map.m
        assert np.allclose(sorted(red.apply(X)), sorted(F.map.apply(X)))

    def test_drops_zeroed_row(self):
        # constraint X_22 = 0 restricted to span{e_1} vanishes entirely
        amap = sd.LinearMapA([outer(2, 1)], [0.0])
        red = reduce_map(amap, np.eye(2)[:, :1])
        assert red.m == 0 and red.n == 1

    @given(st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=25, deadline=None)
    def test_restriction_identity(self, seed):
        rng = np.random.default_rng(seed)
        n, r = 4, 2
        amap = sd.LinearMapA([rand_sym(rng, n) for _ in range(3)], np.zeros(3))
        V, _ = np.linalg.qr(rng.standard_normal((n, r)))
        red = reduce_map(amap, V, drop_dependent=False)
        R = rand_sym(rng, r)
        assert np.allclose(red.apply(R), amap.apply(V @ R @ V.T), atol=1e-12)

    @given(st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=25, deadline=None)
    def test_adjoint_commutes(self, seed):
        rng = np.random.default_rng(seed)
        n, r, m = 4, 3, 2
        amap = sd.LinearMapA([rand_sym(rng, n) for _ in range(m)], np.zeros(m))
        V, _ = np.linalg.qr(rng.standard_normal((n, r)))
        red = reduce_map(amap, V, drop_dependent=False)
        y = rng.standard_normal(m)
        assert np.allclose(red.adjoint(y), V.T @ amap.adjoint(y) @ V, atol=1e-12)

    def test_empty_face(self):
        F = sd.gen_worst_case(3)
        with pytest.raises(EmptyFace):
            reduce_map(F.map, np.zeros((3, 0)))


class TestFaceRep:
    def test_from_spectral_split(self):
        rng = np.random.default_rng(2)
        M = rand_sym(rng, 4)
        W = sd.proj_psd(M) + 1e-3 * np.eye(4)  # PD exposing vector, face = {0}...
        spec = sd.eig_desc(W)
        q = int(np.sum(spec.values > 1e-9 * spec.values[0]))
        V = spec.vectors[:, q:]
        face = sd.FaceRep(V=V, W=W)
        assert face.r == 4 - q

    def test_rejects_nonorthogonal_pair(self):
        with pytest.raises(InvalidMatrix):
            sd.FaceRep(V=np.eye(2)[:, :1], W=np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_rejects_non_psd_w(self):
        with pytest.raises(InvalidMatrix):
            sd.FaceRep(V=np.eye(2)[:, :1], W=np.diag([0.0, -1.0]))


class TestIsExposing:
    def test_zero_is_vacuous(self):
        F = sd.gen_worst_case(2)
        assert sd.is_exposing(F, np.zeros((2, 2)), [F.certificate.singleton_solution])

    def test_worst_case_family(self):
        F = sd.gen_worst_case(2)
        sample = F.certificate.singleton_solution
        assert sd.is_exposing(F, outer(2, 1), [sample])

    def test_identity_not_exposing(self):
        F = sd.gen_worst_case(2)
        assert not sd.is_exposing(F, np.eye(2), [F.certificate.singleton_solution])

    def test_infeasible_sample(self):
        F = sd.gen_worst_case(2)
        with pytest.raises(InvalidSample):
            sd.is_exposing(F, outer(2, 1), [np.eye(2)])
