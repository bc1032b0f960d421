import warnings

import numpy as np
import pytest

import sdcheck as sd
from sdcheck.exceptions import (
    FRDiverged,
    InvalidSpec,
    NoExposingVectorFound,
    SdUndecided,
)


def outer(n, i):
    M = np.zeros((n, n))
    M[i, i] = 1.0
    return M


@pytest.fixture(autouse=True)
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


class TestSlaterCheck:
    def test_simplex_holds_with_center_witness(self, simplex2):
        holds, witness = sd.slater_check(simplex2)
        assert holds
        assert np.allclose(witness, 0.5 * np.eye(2), atol=1e-6)

    def test_worst2_fails(self, worst2):
        holds, witness = sd.slater_check(worst2)
        assert not holds and witness is None

    def test_whole_cone(self):
        F = sd.Spectrahedron(map=sd.LinearMapA([], [], n=3))
        holds, witness = sd.slater_check(F)
        assert holds
        assert np.allclose(witness, np.eye(3))


class TestExposingVector:
    def test_worst2(self, worst2):
        Z, y, q = sd.exposing_vector(worst2)
        assert q == 1
        assert np.allclose(Z / np.linalg.norm(Z), outer(2, 1), atol=1e-6)
        assert abs(y @ worst2.map.b) <= 1e-8 * max(1.0, np.linalg.norm(y))

    def test_worst3_first_step(self):
        F = sd.gen_worst_case(3)
        Z, y, q = sd.exposing_vector(F)
        assert q == 1
        assert np.allclose(Z / np.linalg.norm(Z), outer(3, 1), atol=1e-6)

    def test_slater_has_none(self, simplex2):
        with pytest.raises(NoExposingVectorFound):
            sd.exposing_vector(simplex2)

    def test_max_rank_matches_certificate_step1(self):
        # the returned rank equals the certified first-step rank
        for F, q_true in [
            (sd.gen_worst_case(4), 1),
            (sd.gen_rank_r_sd1(5, 2, seed=9), 3),
            (sd.gen_rank_r_sd1(6, 4, seed=9), 2),
        ]:
            _, _, q = sd.exposing_vector(F)
            spec_q = sd.eig_desc(F.certificate.exposing_chain[0][1])
            q_cert = int(np.sum(spec_q.values > 1e-9 * spec_q.values[0]))
            assert q == q_cert == q_true


class TestCertifiedReplay:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_worst_case_chain(self, n):
        F = sd.gen_worst_case(n)
        res = sd.facial_reduction(F, mode="certified")
        assert res.d == n - 1
        assert res.r == 1
        assert res.mode == "certified"
        # final face basis spans the singleton's range
        assert np.allclose(np.abs(res.V[:, 0]), np.eye(n)[:, 0], atol=1e-9)

    def test_worst3_details(self):
        res = sd.facial_reduction(sd.gen_worst_case(3), mode="certified")
        assert [s.q for s in res.steps] == [1, 1]
        # ranks strictly decrease and stay within n - 1 steps
        dims = [3] + [s.Vk.shape[1] for s in res.steps]
        assert all(a > b for a, b in zip(dims, dims[1:]))

    def test_requires_chain(self, simplex2):
        with pytest.raises(InvalidSpec):
            sd.facial_reduction(simplex2, mode="certified")

    def test_rejects_corrupted_chain(self):
        F = sd.gen_worst_case(3)
        y, Z = F.certificate.exposing_chain[0]
        F.certificate.exposing_chain[0] = (y + 0.5, Z)
        with pytest.raises(InvalidSpec):
            sd.facial_reduction(F, mode="certified")

    def test_step_invariants_and_exposing(self):
        F = sd.gen_worst_case(4)
        res = sd.facial_reduction(F, mode="certified")
        sample = F.certificate.singleton_solution
        for step in res.steps:
            # accumulated pair stays a valid face representation
            if step.Vk.shape[1] > 0:
                face = sd.FaceRep(V=step.Vk, W=step.Wk)
                assert face.r == step.Vk.shape[1]
            # accumulated exposing vector annihilates the feasible sample
            assert sd.is_exposing(F, step.Wk, [sample])

    def test_direct_sum_replay(self):
        F = sd.gen_direct_sum([sd.gen_worst_case(3), sd.gen_worst_case(3)])
        res = sd.facial_reduction(F, mode="certified")
        assert res.d == F.certificate.sd_true == 2
        F2 = sd.gen_direct_sum([sd.gen_worst_case(3), sd.gen_slater(2, 1, seed=3)])
        res2 = sd.facial_reduction(F2, mode="certified")
        assert res2.d == 2
        assert res2.r == F2.certificate.max_rank_true == 3


class TestNumericalMode:
    def test_slater_zero_steps(self):
        F = sd.gen_slater(4, 3, seed=2)
        res = sd.facial_reduction(F, mode="numerical")
        assert res.d == 0
        assert res.r == 4
        assert np.allclose(res.V, np.eye(4))

    def test_worst3(self):
        assert sd.singularity_degree(sd.gen_worst_case(3), mode="numerical") == 2

    def test_worst5_never_wrong(self, worst5):
        try:
            d = sd.singularity_degree(worst5, mode="numerical")
        except SdUndecided:
            return
        assert d == 4

    @pytest.mark.parametrize("make,sd_true", [
        (lambda: sd.gen_worst_case(2), 1),
        (lambda: sd.gen_rank_r_sd1(6, 2, seed=5), 1),
        (lambda: sd.gen_direct_sum([sd.gen_worst_case(3), sd.gen_slater(2, 1, seed=3)]), 2),
    ])
    def test_agreement_with_certificate(self, make, sd_true):
        F = make()
        try:
            d = sd.singularity_degree(F, mode="numerical")
        except SdUndecided:
            return  # allowed surface, never a wrong confident value
        assert d == sd_true

    def test_origin_convention(self):
        # {X in S^1_+ : X_11 = 0} = {0}: exactly one full-rank exposing step
        amap = sd.LinearMapA([np.eye(1)], [0.0])
        F = sd.Spectrahedron(map=amap)
        assert sd.singularity_degree(F, mode="numerical") == 1

    def test_diverged_carries_partial(self, worst5):
        try:
            res = sd.facial_reduction(worst5, mode="numerical")
        except FRDiverged as exc:
            assert exc.partial is not None
            return
        assert res.d == 4


class TestEstimator:
    def test_fit_certified(self):
        est = sd.FacialReduction(mode="certified").fit(sd.gen_worst_case(4))
        assert est.d_ == 3
        assert est.r_ == 1
        assert len(est.steps_) == 3
        assert est.get_params()["mode"] == "certified"
