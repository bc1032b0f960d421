"""Shared fixtures: the expensive path traces are computed once per session."""
import warnings

import numpy as np
import pytest

import sdcheck as sd


@pytest.fixture(scope="session")
def worst5():
    return sd.gen_worst_case(5)


@pytest.fixture(scope="session")
def worst5_trace(worst5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return sd.follow(worst5, sigma=0.6, k_max=60)


@pytest.fixture(scope="session")
def worst5_report(worst5_trace):
    return sd.diagnose(worst5_trace, tau=0.9, tail_window=10)


@pytest.fixture(scope="session")
def spec1_analog():
    return sd.gen_rank_r_sd1(20, 7, seed=1)


@pytest.fixture(scope="session")
def spec1_trace(spec1_analog):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return sd.follow(spec1_analog, sigma=0.6, k_max=60)


@pytest.fixture(scope="session")
def simplex2():
    """Scaled simplex in S^2: trace X = 1."""
    amap = sd.LinearMapA([np.eye(2)], [1.0])
    return sd.Spectrahedron(map=amap)


@pytest.fixture(scope="session")
def simplex2_trace(simplex2):
    return sd.follow(simplex2, sigma=0.6, k_max=40)


@pytest.fixture(scope="session")
def worst2():
    return sd.gen_worst_case(2)


@pytest.fixture(scope="session")
def worst2_trace(worst2):
    return sd.follow(worst2, sigma=0.6, k_max=40)


def synthetic_trace(eigs, sigma=0.6, k_start=1):
    """PathTrace carrying only eigenvalue rows, for the ratio diagnostics."""
    eigs = np.asarray(eigs, dtype=float)
    K, n = eigs.shape
    alphas = np.array([sigma ** (k_start + j) for j in range(K)])
    return sd.PathTrace(
        sigma=sigma,
        B=np.eye(n),
        alphas=alphas,
        points=[],
        eigsX=eigs,
        eigsZ=eigs.copy(),
        berr=np.zeros(K),
        k_start=k_start,
    )
