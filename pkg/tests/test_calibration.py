import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_matrices
from contactkit.analysis import MixingMatrices
from contactkit.calibration import (basic_reproduction_number, calibrate_beta, next_generation_matrix,
                                    spectral_radius)
from contactkit.exceptions import ConvergenceError
from contactkit.population import ModelPopulation, PopulationPyramid
from contactkit.transmission import DEFAULT_GAMMA, MixingSpec

MATRIX_MODES = ("contacts_only", "contacts_and_duration")


def _two_group_population(size=1000.0):
    counts = np.zeros(18)
    counts[:4] = size / 4
    counts[4] = size
    return ModelPopulation.from_counts(counts)


def _mm(M, T):
    return MixingMatrices(np.asarray(M, float), np.asarray(T, float), np.full(6, 5))


def test_spectral_radius_examples():
    assert spectral_radius(np.diag([1.0, 2.0, 3.0])) == pytest.approx(3.0, rel=1e-12)
    assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == 1.0
    assert spectral_radius(np.array([[2.5]])) == 2.5


def test_spectral_radius_periodic_and_reducible():
    P = np.roll(np.eye(6), 1, axis=1)          # cyclic permutation, periodic
    assert spectral_radius(3 * P) == pytest.approx(3.0, rel=1e-12)
    B = np.zeros((6, 6))
    B[:3, :3] = [[0, 2, 0], [0, 0, 2], [2, 0, 0]]
    B[3:, 3:] = 0.5
    B[0, 4] = 7.0                               # one-way coupling does not change the radius
    assert spectral_radius(B) == pytest.approx(2.0, rel=1e-12)
    assert spectral_radius(np.zeros((4, 4))) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.6))
def test_spectral_radius_matches_dense_eigensolver(seed, zero_frac):
    rng = np.random.default_rng(seed)
    K = rng.uniform(0, 3, (6, 6)) * (rng.random((6, 6)) > zero_frac)
    oracle = float(np.max(np.abs(np.linalg.eigvals(K))))
    rho = spectral_radius(K)
    assert abs(rho - oracle) <= 1e-9 * max(1.0, oracle)
    assert rho >= K.diagonal().max() - 1e-12
    assert rho <= K.sum(axis=1).max() + 1e-12


def test_spectral_radius_input_checks():
    with pytest.raises(ValueError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ValueError):
        spectral_radius(-np.eye(3))
    with pytest.raises(ConvergenceError):
        spectral_radius(np.random.default_rng(0).random((6, 6)), max_iter=1)


def test_scalar_and_identity_ngm(population):
    K = next_generation_matrix(MixingSpec("homogeneous", contact_rate=3.0), population, 0.2, 0.5).K
    assert K.shape == (1, 1) and K[0, 0] == pytest.approx(0.2 * 3.0 / 0.5, rel=1e-15)
    pop = ModelPopulation.from_counts(np.array([1.0] * 4 + [4.0] + [4.0] * 2 + [4.0] * 11) * 100)
    ngm = next_generation_matrix(MixingSpec("contacts_and_duration", _mm(np.eye(6), np.eye(6))), pop, 0.3, 0.1)
    np.testing.assert_allclose(ngm.K, 3.0 * np.eye(6), rtol=1e-15)
    assert ngm.r0 == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("a, b", [(2.0, 0.5), (1.0, 1.0), (0.3, 2.7)])
def test_symmetric_two_group_closed_form(a, b):
    M = np.zeros((6, 6))
    M[:2, :2] = [[a, b], [b, a]]
    mix = MixingSpec("contacts_and_duration", _mm(M, (M > 0).astype(float)))
    beta, gamma = 0.07, 0.2
    r0 = basic_reproduction_number(mix, _two_group_population(), beta, gamma)
    assert r0 == pytest.approx(beta / gamma * (a + b), rel=1e-14)


def test_zero_population_group_with_contacts_rejected():
    M = np.zeros((6, 6))
    M[0, 2] = 1.0
    with pytest.raises(ValueError, match="zero population"):
        next_generation_matrix(MixingSpec("contacts_only", _mm(M, M)), _two_group_population(), 0.1, 0.2)


def test_scalar_inversion(population):
    beta = calibrate_beta(MixingSpec("homogeneous", contact_rate=2.0), population, DEFAULT_GAMMA, 1.3)
    assert beta == pytest.approx(1.3 / (2 * 5.1), rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(MATRIX_MODES + ("homogeneous",)),
       st.sampled_from([0.5, 1.0, 1.3, 2.5]), st.sampled_from(["distinct_groups", "literal_18"]))
def test_calibration_round_trip(seed, mode, target, summation):
    rng = np.random.default_rng(seed)
    pop = ModelPopulation.from_pyramid(PopulationPyramid(rng.uniform(0.1, 1, 18)))
    mix = MixingSpec(mode, random_matrices(rng), foi_summation=summation)
    gamma = float(rng.uniform(0.05, 1.0))
    beta = calibrate_beta(mix, pop, gamma, target)
    assert abs(basic_reproduction_number(mix, pop, beta, gamma) - target) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10), st.floats(0.1, 10))
def test_homogeneity_in_beta_and_gamma(seed, c_beta, c_gamma):
    rng = np.random.default_rng(seed)
    pop = ModelPopulation.from_pyramid(PopulationPyramid(rng.uniform(0.1, 1, 18)))
    mix = MixingSpec("contacts_and_duration", random_matrices(rng))
    base = basic_reproduction_number(mix, pop, 0.05, 0.2)
    scaled = basic_reproduction_number(mix, pop, 0.05 * c_beta, 0.2 * c_gamma)
    assert scaled == pytest.approx(base * c_beta / c_gamma, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_population_scaling_invariance(seed, factor):
    rng = np.random.default_rng(seed)
    counts = rng.uniform(1e4, 1e6, 18)
    mix = MixingSpec("contacts_only", random_matrices(rng))
    a = basic_reproduction_number(mix, ModelPopulation.from_counts(counts), 0.1, 0.2)
    b = basic_reproduction_number(mix, ModelPopulation.from_counts(counts * factor), 0.1, 0.2)
    assert b == pytest.approx(a, rel=1e-10)


def test_doubling_durations_halves_beta(population, fixture_matrices):
    doubled = MixingMatrices(fixture_matrices.M, 2 * fixture_matrices.T, fixture_matrices.participant_counts)
    b1 = calibrate_beta(MixingSpec("contacts_and_duration", fixture_matrices), population, DEFAULT_GAMMA, 1.3)
    b2 = calibrate_beta(MixingSpec("contacts_and_duration", doubled), population, DEFAULT_GAMMA, 1.3)
    assert b2 == b1 / 2


def test_ngm_to_dict(population, fixture_matrices):
    d = next_generation_matrix(MixingSpec("contacts_only", fixture_matrices), population, 0.1, 0.2).to_dict()
    assert set(d) >= {"K", "r0"}
    assert len(d["K"]) == 6
