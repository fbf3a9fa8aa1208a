import numpy as np
import pytest

from app.exceptions import (
    ConsistencyError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidNoiseError,
    NotInformationallyCompleteError,
)
from app.services.observables import (
    characteristic_function,
    classify,
    covariant_observable,
    decompose_covariant,
    estimate_distribution,
    linear_postprocess,
    make_distribution,
    make_observable,
    marginal_direction,
    observable_for_subspace,
    pushforward,
    q_function,
    quadrature,
    sample_outcomes,
    sharp_smearing_split,
    smear,
    smear_with_distribution,
    transform_covariant,
    validate_observable,
)
from app.services.states import coherent, vacuum
from app.services.symplectic import is_symplectic, omega_matrix
from tests.conftest import random_observable, random_state, random_symplectic

TIGHT_ATOL = 1e-12
DECOMPOSITION_ATOL = 1e-9


def _random_ic_observable(n_modes: int, rng: np.random.Generator):
    """Well-conditioned random A₀; B₀ = ‖A₀ᵀΩA₀‖·I plus a random PSD part"""
    dim = 2 * n_modes
    left = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    right = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
    a0 = left @ np.diag(rng.uniform(0.5, 2.0, size=dim)) @ right
    k = a0.T @ omega_matrix(n_modes) @ a0
    g = rng.normal(size=(dim, dim))
    b0 = np.linalg.norm(k, 2) * np.eye(dim) + 0.2 * g @ g.T
    return make_observable(a0, b0, rng.normal(size=dim))


class TestValidity:
    def test_q_function_is_valid(self):
        assert validate_observable(q_function(2))

    def test_q_function_below_limit_fails(self):
        result = validate_observable(make_observable(-omega_matrix(1), 0.99 * np.eye(2)))
        assert not result
        assert result.min_eigenvalue == pytest.approx(-0.01, abs=1e-12)

    def test_sharp_quadrature_is_valid(self):
        assert validate_observable(quadrature(0.4, 0.3))

    def test_noncommuting_sharp_pair_is_invalid(self):
        # Q and P jointly without noise
        assert not validate_observable(make_observable(np.eye(2), np.zeros((2, 2))))

    def test_one_dimensional_a0_is_a_column(self):
        obs = make_observable([0.0, 1.0], [[0.0]])
        assert obs.outcome_dim == 1
        assert obs.a0.shape == (2, 1)

    def test_odd_outcome_dimension(self):
        obs = make_observable(np.ones((2, 3)), 10 * np.eye(3))
        assert obs.outcome_dim == 3

    def test_non_symmetric_b0(self):
        with pytest.raises(InvalidInputError):
            make_observable(np.eye(2), [[1.0, 0.5], [0.0, 1.0]])

    def test_odd_a0_rows(self):
        with pytest.raises(InvalidDimensionError):
            make_observable(np.ones((3, 1)), [[1.0]])


class TestClassify:
    def test_q_function(self):
        assert classify(q_function(1)).as_dict() == {
            "commutative": False, "sharp": False, "covariant": True, "ic": True,
        }

    def test_sharp_quadrature(self):
        c = classify(quadrature(0.2))
        assert c.commutative and c.sharp and not c.covariant and not c.informationally_complete

    def test_smeared_quadrature_is_not_sharp(self):
        c = classify(smear(quadrature(0.2), [[0.3]]))
        assert c.commutative and not c.sharp

    def test_commuting_pair_is_not_ic(self):
        obs = make_observable([[1.0, 2.0], [0.0, 0.0]], np.zeros((2, 2)))
        c = classify(obs)
        assert c.commutative and not c.informationally_complete


class TestPushforward:
    def test_q_function_vacuum(self):
        dist = pushforward(q_function(1), vacuum(1))
        np.testing.assert_allclose(dist.cov, np.eye(2), atol=TIGHT_ATOL)
        np.testing.assert_allclose(dist.mean, np.zeros(2), atol=TIGHT_ATOL)

    def test_q_function_mean_is_displacement(self):
        dist = pushforward(q_function(1), coherent([0.6, -0.4]))
        np.testing.assert_allclose(dist.mean, [0.6, -0.4], atol=TIGHT_ATOL)

    def test_quadrature_variance(self):
        dist = pushforward(quadrature(0.0), vacuum(1))
        assert dist.cov[0, 0] == pytest.approx(0.5)

    def test_matches_characteristic_function(self, single_mode_states, rng):
        obs = smear(q_function(1), 0.3 * np.eye(2), [0.1, -0.2])
        for state in single_mode_states:
            dist = pushforward(obs, state)
            for _ in range(5):
                p = rng.normal(size=2)
                assert dist.characteristic(p) == pytest.approx(characteristic_function(obs, state, p), abs=1e-12)

    def test_smearing_parameters(self):
        dist = make_distribution([1.0], [[0.25]])
        c, d = dist.smearing_parameters()
        np.testing.assert_allclose(c, [[0.5]])
        np.testing.assert_allclose(d, [-1.0])

    def test_mode_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            pushforward(q_function(2), vacuum(1))


class TestPostprocessingAndSmearing:
    def test_postprocess_then_pushforward_commutes(self, two_mode_state, rng):
        obs = q_function(2)
        p = rng.normal(size=(3, 4))
        post = linear_postprocess(obs, p)
        dist = pushforward(obs, two_mode_state)
        post_dist = pushforward(post, two_mode_state)
        np.testing.assert_allclose(post_dist.mean, p @ dist.mean, atol=1e-10)
        np.testing.assert_allclose(post_dist.cov, p @ dist.cov @ p.T, atol=1e-10)

    def test_smear_adds_noise_covariance(self, single_mode_states):
        noise = make_distribution([0.3, 0.0], [[0.2, 0.0], [0.0, 0.1]])
        smeared = smear_with_distribution(q_function(1), noise)
        for state in single_mode_states:
            base = pushforward(q_function(1), state)
            out = pushforward(smeared, state)
            np.testing.assert_allclose(out.cov, base.cov + noise.cov, atol=TIGHT_ATOL)
            np.testing.assert_allclose(out.mean, base.mean + noise.mean, atol=TIGHT_ATOL)

    def test_smear_rejects_indefinite(self):
        with pytest.raises(InvalidNoiseError):
            smear(q_function(1), np.diag([1.0, -0.5]))

    def test_singular_smearing_allowed(self):
        smeared = smear(q_function(1), np.diag([1.0, 0.0]))
        assert validate_observable(smeared)

    def test_marginal_direction(self):
        direction = marginal_direction(q_function(1), [1.0, 0.0])
        np.testing.assert_allclose(direction, -omega_matrix(1)[:, 0])

    def test_marginal_needs_phase_space_observable(self):
        with pytest.raises(InvalidDimensionError):
            marginal_direction(quadrature(0.0), [1.0])

    def test_sharp_split(self):
        obs = smear(quadrature(0.5), [[0.4]], [0.2])
        sharp, noise = sharp_smearing_split(obs)
        assert classify(sharp).sharp
        np.testing.assert_allclose(noise.cov, [[0.2]])
        np.testing.assert_allclose(noise.mean, [-0.2])
        np.testing.assert_allclose(smear_with_distribution(sharp, noise).b0, obs.b0, atol=TIGHT_ATOL)

    def test_sharp_split_needs_commutative(self):
        with pytest.raises(InvalidInputError):
            sharp_smearing_split(q_function(1))


class TestCovariant:
    def test_transform_preserves_covariance_and_validity(self, rng):
        s = random_symplectic(1, rng)
        obs = transform_covariant(covariant_observable(2 * np.eye(2), [0.1, 0.2]), s)
        assert classify(obs).covariant
        assert validate_observable(obs)
        np.testing.assert_allclose(obs.b0, 2 * s @ s.T, atol=1e-12)

    def test_transform_rejects_non_covariant(self):
        with pytest.raises(InvalidInputError):
            transform_covariant(quadrature(0.0), np.eye(2))

    def test_decompose_smeared_q_function(self):
        decomposition = decompose_covariant(smear(q_function(1), 2 * np.eye(2)))
        assert decomposition.betas == pytest.approx((3.0,))
        np.testing.assert_allclose(decomposition.noise_c, 2 * np.eye(2), atol=DECOMPOSITION_ATOL)

    @pytest.mark.parametrize("n_modes", [1, 2])
    def test_recomposition_on_random_observables(self, n_modes, rng):
        for _ in range(50):
            obs = _random_ic_observable(n_modes, rng)
            assert validate_observable(obs)
            decomposition = decompose_covariant(obs)
            assert min(decomposition.betas) >= 1 - DECOMPOSITION_ATOL
            assert is_symplectic(decomposition.s, 1e-8)
            back = decomposition.recompose()
            np.testing.assert_allclose(back.a0, obs.a0, atol=DECOMPOSITION_ATOL)
            np.testing.assert_allclose(back.b0, obs.b0, atol=DECOMPOSITION_ATOL * max(1.0, np.abs(obs.b0).max()))
            np.testing.assert_allclose(back.v0, obs.v0, atol=DECOMPOSITION_ATOL)

    def test_decompose_rejects_non_ic(self):
        with pytest.raises(NotInformationallyCompleteError):
            decompose_covariant(quadrature(0.0))

    def test_decompose_flags_invalid_input(self):
        with pytest.raises(ConsistencyError):
            decompose_covariant(make_observable(-omega_matrix(1), 0.5 * np.eye(2)))


class TestSubspaceAndSampling:
    def test_observable_for_subspace(self):
        obs = observable_for_subspace([[1.0], [1.0], [0.0], [0.0]])
        assert obs.outcome_dim == 1
        assert validate_observable(obs)
        np.testing.assert_allclose(np.abs(obs.a0[:, 0]), [2 ** -0.5, 2 ** -0.5, 0, 0], atol=TIGHT_ATOL)

    def test_observable_for_full_space_is_ic(self):
        obs = observable_for_subspace(np.eye(2))
        assert classify(obs).informationally_complete
        assert validate_observable(obs)

    def test_sampling_is_seeded(self):
        dist = pushforward(q_function(1), coherent([0.6, -0.4]))
        a = sample_outcomes(dist, 100, seed=7)
        b = sample_outcomes(dist, 100, seed=7)
        np.testing.assert_array_equal(a, b)
        assert a.shape == (100, 2)

    def test_estimate_converges(self):
        dist = pushforward(smear(q_function(1), 0.5 * np.eye(2)), coherent([0.6, -0.4]))
        estimate = estimate_distribution(sample_outcomes(dist, 100_000, seed=3))
        np.testing.assert_allclose(estimate.mean, dist.mean, atol=0.05 * np.sqrt(dist.cov.max()))
        np.testing.assert_allclose(estimate.cov, dist.cov, rtol=0.05, atol=0.05 * dist.cov.max())

    def test_estimate_needs_two_samples(self):
        with pytest.raises(InvalidInputError):
            estimate_distribution([[1.0, 2.0]])


def _rank_one_observable(rng: np.random.Generator):
    a0 = np.outer(rng.normal(size=2), rng.normal(size=2))
    g = rng.normal(size=(2, 2))
    return make_observable(a0, 0.1 * g @ g.T, rng.normal(size=2))


class TestClassificationTable:
    @pytest.mark.parametrize("obs, expected", [
        (quadrature(0.0), (True, True, False, False)),
        (quadrature(np.pi / 3), (True, True, False, False)),
        (smear(quadrature(0.0), [[1.0]]), (True, False, False, False)),
        (q_function(1), (False, False, True, True)),
    ])
    def test_fixtures(self, obs, expected):
        c = classify(obs)
        assert (c.commutative, c.sharp, c.covariant, c.informationally_complete) == expected

    def test_rotated_quadrature_direction(self):
        np.testing.assert_allclose(quadrature(np.pi / 3).a0[:, 0], [-np.sin(np.pi / 3), np.cos(np.pi / 3)])

    def test_random_ic_and_rank_one(self, rng):
        for _ in range(20):
            c = classify(_random_ic_observable(1, rng))
            assert (c.commutative, c.covariant, c.informationally_complete) == (False, False, True)
            c = classify(_rank_one_observable(rng))
            assert (c.commutative, c.sharp, c.covariant, c.informationally_complete) == (True, False, False, False)


class TestRandomInvariants:
    def test_pushforward_matches_characteristic_function(self, rng):
        for _ in range(200):
            n, m = int(rng.integers(1, 3)), int(rng.integers(1, 5))
            obs, state = random_observable(n, m, rng), random_state(n, rng)
            dist = pushforward(obs, state)
            assert np.linalg.eigvalsh(dist.cov).min() >= -1e-10
            p = rng.normal(size=m) * 0.5
            assert dist.characteristic(p) == pytest.approx(characteristic_function(obs, state, p), abs=1e-10)

    def test_ic_survives_smearing_and_invertible_postprocessing(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 3))
            obs = random_observable(n, int(rng.integers(1, 2 * n + 3)), rng)
            ic = classify(obs).informationally_complete
            g = rng.normal(size=(obs.outcome_dim, obs.outcome_dim))
            assert classify(smear(obs, g @ g.T)).informationally_complete == ic
            assert classify(linear_postprocess(obs, g)).informationally_complete == ic

    def test_fewer_outcomes_than_phase_space_is_never_ic(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 4))
            obs = random_observable(n, int(rng.integers(1, 2 * n)), rng)
            assert not classify(obs).informationally_complete

    def test_rank_deficient_postprocessing_loses_ic(self, rng):
        obs = q_function(2)
        p = rng.normal(size=(6, 3)) @ rng.normal(size=(3, 4))
        assert not classify(linear_postprocess(obs, p)).informationally_complete

    def test_single_mode_ic_iff_noncommutative(self, rng):
        for _ in range(200):
            m = int(rng.integers(1, 5))
            if rng.random() < 0.5:
                a0 = np.outer(rng.normal(size=2), rng.normal(size=m))
            else:
                a0 = rng.normal(size=(2, m))
            k = a0.T @ omega_matrix(1) @ a0
            eigvals, eigvecs = np.linalg.eigh(k.T @ k)
            b0 = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T + np.eye(m)
            c = classify(make_observable(a0, b0))
            assert c.informationally_complete == (not c.commutative)
