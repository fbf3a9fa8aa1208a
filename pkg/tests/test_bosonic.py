import numpy as np
import pytest

from app.exceptions import InvalidDimensionError, InvalidInputError, InvalidNoiseError, InvalidObservableError
from app.services.bosonic import (
    IC_CONSISTENT,
    NOT_IC,
    GridSpec,
    bosonic_from_gaussian,
    covariant_fock,
    f0_eval,
    ic_bosonic_verdict,
    make_noise,
    smeared_gaussian,
    support_probe,
)
from app.services.fock_oracle import coherent_state, number_state
from app.services.observables import classify, q_function, quadrature, smear
from app.services.symplectic import omega_matrix
from tests.conftest import BOSONIC_CUTOFF, random_observable

GRID = GridSpec(points=101, half_width=4.0)
COARSE_GRID = GridSpec(points=41, half_width=4.0)


def _q_with_noise(noise):
    return smeared_gaussian(-omega_matrix(1), np.eye(2), np.zeros(2), noise)


class TestNoise:
    def test_gaussian_noise_matches_smearing(self):
        noise = make_noise("gaussian", c=0.5 * np.eye(2), d=[0.1, 0.0])
        obs = _q_with_noise(noise)
        p = np.array([0.3, -0.7])
        expected = np.exp(-0.25 * p @ (1.5 * np.eye(2)) @ p - 1j * 0.1 * p[0])
        assert f0_eval(obs, p) == pytest.approx(expected)

    def test_fejer_has_compact_support(self):
        obs = _q_with_noise(make_noise("fejer", width=1.0))
        assert f0_eval(obs, [0.5, 0.0]) != 0
        assert f0_eval(obs, [1.2, 0.0]) == 0

    def test_notch_vanishes_on_both_balls(self):
        obs = _q_with_noise(make_noise("notch", centers=[[2.0, 0.0]], radius=0.6))
        assert f0_eval(obs, [2.0, 0.3]) == 0
        assert f0_eval(obs, [-2.0, 0.0]) == 0
        assert f0_eval(obs, [0.0, 0.0]) != 0

    def test_rejects_indefinite_gaussian_noise(self):
        with pytest.raises(InvalidNoiseError):
            make_noise("gaussian", c=np.diag([1.0, -1.0]))

    def test_rejects_unknown_kind(self):
        with pytest.raises(InvalidInputError):
            make_noise("lorentz")

    def test_noise_dimension_must_match(self):
        with pytest.raises(InvalidDimensionError):
            smeared_gaussian(quadrature(0.0).a0, [[0.0]], None, make_noise("gaussian", c=np.eye(2)))

    def test_invalid_gaussian_part(self):
        with pytest.raises(InvalidObservableError):
            smeared_gaussian(-omega_matrix(1), 0.5 * np.eye(2))


class TestSupportProbe:
    def test_vacuum_generated_has_no_zeros(self):
        obs = covariant_fock(number_state(0, BOSONIC_CUTOFF))
        probe = support_probe(obs, COARSE_GRID)
        assert probe.fraction_nonzero == 1.0
        assert probe.hole_radius == 0.0
        assert len(probe.crossing_radii) == 0

    def test_single_photon_zero_circle(self):
        obs = covariant_fock(number_state(1, BOSONIC_CUTOFF))
        probe = support_probe(obs, GRID)
        radii = probe.crossing_radii
        assert len(radii) > 0
        assert np.all(np.abs(radii - np.sqrt(2)) <= GRID.spacing)

    def test_y_set_sample_lies_in_range(self):
        obs = bosonic_from_gaussian(quadrature(0.0))
        probe = support_probe(obs, GridSpec(points=21, half_width=2.0))
        assert probe.y_set_sample.shape == (21, 2)
        np.testing.assert_allclose(probe.y_set_sample[:, 0], 0.0)


class TestVerdict:
    def test_vacuum_generated_is_ic_consistent(self):
        verdict = ic_bosonic_verdict([covariant_fock(number_state(0, BOSONIC_CUTOFF))], GRID)
        assert verdict.verdict == IC_CONSISTENT
        assert verdict.evidence["covered_fraction"] == 1.0

    def test_single_photon_is_ic_consistent(self):
        verdict = ic_bosonic_verdict([covariant_fock(number_state(1, BOSONIC_CUTOFF))], GRID)
        assert verdict.ic_consistent

    def test_fejer_smeared_q_function_is_not_ic(self):
        verdict = ic_bosonic_verdict([_q_with_noise(make_noise("fejer", width=1.0))], GRID)
        assert verdict.verdict == NOT_IC
        assert verdict.evidence["bounded_support"]
        assert verdict.evidence["hole_radius"] >= 2 * GRID.spacing

    def test_complementary_notches(self):
        first = _q_with_noise(make_noise("notch", centers=[[2.0, 0.0]], radius=0.6))
        second = _q_with_noise(make_noise("notch", centers=[[0.0, 2.0]], radius=0.6))
        assert ic_bosonic_verdict([first], GRID).verdict == NOT_IC
        assert ic_bosonic_verdict([second], GRID).verdict == NOT_IC
        pair = ic_bosonic_verdict([first, second], GRID)
        assert pair.verdict == IC_CONSISTENT
        assert pair.evidence["hole_radius"] == 0.0

    def test_single_quadrature_is_not_ic(self):
        verdict = ic_bosonic_verdict([bosonic_from_gaussian(quadrature(0.0))], COARSE_GRID)
        assert verdict.verdict == NOT_IC

    def test_gaussian_q_function_is_ic_consistent(self):
        assert ic_bosonic_verdict([bosonic_from_gaussian(q_function(1))], COARSE_GRID).ic_consistent

    def test_needs_observables(self):
        with pytest.raises(InvalidInputError):
            ic_bosonic_verdict([], GRID)

    def test_strongly_smeared_q_function_is_ic_consistent(self):
        # f₀ is tiny at the grid corners but nowhere zero
        obs = bosonic_from_gaussian(smear(q_function(1), 2 * np.eye(2)))
        verdict = ic_bosonic_verdict([obs], GRID)
        assert verdict.ic_consistent
        assert verdict.evidence["hole_radius"] == 0.0

    def test_agrees_with_gaussian_classification(self, rng):
        for _ in range(50):
            outcome_dim = int(rng.integers(1, 4))
            obs = random_observable(1, outcome_dim, rng, noise=float(rng.uniform(0.3, 2.0)))
            verdict = ic_bosonic_verdict([bosonic_from_gaussian(obs)], COARSE_GRID)
            assert verdict.ic_consistent == classify(obs).informationally_complete


class TestHermitianSymmetry:
    @pytest.mark.parametrize("obs", [
        _q_with_noise(make_noise("gaussian", c=[[0.5, 0.2], [0.2, 0.3]], d=[0.4, -0.1])),
        _q_with_noise(make_noise("fejer", width=1.5)),
        _q_with_noise(make_noise("notch", centers=[[1.0, 0.5]], radius=0.4)),
        smeared_gaussian(quadrature(0.4).a0, [[0.3]], [0.7]),
        covariant_fock(number_state(1, BOSONIC_CUTOFF)),
        covariant_fock(coherent_state([0.5, -0.8], BOSONIC_CUTOFF)),
    ])
    def test_f0_at_minus_p_is_conjugate(self, obs, rng):
        for p in rng.normal(size=(20, obs.outcome_dim)):
            assert f0_eval(obs, -p) == pytest.approx(np.conj(f0_eval(obs, p)), abs=1e-10)
