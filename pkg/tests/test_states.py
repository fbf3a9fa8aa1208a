import numpy as np
import pytest

from app.exceptions import InvalidDimensionError, InvalidStateError
from app.services.states import (
    coherent,
    direct_sum,
    make_state,
    squeezed_vacuum,
    thermal,
    transform_state,
    vacuum,
    weyl_transform,
)
from app.services.symplectic import omega_matrix
from tests.conftest import random_symplectic


class TestMakeState:
    def test_vacuum_is_valid(self):
        state = vacuum(2)
        np.testing.assert_array_equal(state.v, np.eye(4))
        assert state.n_modes == 2

    def test_below_uncertainty_limit(self):
        with pytest.raises(InvalidStateError) as exc:
            make_state([0, 0], 0.99 * np.eye(2))
        assert exc.value.min_eigenvalue == pytest.approx(-0.01, abs=1e-12)

    def test_non_symmetric(self):
        with pytest.raises(InvalidStateError):
            make_state([0, 0], [[1.0, 0.2], [0.0, 1.0]])

    def test_shape_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            make_state([0, 0, 0], np.eye(2))

    def test_odd_dimension(self):
        with pytest.raises(InvalidDimensionError):
            make_state([0, 0, 0], np.eye(3))

    def test_squeezed_is_pure(self):
        v = squeezed_vacuum(0.7).v
        assert np.linalg.det(v) == pytest.approx(1.0)

    def test_thermal_covariance(self):
        np.testing.assert_allclose(thermal(1, 0.5).v, 2 * np.eye(2))


class TestWeylTransform:
    def test_at_origin(self, single_mode_states):
        for state in single_mode_states:
            assert weyl_transform(state, [0, 0]) == pytest.approx(1.0)

    def test_vacuum(self):
        x = np.array([0.7, -1.1])
        assert weyl_transform(vacuum(1), x) == pytest.approx(np.exp(-0.25 * x @ x))

    def test_coherent_phase(self):
        # |ρ̂(x)| is displacement independent; the phase is −(Ωm)ᵀx
        m = np.array([0.6, -0.4])
        x = np.array([0.3, 0.9])
        value = weyl_transform(coherent(m), x)
        assert abs(value) == pytest.approx(np.exp(-0.25 * x @ x))
        assert np.angle(value) == pytest.approx(-(omega_matrix(1) @ m) @ x)

    def test_hermitian_symmetry(self, single_mode_states):
        x = np.array([0.4, -0.2])
        for state in single_mode_states:
            assert weyl_transform(state, -x) == pytest.approx(np.conj(weyl_transform(state, x)))

    def test_bounded_by_one_on_a_grid(self, single_mode_states, two_mode_state):
        axis = np.linspace(-3.0, 3.0, 13)
        for state in single_mode_states:
            for x in np.array(np.meshgrid(axis, axis)).reshape(2, -1).T:
                assert abs(weyl_transform(state, x)) <= 1.0 + 1e-12
        coarse = np.linspace(-2.0, 2.0, 5)
        for x in np.array(np.meshgrid(*[coarse] * 4)).reshape(4, -1).T:
            assert abs(weyl_transform(two_mode_state, x)) <= 1.0 + 1e-12

    def test_wrong_dimension(self):
        with pytest.raises(InvalidDimensionError):
            weyl_transform(vacuum(1), [1.0, 2.0, 3.0])


class TestTransforms:
    def test_symplectic_preserves_validity(self, two_mode_state, rng):
        s = random_symplectic(2, rng)
        d = rng.normal(size=4)
        out = transform_state(two_mode_state, s, d)
        np.testing.assert_allclose(out.v, s @ two_mode_state.v @ s.T)
        np.testing.assert_allclose(out.m, s @ two_mode_state.m + d)

    def test_direct_sum(self):
        joint = direct_sum(coherent([1.0, 2.0]), thermal(1, 1.0))
        assert joint.n_modes == 2
        np.testing.assert_array_equal(joint.m, [1.0, 2.0, 0.0, 0.0])
        np.testing.assert_array_equal(joint.v, np.diag([1.0, 1.0, 3.0, 3.0]))

    def test_direct_sum_factorizes_weyl_transform(self, single_mode_states):
        a, b = single_mode_states[1], single_mode_states[3]
        x, y = np.array([0.2, -0.5]), np.array([0.7, 0.1])
        joint = weyl_transform(direct_sum(a, b), np.concatenate([x, y]))
        assert joint == pytest.approx(weyl_transform(a, x) * weyl_transform(b, y))

    def test_direct_sum_needs_states(self):
        with pytest.raises(InvalidDimensionError):
            direct_sum()
