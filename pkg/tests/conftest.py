"""Shared fixtures for the test suite."""
import os

import numpy as np
import pytest

os.environ.setdefault("TESTING", "true")

from app.services.observables import q_function, quadrature
from app.services.states import coherent, make_state, squeezed_vacuum, vacuum

# Cutoff for Fock-oracle tests whose phase-space points reach |α|² ≈ 16
BOSONIC_CUTOFF = 60


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def single_mode_states():
    """A few valid one-mode states, including a correlated mixed one"""
    return [
        vacuum(1),
        coherent([0.6, -0.4]),
        squeezed_vacuum(0.4, 0.3),
        make_state([0.1, 0.2], [[2.0, 0.3], [0.3, 1.5]]),
    ]


@pytest.fixture
def two_mode_state():
    v = np.array([
        [1.5, 0.2, 0.4, 0.0],
        [0.2, 1.2, 0.0, -0.3],
        [0.4, 0.0, 1.8, 0.1],
        [0.0, -0.3, 0.1, 1.3],
    ])
    return make_state([0.3, -0.2, 0.5, 0.1], v)


@pytest.fixture
def three_quadratures():
    return [quadrature(0.0), quadrature(np.pi / 3), quadrature(2 * np.pi / 3)]


@pytest.fixture
def q_obs():
    return q_function(1)


def random_symplectic(n_modes: int, rng: np.random.Generator) -> np.ndarray:
    """exp(ΩH) for a random symmetric H is symplectic"""
    from scipy.linalg import expm

    from app.services.symplectic import omega_matrix

    h = rng.normal(size=(2 * n_modes, 2 * n_modes)) * 0.3
    h = (h + h.T) / 2
    return expm(omega_matrix(n_modes) @ h)


def random_state(n_modes: int, rng: np.random.Generator):
    """Symplectic image of a product of thermal modes, randomly displaced"""
    from app.services.states import transform_state

    nu = 1.0 + rng.exponential(0.8, size=n_modes)
    base = make_state(np.zeros(2 * n_modes), np.diag(np.repeat(nu, 2)))
    return transform_state(base, random_symplectic(n_modes, rng), rng.normal(size=2 * n_modes))


def random_observable(n_modes: int, outcome_dim: int, rng: np.random.Generator, noise: float = 0.3):
    """
    Random valid observable: B₀ = |iA₀ᵀΩA₀| + GGᵀ sits above the positivity bound,
    strictly when noise > 0
    """
    from app.services.observables import make_observable
    from app.services.symplectic import omega_matrix

    a0 = rng.normal(size=(2 * n_modes, outcome_dim))
    k = a0.T @ omega_matrix(n_modes) @ a0
    eigvals, eigvecs = np.linalg.eigh(k.T @ k)
    floor = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.T
    g = rng.normal(size=(outcome_dim, outcome_dim)) * noise
    return make_observable(a0, floor + g @ g.T, rng.normal(size=outcome_dim))
