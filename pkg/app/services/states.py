"""
Gaussian states (m, V).

The covariance uses the anticommutator convention V_ij = tr[ρ{R_i − m_i, R_j − m_j}],
so the vacuum has V = I and the uncertainty relation reads V + iΩ ≥ 0.
Fourier transforms use the kernel e^{+iyᵀx} throughout.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.config import settings
from app.exceptions import InvalidDimensionError, InvalidStateError
from app.services.symplectic import min_hermitian_eigenvalue, modes_of, omega_matrix
from app.utils.helpers import as_matrix, as_vector, frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianState:
    """Validated N-mode Gaussian state; build with make_state"""
    n_modes: int
    m: np.ndarray
    v: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


def make_state(m, v, tol: Optional[float] = None) -> GaussianState:
    """
    Validate and build a Gaussian state

    Args:
        m: Displacement vector in R^{2N}
        v: Symmetric 2N×2N covariance matrix
        tol: Tolerance for symmetry and the uncertainty relation

    Returns:
        GaussianState

    Raises:
        InvalidDimensionError: If shapes are inconsistent
        InvalidStateError: If V is not symmetric or V + iΩ is not PSD
    """
    tol = settings.DEFAULT_TOL if tol is None else tol
    v = as_matrix(v, name="V")
    if v.shape[0] != v.shape[1]:
        raise InvalidDimensionError(f"V must be square, got shape {v.shape}")
    n = modes_of(v.shape[0], "V")
    m = as_vector(m, 2 * n, name="m")

    if max_abs(v - v.T) > tol:
        raise InvalidStateError("Covariance matrix is not symmetric")
    v = (v + v.T) / 2

    lam = min_hermitian_eigenvalue(v + 1j * omega_matrix(n))
    if lam < -tol:
        raise InvalidStateError(
            f"Uncertainty relation V + iΩ ≥ 0 violated (min eigenvalue {lam:.6g})",
            min_eigenvalue=lam,
        )
    return GaussianState(n_modes=n, m=frozen(m), v=frozen(v))


def vacuum(n_modes: int = 1) -> GaussianState:
    return make_state(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def coherent(m) -> GaussianState:
    """Coherent state with displacement m and vacuum covariance"""
    m = as_vector(m, name="m")
    return make_state(m, np.eye(m.shape[0]))


def squeezed_vacuum(r: float, theta: float = 0.0) -> GaussianState:
    """
    Single-mode squeezed vacuum

    For theta = 0 the Q quadrature is squeezed: V = diag(e^{-2r}, e^{2r}).
    """
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    v = rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T
    return make_state(np.zeros(2), v)


def thermal(n_modes: int, nbar: float) -> GaussianState:
    """Thermal state with mean photon number nbar in every mode"""
    return make_state(np.zeros(2 * n_modes), (2 * nbar + 1) * np.eye(2 * n_modes))


def direct_sum(*states: GaussianState) -> GaussianState:
    """Product state ρ⊗σ⊗...: concatenated m, block-diagonal V"""
    if not states:
        raise InvalidDimensionError("direct_sum needs at least one state")
    dim = sum(s.dim for s in states)
    v = np.zeros((dim, dim))
    offset = 0
    for s in states:
        v[offset:offset + s.dim, offset:offset + s.dim] = s.v
        offset += s.dim
    m = np.concatenate([s.m for s in states])
    return make_state(m, v)


def transform_state(state: GaussianState, s, d=None) -> GaussianState:
    """
    Canonical coordinate change x ↦ Sx + d at parameter level

    V ↦ S V Sᵀ and m ↦ S m + d. Validity is preserved when S is symplectic.
    """
    s = as_matrix(s, state.dim, state.dim, name="S")
    d = np.zeros(state.dim) if d is None else as_vector(d, state.dim, name="d")
    return make_state(s @ state.m + d, s @ state.v @ s.T)


def weyl_transform(state: GaussianState, x) -> complex:
    """
    ρ̂(x) = exp(−¼ xᵀ(ΩᵀVΩ)x − i(Ωm)ᵀx)

    Raises:
        InvalidDimensionError: If x does not live in R^{2N}
    """
    x = as_vector(x, state.dim, name="x")
    om = omega_matrix(state.n_modes)
    quad = x @ (om.T @ state.v @ om) @ x
    lin = (om @ state.m) @ x
    return complex(np.exp(-0.25 * quad - 1j * lin))
