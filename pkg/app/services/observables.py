"""
Gaussian observables (A₀, B₀, v₀) with characteristic function

    Ê(p) = W(A₀p) exp(−¼ pᵀB₀p − iv₀ᵀp),    B₀ − iA₀ᵀΩA₀ ≥ 0.

Outcome spaces of any dimension M are allowed, including odd M; this is
broader than definitions that require a symplectic (even-dimensional)
outcome space.

Outcome laws are reported as GaussianDistribution in the standard probability
convention φ(p) = exp(iμᵀp − ½pᵀΣp). The smearing convention
μ̂(p) = exp(−¼pᵀCp − idᵀp) maps to it through C = 2Σ, d = −μ.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.linalg import orth

from app.config import settings
from app.exceptions import (
    ConsistencyError,
    DecompositionError,
    InvalidDimensionError,
    InvalidInputError,
    InvalidNoiseError,
    InvalidObservableError,
    NotInformationallyCompleteError,
)
from app.services.states import GaussianState, weyl_transform
from app.services.symplectic import (
    ValidationResult,
    is_symplectic,
    modes_of,
    numerical_rank,
    omega_matrix,
    psd_check,
    psd_diagnostic,
    williamson,
)
from app.utils.helpers import as_matrix, as_vector, frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianObservable:
    n_modes: int
    outcome_dim: int
    a0: np.ndarray
    b0: np.ndarray
    v0: np.ndarray


@dataclass(frozen=True)
class GaussianDistribution:
    """Multivariate normal law N(mean, cov)"""
    mean: np.ndarray
    cov: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def characteristic(self, p) -> complex:
        p = as_vector(p, self.dim, name="p")
        return complex(np.exp(1j * self.mean @ p - 0.5 * p @ self.cov @ p))

    def smearing_parameters(self) -> Tuple[np.ndarray, np.ndarray]:
        """(C, d) with characteristic function exp(−¼pᵀCp − idᵀp)"""
        return 2 * self.cov, -self.mean


@dataclass(frozen=True)
class Classification:
    commutative: bool
    sharp: bool
    covariant: bool
    informationally_complete: bool

    def as_dict(self) -> Dict[str, bool]:
        return {
            "commutative": self.commutative,
            "sharp": self.sharp,
            "covariant": self.covariant,
            "ic": self.informationally_complete,
        }


@dataclass(frozen=True)
class CovariantDecomposition:
    """
    E = S(μ∗E^Q)_P: postprocessing P of the canonical transform by S⁻¹ of a
    Gaussian smearing μ = (noise_c, noise_d) of the Q-function
    """
    p: np.ndarray
    s: np.ndarray
    noise_c: np.ndarray
    noise_d: np.ndarray
    betas: Tuple[float, ...]

    @property
    def n_modes(self) -> int:
        return self.s.shape[0] // 2

    def recompose(self) -> GaussianObservable:
        smeared_q = smear(q_function(self.n_modes), self.noise_c, self.noise_d)
        covariant = transform_covariant(smeared_q, np.linalg.inv(self.s), check=False)
        return linear_postprocess(covariant, self.p)


def _tol(tol: Optional[float]) -> float:
    return settings.DEFAULT_TOL if tol is None else float(tol)


def make_observable(a0, b0, v0=None, tol: Optional[float] = None) -> GaussianObservable:
    """
    Build an observable after shape and symmetry checks

    A one-dimensional ``a0`` is read as a single column (M = 1). Positivity is
    checked by validate_observable.

    Raises:
        InvalidDimensionError: If shapes are inconsistent
        InvalidInputError: If B₀ is not symmetric within tol
    """
    a0 = np.asarray(a0, dtype=float)
    if a0.ndim == 1:
        a0 = a0.reshape(-1, 1)
    a0 = as_matrix(a0, name="A0")
    n = modes_of(a0.shape[0], "A0 rows")
    m = a0.shape[1]
    if m < 1:
        raise InvalidDimensionError("Outcome dimension must be at least 1")
    b0 = as_matrix(np.atleast_2d(np.asarray(b0, dtype=float)), m, m, name="B0")
    v0 = np.zeros(m) if v0 is None else as_vector(v0, m, name="v0")
    if max_abs(b0 - b0.T) > _tol(tol):
        raise InvalidInputError("B0 must be symmetric")
    b0 = (b0 + b0.T) / 2
    return GaussianObservable(n_modes=n, outcome_dim=m, a0=frozen(a0), b0=frozen(b0), v0=frozen(v0))


def make_distribution(mean, cov, tol: Optional[float] = None) -> GaussianDistribution:
    """
    Raises:
        InvalidNoiseError: If cov is not symmetric positive semidefinite
    """
    mean = as_vector(mean, name="mean")
    cov = as_matrix(np.atleast_2d(np.asarray(cov, dtype=float)), mean.shape[0], mean.shape[0], name="cov")
    if max_abs(cov - cov.T) > _tol(tol) or not psd_check(cov, tol):
        raise InvalidNoiseError("Covariance must be symmetric positive semidefinite")
    return GaussianDistribution(mean=frozen(mean), cov=frozen((cov + cov.T) / 2))


def validate_observable(obs: GaussianObservable, tol: Optional[float] = None,
                        raise_on_invalid: bool = False) -> ValidationResult:
    """B₀ − iA₀ᵀΩ_N A₀ ≥ 0"""
    if obs.a0.shape != (2 * obs.n_modes, obs.outcome_dim):
        raise InvalidDimensionError(f"A0 has shape {obs.a0.shape}, expected {(2 * obs.n_modes, obs.outcome_dim)}")
    om = omega_matrix(obs.n_modes)
    result = psd_diagnostic(obs.b0 - 1j * (obs.a0.T @ om @ obs.a0), tol, label="B0 − iA0ᵀΩA0")
    if raise_on_invalid and not result:
        raise InvalidObservableError(result.message, min_eigenvalue=result.min_eigenvalue)
    return result


def q_function(n_modes: int = 1) -> GaussianObservable:
    """The covariant observable (−Ω_N, I, 0)"""
    return make_observable(-omega_matrix(n_modes), np.eye(2 * n_modes), np.zeros(2 * n_modes))


def quadrature(theta: float = 0.0, r: float = 0.0, n_modes: int = 1, mode: int = 0) -> GaussianObservable:
    """
    Sharp (squeezed) rotated quadrature e^{r}cosθ Q + e^{-r}sinθ P of one mode

    Its direction vector is (−e^{−r} sinθ, e^{r} cosθ) on the chosen mode.
    """
    if not 0 <= mode < n_modes:
        raise InvalidDimensionError(f"mode {mode} out of range for {n_modes} modes")
    a0 = np.zeros((2 * n_modes, 1))
    a0[2 * mode, 0] = -np.exp(-r) * np.sin(theta)
    a0[2 * mode + 1, 0] = np.exp(r) * np.cos(theta)
    return make_observable(a0, np.zeros((1, 1)), np.zeros(1))


def covariant_observable(b0, v0=None) -> GaussianObservable:
    b0 = as_matrix(b0, name="B0")
    n = modes_of(b0.shape[0], "B0")
    return make_observable(-omega_matrix(n), b0, v0)


def characteristic_function(obs: GaussianObservable, state: GaussianState, p) -> complex:
    """Analytic ρ̂(A₀p)·exp(−¼pᵀB₀p − iv₀ᵀp)"""
    if state.n_modes != obs.n_modes:
        raise InvalidDimensionError(f"Observable acts on {obs.n_modes} modes, state has {state.n_modes}")
    p = as_vector(p, obs.outcome_dim, name="p")
    gaussian = np.exp(-0.25 * p @ obs.b0 @ p - 1j * obs.v0 @ p)
    return complex(weyl_transform(state, obs.a0 @ p) * gaussian)


def pushforward(obs: GaussianObservable, state: GaussianState) -> GaussianDistribution:
    """
    Outcome law of ``obs`` in ``state``

    Matching exp(iμᵀp − ½pᵀΣp) against the characteristic function gives
        Σ = ½ (A₀ᵀΩᵀVΩA₀ + B₀),   μ = −A₀ᵀΩm − v₀.
    """
    if state.n_modes != obs.n_modes:
        raise InvalidDimensionError(f"Observable acts on {obs.n_modes} modes, state has {state.n_modes}")
    om = omega_matrix(obs.n_modes)
    cov = 0.5 * (obs.a0.T @ om.T @ state.v @ om @ obs.a0 + obs.b0)
    mean = -obs.a0.T @ om @ state.m - obs.v0
    return GaussianDistribution(mean=frozen(mean), cov=frozen((cov + cov.T) / 2))


def classify(obs: GaussianObservable, tol: Optional[float] = None) -> Classification:
    """
    Commutative iff A₀ᵀΩA₀ = 0; sharp iff also B₀ = 0; covariant iff
    A₀ = −Ω_N (only possible for M = 2N); IC iff rank A₀ = 2N.
    """
    tol = _tol(tol)
    om = omega_matrix(obs.n_modes)
    commutative = max_abs(obs.a0.T @ om @ obs.a0) <= tol
    sharp = commutative and max_abs(obs.b0) <= tol
    covariant = obs.outcome_dim == 2 * obs.n_modes and max_abs(obs.a0 + om) <= tol
    ic = numerical_rank(obs.a0, tol) == 2 * obs.n_modes
    return Classification(commutative=commutative, sharp=sharp, covariant=covariant, informationally_complete=ic)


def linear_postprocess(obs: GaussianObservable, p) -> GaussianObservable:
    """Outcomes pushed through y ↦ Py: (A₀Pᵀ, PB₀Pᵀ, Pv₀)"""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    p = as_matrix(p, cols=obs.outcome_dim, name="P")
    return make_observable(obs.a0 @ p.T, p @ obs.b0 @ p.T, p @ obs.v0)


def smear(obs: GaussianObservable, c, d=None, tol: Optional[float] = None) -> GaussianObservable:
    """
    Convolution with the Gaussian measure μ̂(p) = exp(−¼pᵀCp − idᵀp)

    Singular C is allowed.

    Raises:
        InvalidNoiseError: If C is not symmetric PSD
    """
    c = as_matrix(np.atleast_2d(np.asarray(c, dtype=float)), obs.outcome_dim, obs.outcome_dim, name="C")
    d = np.zeros(obs.outcome_dim) if d is None else as_vector(d, obs.outcome_dim, name="d")
    if max_abs(c - c.T) > _tol(tol) or not psd_check(c, tol):
        raise InvalidNoiseError("Smearing covariance must be symmetric positive semidefinite")
    return make_observable(obs.a0, obs.b0 + c, obs.v0 + d)


def smear_with_distribution(obs: GaussianObservable, dist: GaussianDistribution) -> GaussianObservable:
    c, d = dist.smearing_parameters()
    return smear(obs, c, d)


def marginal_direction(obs: GaussianObservable, p) -> np.ndarray:
    """
    Direction a = A₀Pᵀ of the generalized quadrature smeared by the marginal
    E_P of a phase-space observable
    """
    if obs.outcome_dim != 2 * obs.n_modes:
        raise InvalidDimensionError("Marginals are defined for phase-space observables (M = 2N)")
    p = as_vector(np.ravel(p), obs.outcome_dim, name="P")
    return obs.a0 @ p


def transform_covariant(obs: GaussianObservable, s, check: bool = True) -> GaussianObservable:
    """
    Canonical coordinate change of a covariant observable: (−Ω, SB₀Sᵀ, Sv₀)

    Raises:
        InvalidInputError: If obs is not covariant or S is not symplectic
    """
    s = as_matrix(s, 2 * obs.n_modes, 2 * obs.n_modes, name="S")
    if check:
        if not classify(obs).covariant:
            raise InvalidInputError("Canonical transformation applies to covariant observables")
        if not is_symplectic(s, 1e-8):
            raise InvalidInputError("S is not symplectic")
    b0 = s @ obs.b0 @ s.T
    return make_observable(obs.a0, (b0 + b0.T) / 2, s @ obs.v0)


def decompose_covariant(obs: GaussianObservable, tol: Optional[float] = None) -> CovariantDecomposition:
    """
    Write an informationally complete observable as S(μ∗E^Q)_P

    P = −A₀ᵀΩ, B₀ᶜᵒᵛ = P⁻¹B₀P⁻ᵀ, v₀ᶜᵒᵛ = P⁻¹v₀; Williamson gives
    S B₀ᶜᵒᵛ Sᵀ = ⊕β_k I with β_k ≥ 1, and μ has smearing parameters
    (⊕(β_k − 1)I, S v₀ᶜᵒᵛ).

    Raises:
        NotInformationallyCompleteError: If M ≠ 2N or rank A₀ < 2N
        ConsistencyError: If some β_k < 1 − tol
    """
    tol = _tol(tol)
    n = obs.n_modes
    if obs.outcome_dim != 2 * n or numerical_rank(obs.a0, tol) != 2 * n:
        raise NotInformationallyCompleteError(
            f"Covariant decomposition needs an IC observable with M = 2N (rank A0 = {numerical_rank(obs.a0, tol)}, 2N = {2 * n})"
        )
    om = omega_matrix(n)
    p = -obs.a0.T @ om
    p_inv = np.linalg.inv(p)
    b_cov = p_inv @ obs.b0 @ p_inv.T
    b_cov = (b_cov + b_cov.T) / 2
    v_cov = p_inv @ obs.v0

    try:
        normal = williamson(b_cov, tol)
    except DecompositionError as exc:
        raise ConsistencyError(f"Covariant part is not positive definite: {exc}") from exc

    if normal.betas[-1] < 1 - tol:
        raise ConsistencyError(
            f"Symplectic eigenvalue {normal.betas[-1]:.12g} < 1 contradicts B0 − iA0ᵀΩA0 ≥ 0"
        )
    noise_c = np.kron(np.diag([beta - 1 for beta in normal.betas]), np.eye(2))
    noise_d = normal.s @ v_cov
    logger.info(f"Covariant decomposition: N={n}, betas={normal.betas}")
    return CovariantDecomposition(
        p=frozen(p),
        s=normal.s,
        noise_c=frozen(noise_c),
        noise_d=frozen(noise_d),
        betas=normal.betas,
    )


def sharp_smearing_split(obs: GaussianObservable,
                         tol: Optional[float] = None) -> Tuple[GaussianObservable, GaussianDistribution]:
    """
    Split a commutative observable as E = μ∗Q_{A₀}

    Returns the sharp observable (A₀, 0, 0) and μ with smearing parameters
    (B₀, v₀), i.e. Σ = B₀/2, mean −v₀.
    """
    if not classify(obs, tol).commutative:
        raise InvalidInputError("Only commutative observables are smearings of sharp ones")
    sharp = make_observable(obs.a0, np.zeros_like(obs.b0), np.zeros(obs.outcome_dim))
    return sharp, make_distribution(-obs.v0, obs.b0 / 2, tol)


def observable_for_subspace(basis) -> GaussianObservable:
    """
    Gaussian observable whose reachable subspace X_E = {A₀p} is span(basis)

    A₀ is an orthonormal basis of the span and B₀ = ‖A₀ᵀΩA₀‖₂ I, which
    satisfies the positivity condition.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis.reshape(-1, 1)
    modes_of(basis.shape[0], "basis rows")
    a0 = orth(basis)
    if a0.shape[1] == 0:
        raise InvalidInputError("Subspace must be nonzero")
    n = basis.shape[0] // 2
    norm = np.linalg.norm(a0.T @ omega_matrix(n) @ a0, 2)
    m = a0.shape[1]
    return make_observable(a0, norm * np.eye(m), np.zeros(m))


def sample_outcomes(dist: GaussianDistribution, n_samples: int, seed=None) -> np.ndarray:
    """Draw n_samples outcomes (rows) from dist; seed is anything default_rng accepts"""
    rng = np.random.default_rng(seed)
    return rng.multivariate_normal(dist.mean, dist.cov, size=int(n_samples), method="eigh")


def estimate_distribution(samples) -> GaussianDistribution:
    """Sample mean and unbiased sample covariance"""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples.reshape(-1, 1)
    if samples.shape[0] < 2:
        raise InvalidInputError("Need at least two samples to estimate a covariance")
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False))
    return make_distribution(mean, cov, tol=1e-12)
