"""
Single-mode truncated Fock-basis oracle.

Operators live on span{|0⟩, ..., |D−1⟩}. The truncated generator
−i(x₁P − x₂Q) is anti-Hermitian, so the truncated W(x) is exactly unitary;
truncation only shows up as disagreement with the untruncated operator near
the top of the basis. Every trace reports the weight of W(x)ρW(x)† in the
top 10% of the basis and warns when it exceeds the configured threshold.
"""
import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.special import gammaln

from app.config import settings
from app.exceptions import InvalidDimensionError, InvalidStateError, TruncationWarning
from app.services.observables import (
    GaussianObservable,
    characteristic_function,
    q_function,
    quadrature,
    smear,
)
from app.services.states import GaussianState, coherent, squeezed_vacuum, vacuum, weyl_transform
from app.services.symplectic import min_hermitian_eigenvalue, omega_matrix
from app.utils.helpers import as_vector, frozen

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FockOperator:
    cutoff: int
    matrix: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def truncation_weight(self) -> float:
        """Diagonal weight in the top 10% of the basis"""
        return _top_weight(self.matrix)


@dataclass(frozen=True)
class OracleCheckReport:
    rows: Tuple[Dict[str, object], ...]
    cutoff: int

    @property
    def max_error(self) -> float:
        return max((row["max_error"] for row in self.rows), default=0.0)


def _cutoff(cutoff: Optional[int]) -> int:
    cutoff = settings.FOCK_CUTOFF if cutoff is None else int(cutoff)
    if cutoff < 2:
        raise InvalidDimensionError(f"Fock cutoff must be at least 2, got {cutoff}")
    return cutoff


def _top_weight(matrix: np.ndarray) -> float:
    d = matrix.shape[0]
    top = max(1, d // 10)
    return float(np.real(np.trace(matrix[d - top:, d - top:])))


def ladder_ops(cutoff: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Truncated (a, a†, Q, P) with Q = (a† + a)/√2 and P = i(a† − a)/√2

    [Q, P] = iI except in the last diagonal entry, where truncation gives
    −i(D − 1).
    """
    if int(cutoff) < 2:
        raise InvalidDimensionError(f"Fock cutoff must be at least 2, got {cutoff}")
    a = np.diag(np.sqrt(np.arange(1, int(cutoff), dtype=float)), 1).astype(complex)
    adag = a.conj().T
    q = (adag + a) / np.sqrt(2)
    p = 1j * (adag - a) / np.sqrt(2)
    return a, adag, q, p


@lru_cache(maxsize=8)
def _q_spectrum(cutoff: int) -> Tuple[np.ndarray, np.ndarray]:
    _, _, q, _ = ladder_ops(cutoff)
    eigvals, eigvecs = eigh(np.real(q))
    return frozen(eigvals), frozen(eigvecs)


def _phases(phi: float, cutoff: int) -> np.ndarray:
    return np.exp(1j * phi * np.arange(cutoff))


@lru_cache(maxsize=256)
def _weyl_cached(x1: float, x2: float, cutoff: int) -> np.ndarray:
    # x₁P − x₂Q = −|x| U†QU with U = exp(iφN), φ = atan2(x₁, x₂)
    radius = np.hypot(x1, x2)
    phi = np.arctan2(x1, x2)
    eigvals, eigvecs = _q_spectrum(cutoff)
    rotated = (eigvecs * np.exp(1j * radius * eigvals)) @ eigvecs.T
    u = _phases(phi, cutoff)
    return frozen(u.conj()[:, None] * rotated * u[None, :], dtype=complex)


def fock_weyl_matrix(x, cutoff: Optional[int] = None) -> np.ndarray:
    """
    Truncated W(x) = exp(−i(x₁P − x₂Q)), read-only

    Equal to scipy.linalg.expm of the truncated generator; computed from the
    spectrum of the truncated Q and a diagonal phase rotation.
    """
    x = as_vector(x, 2, name="x")
    return _weyl_cached(float(x[0]), float(x[1]), _cutoff(cutoff))


def make_density(matrix, tol: float = 1e-10) -> FockOperator:
    """
    Raises:
        InvalidStateError: If the matrix is not Hermitian PSD with unit trace
    """
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidDimensionError(f"Density matrix must be square, got shape {matrix.shape}")
    _cutoff(matrix.shape[0])
    if np.max(np.abs(matrix - matrix.conj().T)) > tol:
        raise InvalidStateError("Density matrix is not Hermitian")
    lam = min_hermitian_eigenvalue(matrix)
    if lam < -tol:
        raise InvalidStateError(f"Density matrix is not positive (min eigenvalue {lam:.3e})", min_eigenvalue=lam)
    trace = np.trace(matrix)
    if abs(trace - 1) > tol:
        raise InvalidStateError(f"Density matrix trace {trace.real:.12g} differs from 1")
    rho = FockOperator(cutoff=matrix.shape[0], matrix=frozen(matrix, dtype=complex))
    if rho.truncation_weight > settings.TRUNCATION_WARN_THRESHOLD:
        logger.warning(f"Density matrix has weight {rho.truncation_weight:.3e} in the top of the basis")
    return rho


def _pure(amplitudes: np.ndarray) -> FockOperator:
    psi = amplitudes / np.linalg.norm(amplitudes)
    return FockOperator(cutoff=psi.shape[0], matrix=frozen(np.outer(psi, psi.conj()), dtype=complex))


def number_state(n: int, cutoff: Optional[int] = None) -> FockOperator:
    cutoff = _cutoff(cutoff)
    if not 0 <= n < cutoff:
        raise InvalidDimensionError(f"Number state |{n}⟩ outside a cutoff of {cutoff}")
    psi = np.zeros(cutoff, dtype=complex)
    psi[n] = 1
    return _pure(psi)


def vacuum_state(cutoff: Optional[int] = None) -> FockOperator:
    return number_state(0, cutoff)


def coherent_state(m, cutoff: Optional[int] = None) -> FockOperator:
    """|α⟩ with α = (m₁ + i m₂)/√2, i.e. the state W(m)|0⟩ with displacement m"""
    cutoff = _cutoff(cutoff)
    m = as_vector(m, 2, name="m")
    alpha = (m[0] + 1j * m[1]) / np.sqrt(2)
    n = np.arange(cutoff)
    log_norm = -0.5 * abs(alpha) ** 2 - 0.5 * gammaln(n + 1)
    psi = np.exp(log_norm) * np.power(alpha, n)
    return _pure(psi)


def squeezed_state(r: float, cutoff: Optional[int] = None) -> FockOperator:
    """Squeezed vacuum with V = diag(e^{−2r}, e^{2r})"""
    cutoff = _cutoff(cutoff)
    psi = np.zeros(cutoff, dtype=complex)
    k = np.arange((cutoff + 1) // 2)
    t = -np.tanh(r)
    log_mag = 0.5 * gammaln(2 * k + 1) - k * np.log(2) - gammaln(k + 1)
    psi[2 * k] = np.exp(log_mag) * np.power(t, k) / np.sqrt(np.cosh(r))
    return _pure(psi)


def truncation_diagnostic(rho: FockOperator, x) -> float:
    """Weight of W(x)ρW(x)† in the top 10% of the basis"""
    w = fock_weyl_matrix(x, rho.cutoff)
    return _top_weight(w @ rho.matrix @ w.conj().T)


def oracle_weyl_transform(rho: FockOperator, x, diagnose: bool = True) -> complex:
    """
    tr[ρW(x)]

    Emits TruncationWarning when the displaced state leaks into the top of
    the basis beyond TRUNCATION_WARN_THRESHOLD.
    """
    w = fock_weyl_matrix(x, rho.cutoff)
    if diagnose:
        weight = truncation_diagnostic(rho, x)
        if weight > settings.TRUNCATION_WARN_THRESHOLD:
            message = f"Truncation weight {weight:.3e} at x={np.asarray(x).tolist()} with cutoff {rho.cutoff}"
            logger.warning(message)
            warnings.warn(message, TruncationWarning, stacklevel=2)
    return complex(np.sum(rho.matrix * w.T))


def oracle_weyl_grid(rho: FockOperator, points, diagnose: bool = True) -> np.ndarray:
    """
    tr[ρW(x)] for every row x of ``points``, without forming W(x)

    With ρ = Σ_j w_j|ψ_j⟩⟨ψ_j| and c = Eᵀ(U ψ_j), ⟨ψ_j|W(x)|ψ_j⟩ = Σ_k |c_k|² e^{i|x|λ_k}.
    The truncation diagnostic uses |W(x)ψ_j| = |E(e^{i|x|λ} ⊙ c)|.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 2:
        raise InvalidDimensionError(f"Phase-space points must have 2 coordinates, got {points.shape[1]}")
    eigvals, eigvecs = _q_spectrum(rho.cutoff)
    weights, vectors = eigh(rho.matrix)
    keep = weights > 1e-14
    weights, vectors = weights[keep], vectors[:, keep]

    radius = np.hypot(points[:, 0], points[:, 1])
    phases = np.exp(1j * np.outer(np.arctan2(points[:, 0], points[:, 1]), np.arange(rho.cutoff)))
    spectral = np.exp(1j * np.outer(radius, eigvals))
    top = max(1, rho.cutoff // 10)

    values = np.zeros(points.shape[0], dtype=complex)
    leak = np.zeros(points.shape[0])
    for weight, psi in zip(weights, vectors.T):
        c = (phases * psi[None, :]) @ eigvecs
        values += weight * np.sum(np.abs(c) ** 2 * spectral, axis=1)
        if diagnose:
            displaced = (spectral * c) @ eigvecs.T
            leak += weight * np.sum(np.abs(displaced[:, -top:]) ** 2, axis=1)

    if diagnose and points.shape[0] and leak.max() > settings.TRUNCATION_WARN_THRESHOLD:
        worst = int(np.argmax(leak))
        message = (
            f"Truncation weight {leak[worst]:.3e} at x={points[worst].tolist()} with cutoff {rho.cutoff} "
            f"({int(np.sum(leak > settings.TRUNCATION_WARN_THRESHOLD))} points above threshold)"
        )
        logger.warning(message)
        warnings.warn(message, TruncationWarning, stacklevel=2)
    return values


def oracle_pushforward_char(obs: GaussianObservable, rho: FockOperator, p, diagnose: bool = True) -> complex:
    """tr[ρW(A₀p)]·exp(−¼pᵀB₀p − iv₀ᵀp) for a single-mode observable"""
    if obs.n_modes != 1:
        raise InvalidDimensionError("The Fock oracle is single-mode")
    p = as_vector(p, obs.outcome_dim, name="p")
    gaussian = np.exp(-0.25 * p @ obs.b0 @ p - 1j * obs.v0 @ p)
    return complex(oracle_weyl_transform(rho, obs.a0 @ p, diagnose) * gaussian)


def weyl_relation_defect(x, y, cutoff: Optional[int] = None, block: Optional[int] = None) -> float:
    """
    max |W(x)W(y) − e^{−(i/2)xᵀΩy} W(x+y)| over the leading ``block`` basis states

    The default block is a quarter of the cutoff, where truncation effects of
    a product of two displacements are negligible for moderate arguments.
    """
    cutoff = _cutoff(cutoff)
    block = max(1, cutoff // 4) if block is None else int(block)
    x = as_vector(x, 2, name="x")
    y = as_vector(y, 2, name="y")
    lhs = fock_weyl_matrix(x, cutoff) @ fock_weyl_matrix(y, cutoff)
    rhs = np.exp(-0.5j * x @ omega_matrix(1) @ y) * fock_weyl_matrix(x + y, cutoff)
    return float(np.max(np.abs((lhs - rhs)[:block, :block])))


def standard_grid(half_width: float = 1.75, points: int = 5, radius: float = 2.5) -> np.ndarray:
    """Square grid of phase-space points, clipped to ‖x‖ ≤ radius"""
    axis = np.linspace(-half_width, half_width, points)
    grid = np.array([(a, b) for a in axis for b in axis])
    return grid[np.linalg.norm(grid, axis=1) <= radius]


def standard_fixtures(cutoff: Optional[int] = None) -> List[Tuple[str, GaussianState, FockOperator]]:
    """Vacuum, coherent and squeezed states in both representations"""
    cutoff = _cutoff(cutoff)
    m = np.array([0.6, -0.4])
    return [
        ("vacuum", vacuum(1), vacuum_state(cutoff)),
        ("coherent", coherent(m), coherent_state(m, cutoff)),
        ("squeezed", squeezed_vacuum(0.4), squeezed_state(0.4, cutoff)),
    ]


def standard_observables() -> List[Tuple[str, GaussianObservable]]:
    return [
        ("q_function", q_function(1)),
        ("quadrature_0", quadrature(0.0)),
        ("quadrature_pi_3", quadrature(np.pi / 3)),
        ("quadrature_2pi_3", quadrature(2 * np.pi / 3)),
        ("smeared_quadrature", smear(quadrature(0.0), [[0.5]], [0.2])),
    ]


def _outcome_grid(obs: GaussianObservable, grid: np.ndarray, radius: float) -> List[np.ndarray]:
    if obs.outcome_dim == 2:
        points = list(grid)
    else:
        points = [np.array([t]) for t in np.linspace(-radius, radius, 11)]
    scale = max(np.linalg.norm(obs.a0, 2), 1.0)
    return [p / scale for p in points]


def oracle_check(fixtures: Optional[Sequence[Tuple[str, GaussianState, FockOperator]]] = None,
                 observables: Optional[Sequence[Tuple[str, GaussianObservable]]] = None,
                 cutoff: Optional[int] = None, radius: float = 2.5) -> OracleCheckReport:
    """
    Compare analytic characteristic functions with the oracle

    One row per state (Weyl transform on the grid) and per (state, observable)
    pair (pushforward characteristic function on the outcome grid).
    """
    cutoff = _cutoff(cutoff)
    fixtures = standard_fixtures(cutoff) if fixtures is None else fixtures
    observables = standard_observables() if observables is None else observables
    grid = standard_grid(radius=radius)
    rows = []
    for state_name, state, rho in fixtures:
        error = max(abs(weyl_transform(state, x) - oracle_weyl_transform(rho, x)) for x in grid)
        rows.append({"state": state_name, "observable": None, "max_error": float(error)})
        for obs_name, obs in observables:
            error = max(
                abs(characteristic_function(obs, state, p) - oracle_pushforward_char(obs, rho, p))
                for p in _outcome_grid(obs, grid, radius)
            )
            rows.append({"state": state_name, "observable": obs_name, "max_error": float(error)})
    report = OracleCheckReport(rows=tuple(rows), cutoff=cutoff)
    logger.info(f"Oracle check at cutoff {cutoff}: max error {report.max_error:.3e} over {len(rows)} rows")
    return report
