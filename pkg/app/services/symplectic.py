"""
Symplectic linear algebra shared by every validity condition.

Phase-space coordinates are ordered (q1, p1, ..., qN, pN) and the symplectic
form is the block-diagonal Ω_N with blocks [[0, 1], [-1, 0]].
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, eigh, eigvalsh, schur

from app.config import settings
from app.exceptions import DecompositionError, InvalidDimensionError, InvalidInputError
from app.utils.helpers import as_matrix, frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)

_OMEGA_BLOCK = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class SymplecticForm:
    """The standard symplectic form Ω_N on R^{2N}"""
    n_modes: int
    matrix: np.ndarray


@dataclass(frozen=True)
class WilliamsonResult:
    """Symplectic S and descending symplectic eigenvalues with S·B·Sᵀ = ⊕ β_k I₂"""
    s: np.ndarray
    betas: Tuple[float, ...]

    @property
    def normal_form(self) -> np.ndarray:
        return np.kron(np.diag(self.betas), np.eye(2))


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of a positivity check; truthy iff the check passed"""
    valid: bool
    min_eigenvalue: float
    message: str = ""

    def __bool__(self) -> bool:
        return self.valid


def _tol(tol: Optional[float]) -> float:
    return settings.DEFAULT_TOL if tol is None else float(tol)


@lru_cache(maxsize=32)
def omega(n_modes: int) -> SymplecticForm:
    """
    Build the symplectic form Ω_N

    Args:
        n_modes: Number of modes N ≥ 1

    Returns:
        SymplecticForm with the 2N×2N matrix

    Raises:
        InvalidDimensionError: If n_modes < 1
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise InvalidDimensionError(f"Number of modes must be a positive integer, got {n_modes}")
    matrix = frozen(np.kron(np.eye(int(n_modes)), _OMEGA_BLOCK))
    return SymplecticForm(n_modes=int(n_modes), matrix=matrix)


def omega_matrix(n_modes: int) -> np.ndarray:
    return omega(n_modes).matrix


def modes_of(dim: int, name: str = "matrix") -> int:
    """Number of modes for a phase-space dimension; rejects odd dimensions"""
    if dim <= 0 or dim % 2 != 0:
        raise InvalidDimensionError(f"{name} dimension must be even and positive, got {dim}")
    return dim // 2


def is_symplectic(s, tol: Optional[float] = None) -> bool:
    """True iff ‖SᵀΩS − Ω‖_max ≤ tol"""
    s = as_matrix(s, name="S")
    if s.shape[0] != s.shape[1]:
        raise InvalidDimensionError(f"S must be square, got shape {s.shape}")
    n = modes_of(s.shape[0], "S")
    om = omega_matrix(n)
    return max_abs(s.T @ om @ s - om) <= _tol(tol)


def min_hermitian_eigenvalue(m) -> float:
    """Smallest eigenvalue of the Hermitian part (m + m†)/2"""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidDimensionError(f"PSD check needs a square matrix, got shape {m.shape}")
    if m.size == 0:
        return float("inf")
    hermitian = (m + m.conj().T) / 2
    return float(eigvalsh(hermitian)[0])


def psd_check(m, tol: Optional[float] = None) -> bool:
    """
    Tolerance-aware positive semidefiniteness of the Hermitian part of ``m``

    Boundary cases (minimum eigenvalue exactly zero, as for the vacuum or the
    Q-function) pass.
    """
    return min_hermitian_eigenvalue(m) >= -_tol(tol)


def psd_diagnostic(m, tol: Optional[float] = None, label: str = "matrix") -> ValidationResult:
    """psd_check with the minimum eigenvalue and a message attached"""
    lam = min_hermitian_eigenvalue(m)
    valid = lam >= -_tol(tol)
    message = "ok" if valid else f"{label} not positive semidefinite (min eigenvalue {lam:.3e})"
    return ValidationResult(valid=valid, min_eigenvalue=lam, message=message)


def williamson(b, tol: Optional[float] = None) -> WilliamsonResult:
    """
    Williamson normal form of a real symmetric positive-definite matrix

    Uses the real Schur form of B^{-1/2} Ω B^{-1/2}; each 2×2 block carries
    1/β_k. The returned S satisfies S B Sᵀ = ⊕ β_k I₂ and SᵀΩS = Ω. S is
    unique only up to symplectic orthogonal factors.

    Args:
        b: 2N×2N symmetric positive-definite matrix
        tol: Symmetry tolerance

    Returns:
        WilliamsonResult with betas sorted descending

    Raises:
        InvalidInputError: If b is not symmetric within tol
        DecompositionError: If b is not positive definite
    """
    tol = _tol(tol)
    b = as_matrix(b, name="B")
    if b.shape[0] != b.shape[1]:
        raise InvalidDimensionError(f"B must be square, got shape {b.shape}")
    n = modes_of(b.shape[0], "B")
    if max_abs(b - b.T) > tol:
        raise InvalidInputError("Williamson decomposition needs a symmetric matrix")
    b = (b + b.T) / 2

    eigvals, eigvecs = eigh(b)
    if eigvals[0] <= 0:
        raise DecompositionError(
            f"Williamson decomposition needs a positive-definite matrix (min eigenvalue {eigvals[0]:.3e})"
        )
    b_inv_sqrt = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    antisymmetric = b_inv_sqrt @ omega_matrix(n) @ b_inv_sqrt

    try:
        t, k = schur(antisymmetric, output="real")
    except LinAlgError as exc:
        raise DecompositionError(f"Schur factorization failed: {exc}") from exc

    columns = []
    betas = []
    for j in range(n):
        upper = t[2 * j, 2 * j + 1]
        if upper >= 0:
            pair = (k[:, 2 * j], k[:, 2 * j + 1])
        else:
            pair = (k[:, 2 * j + 1], k[:, 2 * j])
        columns.append(pair)
        betas.append(1.0 / abs(upper))

    order = sorted(range(n), key=lambda j: -betas[j])
    k_sorted = np.column_stack([col for j in order for col in columns[j]])
    betas_sorted = tuple(float(betas[j]) for j in order)

    d_sqrt = np.kron(np.diag(np.sqrt(betas_sorted)), np.eye(2))
    s = d_sqrt @ k_sorted.T @ b_inv_sqrt

    logger.debug(f"Williamson: N={n}, betas={betas_sorted}")
    return WilliamsonResult(s=frozen(s), betas=betas_sorted)


def numerical_rank(a, tol: Optional[float] = None) -> int:
    """Rank counting singular values above tol × largest singular value"""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > _tol(tol) * sv[0]))
