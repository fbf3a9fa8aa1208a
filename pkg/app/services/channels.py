"""
Gaussian channels (A, B, v) acting on Weyl transforms:

    Φ(ρ)^(x) = ρ̂(Ax) exp(−¼ xᵀBx − ivᵀx)

B is stored as a complex matrix. Only its real symmetric part enters the
quadratic form above (the antisymmetric imaginary part vanishes on real x),
while the complete positivity test B + iΩ_M − iAᵀΩ_N A ≥ 0 uses the full
matrix through its Hermitian part.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from app.config import settings
from app.exceptions import InvalidChannelError, InvalidDimensionError, InvalidInputError
from app.services.observables import (
    GaussianObservable,
    linear_postprocess,
    make_observable,
    validate_observable,
)
from app.services.states import GaussianState, make_state, vacuum
from app.services.symplectic import (
    ValidationResult,
    is_symplectic,
    modes_of,
    omega_matrix,
    psd_diagnostic,
)
from app.utils.helpers import as_matrix, as_vector, frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianChannel:
    """Channel from N input modes to M output modes"""
    in_modes: int
    out_modes: int
    a: np.ndarray
    b: np.ndarray
    v: np.ndarray

    @property
    def b_symmetric(self) -> np.ndarray:
        """Real symmetric part of B, the part seen by the quadratic form"""
        re = self.b.real
        return (re + re.T) / 2


@dataclass(frozen=True)
class DilationSpec:
    """
    Symplectic dilation: system (N modes) ⊗ ancilla (L modes), coupled by
    the displacement d and the symplectic S, first M modes kept.
    """
    s: np.ndarray
    d: np.ndarray
    ancilla: Optional[GaussianState]
    kept_modes: int

    @property
    def total_modes(self) -> int:
        return self.s.shape[0] // 2

    @property
    def ancilla_modes(self) -> int:
        return 0 if self.ancilla is None else self.ancilla.n_modes

    @property
    def in_modes(self) -> int:
        return self.total_modes - self.ancilla_modes


def make_channel(a, b, v, tol: Optional[float] = None) -> GaussianChannel:
    """
    Build a channel after dimension checks (complete positivity is checked by
    validate_channel, not here)

    Raises:
        InvalidDimensionError: If A, B, v shapes are inconsistent
        InvalidInputError: If the imaginary part of B is not antisymmetric
    """
    tol = settings.DEFAULT_TOL if tol is None else tol
    a = as_matrix(a, name="A")
    n = modes_of(a.shape[0], "A rows")
    m = modes_of(a.shape[1], "A columns")
    b = as_matrix(b, 2 * m, 2 * m, name="B", dtype=complex)
    v = as_vector(v, 2 * m, name="v")
    if max_abs(b.imag + b.imag.T) > tol:
        raise InvalidInputError("Imaginary part of B must be antisymmetric")
    return GaussianChannel(
        in_modes=n,
        out_modes=m,
        a=frozen(a),
        b=frozen(b, dtype=complex),
        v=frozen(v),
    )


def validate_channel(ch: GaussianChannel, tol: Optional[float] = None) -> ValidationResult:
    """Complete positivity: B + iΩ_M − iAᵀΩ_N A ≥ 0"""
    if ch.a.shape != (2 * ch.in_modes, 2 * ch.out_modes):
        raise InvalidDimensionError(f"A has shape {ch.a.shape}, expected {(2 * ch.in_modes, 2 * ch.out_modes)}")
    om_in = omega_matrix(ch.in_modes)
    om_out = omega_matrix(ch.out_modes)
    condition = ch.b + 1j * om_out - 1j * (ch.a.T @ om_in @ ch.a)
    result = psd_diagnostic(condition, tol, label="B + iΩ − iAᵀΩA")
    logger.debug(f"validate_channel: min eigenvalue {result.min_eigenvalue:.3e}")
    return result


def _require_valid(ch: GaussianChannel, tol: Optional[float]) -> None:
    result = validate_channel(ch, tol)
    if not result:
        raise InvalidChannelError(result.message, min_eigenvalue=result.min_eigenvalue)


def physical_diagnostic(ch: GaussianChannel, tol: Optional[float] = None) -> ValidationResult:
    """
    Complete positivity with B replaced by its real symmetric part

    This is the condition apply_channel needs for the output to satisfy the
    uncertainty relation. It coincides with validate_channel when B is real.
    """
    om_in = omega_matrix(ch.in_modes)
    om_out = omega_matrix(ch.out_modes)
    condition = ch.b_symmetric + 1j * om_out - 1j * (ch.a.T @ om_in @ ch.a)
    return psd_diagnostic(condition, tol, label="Re B + iΩ − iAᵀΩA")


def identity_channel(n_modes: int) -> GaussianChannel:
    dim = 2 * n_modes
    return make_channel(np.eye(dim), np.zeros((dim, dim)), np.zeros(dim))


def attenuator(eta: float, n_modes: int = 1) -> GaussianChannel:
    """Pure-loss channel of transmissivity eta"""
    dim = 2 * n_modes
    return make_channel(np.sqrt(eta) * np.eye(dim), (1 - eta) * np.eye(dim), np.zeros(dim))


def apply_channel(ch: GaussianChannel, state: GaussianState,
                  tol: Optional[float] = None) -> GaussianState:
    """
    Output state of a Gaussian channel

    Matching the Gaussian Weyl transform of the output against
    ρ̂(Ax)·exp(−¼xᵀBx − ivᵀx) term by term gives

        Ω_Mᵀ V′ Ω_M = AᵀΩ_NᵀVΩ_N A + B_sym
        Ω_M m′     = AᵀΩ_N m + v

    Raises:
        InvalidDimensionError: If the state has the wrong number of modes
        InvalidChannelError: If the channel is not completely positive
            or positive only through the imaginary part of B
        InvalidStateError: If the output violates the uncertainty relation
    """
    if state.n_modes != ch.in_modes:
        raise InvalidDimensionError(f"Channel expects {ch.in_modes} modes, state has {state.n_modes}")
    _require_valid(ch, tol)
    physical = physical_diagnostic(ch, tol)
    if not physical:
        raise InvalidChannelError(
            f"Channel is only formally completely positive: {physical.message}",
            min_eigenvalue=physical.min_eigenvalue,
        )
    om_in = omega_matrix(ch.in_modes)
    om_out = omega_matrix(ch.out_modes)

    pulled_back = ch.a.T @ om_in.T @ state.v @ om_in @ ch.a + ch.b_symmetric
    v_out = om_out @ pulled_back @ om_out.T
    m_out = om_out.T @ (ch.a.T @ om_in @ state.m + ch.v)
    return make_state(m_out, v_out, tol)


def compose_channels(first: GaussianChannel, second: GaussianChannel) -> GaussianChannel:
    """
    Parameters of "apply first, then second"

    Substituting Φ₁(ρ)^ into the Weyl-transform action of Φ₂:
        Φ₂(Φ₁(ρ))^(x) = ρ̂(A₁A₂x)·exp(−¼xᵀ(A₂ᵀB₁A₂ + B₂)x − i(A₂ᵀv₁ + v₂)ᵀx)
    """
    if first.out_modes != second.in_modes:
        raise InvalidDimensionError(
            f"Cannot compose: first outputs {first.out_modes} modes, second expects {second.in_modes}"
        )
    a = first.a @ second.a
    b = second.a.T @ first.b @ second.a + second.b
    v = second.a.T @ first.v + second.v
    return make_channel(a, b, v)


def observable_from_channel(ch: GaussianChannel) -> GaussianObservable:
    """
    Homodyne the Q quadrature of every output mode after the channel

    (A₀)_ij = A_{i,2j}, (B₀)_ij = B_{2i,2j}, (v₀)_i = v_{2i} in one-based
    indexing, i.e. the odd zero-based columns/rows.
    """
    a0 = ch.a[:, 1::2]
    b0 = ch.b[1::2, 1::2].real
    v0 = ch.v[1::2]
    return make_observable(a0, b0, v0)


def channel_from_observable(obs: GaussianObservable,
                            tol: Optional[float] = None) -> GaussianChannel:
    """
    Channel whose homodyne observable is ``obs``

    The Q-quadrature slots carry A₀, B₀ and v₀. The P-quadrature columns of A
    are C = −(A₀ᵀΩ)⁺, which makes CᵀΩA₀ the projector onto the range of
    A₀ᵀΩ, and the P-block of B is t·I with the smallest t found that passes
    complete positivity. B is real, so the channel maps states to states.

    When no such t exists (B₀ singular on directions A₀ does not reach) the
    formal construction B = B′ − iΩ_M is returned instead. It passes
    validate_channel but apply_channel refuses it.

    Raises:
        InvalidObservableError: If obs violates its positivity condition
    """
    validate_observable(obs, tol, raise_on_invalid=True)
    n, m = obs.n_modes, obs.outcome_dim
    om_in = omega_matrix(n)
    p_columns = -np.linalg.pinv(obs.a0.T @ om_in)

    a = np.zeros((2 * n, 2 * m))
    a[:, 1::2] = obs.a0
    a[:, 0::2] = p_columns
    v = np.zeros(2 * m)
    v[1::2] = obs.v0
    b_prime = np.zeros((2 * m, 2 * m))
    b_prime[1::2, 1::2] = obs.b0

    floor = float(np.linalg.norm(p_columns.T @ om_in @ p_columns, 2))
    noise = floor
    for _ in range(settings.CONVERSE_NOISE_DOUBLINGS):
        b = b_prime.copy()
        b[0::2, 0::2] = noise * np.eye(m)
        candidate = make_channel(a, b, v)
        if validate_channel(candidate, tol):
            logger.debug(f"channel_from_observable: P-quadrature noise {noise:.3e}")
            return candidate
        noise = 2 * (noise if noise > floor else floor + 1.0)

    logger.warning("No physical channel reproduces this observable; returning the formal −iΩ construction")
    a[:, 0::2] = 0.0
    return make_channel(a, b_prime - 1j * omega_matrix(m), v)


def make_dilation(s, d=None, ancilla: Optional[GaussianState] = None,
                  kept_modes: Optional[int] = None,
                  tol: Optional[float] = None) -> DilationSpec:
    """
    Validate a dilation description

    Raises:
        InvalidDimensionError: If shapes or the kept-mode count are inconsistent
        InvalidInputError: If S is not symplectic
    """
    s = as_matrix(s, name="S")
    if s.shape[0] != s.shape[1]:
        raise InvalidDimensionError(f"S must be square, got shape {s.shape}")
    total = modes_of(s.shape[0], "S")
    n_ancilla = 0 if ancilla is None else ancilla.n_modes
    if n_ancilla >= total:
        raise InvalidDimensionError(f"Ancilla has {n_ancilla} modes but S only covers {total}")
    kept = total - n_ancilla if kept_modes is None else int(kept_modes)
    if not 1 <= kept <= total:
        raise InvalidDimensionError(f"kept_modes must be in [1, {total}], got {kept}")
    if not is_symplectic(s, tol):
        raise InvalidInputError("Dilation matrix S is not symplectic")
    d = np.zeros(2 * total) if d is None else as_vector(d, 2 * total, name="d")
    return DilationSpec(s=frozen(s), d=frozen(d), ancilla=ancilla, kept_modes=kept)


def channel_from_dilation(spec: DilationSpec, tol: Optional[float] = None) -> GaussianChannel:
    """
    Reduced channel of a symplectic dilation

    With S split into blocks S11 (2N×2M) and S21 (2L×2M) over the kept
    columns: A = S11, B = S21ᵀΩ_LᵀVΩ_L S21, v = S21ᵀΩ_L m − Ω_M d̃ where d̃
    holds the first 2M entries of d.

    Raises:
        InvalidChannelError: If the resulting channel fails complete positivity
    """
    n, m = spec.in_modes, spec.kept_modes
    s11 = spec.s[:2 * n, :2 * m]
    s21 = spec.s[2 * n:, :2 * m]
    om_out = omega_matrix(m)

    if spec.ancilla is None:
        b = np.zeros((2 * m, 2 * m))
        v = -om_out @ spec.d[:2 * m]
    else:
        om_anc = omega_matrix(spec.ancilla.n_modes)
        b = s21.T @ om_anc.T @ spec.ancilla.v @ om_anc @ s21
        v = s21.T @ om_anc @ spec.ancilla.m - om_out @ spec.d[:2 * m]

    ch = make_channel(s11, b, v)
    _require_valid(ch, tol)
    logger.info(f"Dilation reduced to a {n}->{m} mode channel with {spec.ancilla_modes} ancilla modes")
    return ch


def observable_from_dilation(spec: DilationSpec, tol: Optional[float] = None) -> GaussianObservable:
    return observable_from_channel(channel_from_dilation(spec, tol))


def beam_splitter(theta: float = np.pi / 4) -> np.ndarray:
    """Two-mode beam splitter symplectic; theta = π/4 is 50:50"""
    c, s = np.cos(theta), np.sin(theta)
    eye = np.eye(2)
    return np.block([[c * eye, s * eye], [-s * eye, c * eye]])


def phase_rotation(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def single_mode_squeezer(r: float) -> np.ndarray:
    return np.diag([np.exp(-r), np.exp(r)])


def embed(local, modes: Sequence[int], n_modes: int) -> np.ndarray:
    """Place a symplectic acting on ``modes`` into the identity on n_modes"""
    local = as_matrix(local, 2 * len(modes), 2 * len(modes), name="local symplectic")
    idx = np.concatenate([[2 * k, 2 * k + 1] for k in modes])
    out = np.eye(2 * n_modes)
    out[np.ix_(idx, idx)] = local
    return out


def eight_port_dilation(ancilla: Optional[GaussianState] = None) -> DilationSpec:
    """
    Single-mode covariant measurement scheme

    The signal is mixed with a parameter mode on a 50:50 beam splitter and
    the second output is rotated by a quarter turn; both outputs are kept and
    their Q quadratures homodyned. A vacuum parameter mode gives the Q-function
    up to the outcome rescaling by √2 (see eight_port_observable).
    """
    ancilla = vacuum(1) if ancilla is None else ancilla
    if ancilla.n_modes != 1:
        raise InvalidDimensionError("The eight-port scheme uses a single parameter mode")
    s = beam_splitter(np.pi / 4) @ embed(phase_rotation(np.pi / 2), [1], 2)
    return make_dilation(s, None, ancilla, kept_modes=2)


def eight_port_observable(ancilla: Optional[GaussianState] = None) -> GaussianObservable:
    """Covariant observable measured by the eight-port scheme (outcomes rescaled by √2)"""
    raw = observable_from_dilation(eight_port_dilation(ancilla))
    return linear_postprocess(raw, np.sqrt(2) * np.eye(2))
