"""
Informational completeness of Gaussian observables and sets of them.

A set {E_j} is informationally complete iff some member has rank A₀ = 2N.
Infinite families of one-dimensional observables are judged by how densely
their directions cover the projective sphere, which is reported as a covering
radius. Non-IC sets get a pair of distinct Gaussian states with identical
statistics whenever one exists, and Gaussian states can be reconstructed from
measured (or simulated) outcome laws.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigh, null_space
from scipy.stats import norm, qmc

from app.config import settings
from app.exceptions import InvalidDimensionError, InvalidInputError
from app.services.observables import (
    GaussianDistribution,
    GaussianObservable,
    classify,
    pushforward,
    validate_observable,
)
from app.services.states import GaussianState, make_state
from app.services.symplectic import min_hermitian_eigenvalue, numerical_rank, omega_matrix
from app.utils.helpers import frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)

_PROBE_CHUNK = 2048


@dataclass(frozen=True)
class ObservableSet:
    members: Tuple[GaussianObservable, ...]

    @property
    def n_modes(self) -> int:
        return self.members[0].n_modes

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DirectionSample:
    """Unit vectors in R^{2N}; u and −u name the same direction"""
    directions: np.ndarray

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class SpanResult:
    dimension: int
    basis: np.ndarray


@dataclass(frozen=True)
class WitnessPair:
    """Two distinct Gaussian states that no member of the set can tell apart"""
    state_a: GaussianState
    state_b: GaussianState
    certified_against: ObservableSet
    kind: str

    def statistics_gap(self) -> float:
        """Largest entrywise difference of outcome means and covariances over the set"""
        gap = 0.0
        for obs in self.certified_against.members:
            da = pushforward(obs, self.state_a)
            db = pushforward(obs, self.state_b)
            gap = max(gap, max_abs(da.mean - db.mean), max_abs(da.cov - db.cov))
        return gap

    def separation(self) -> float:
        """‖m_a − m_b‖ + ‖V_a − V_b‖ (Frobenius)"""
        return float(
            np.linalg.norm(self.state_a.m - self.state_b.m) + np.linalg.norm(self.state_a.v - self.state_b.v)
        )


@dataclass(frozen=True)
class ReconstructionResult:
    m: np.ndarray
    v: np.ndarray
    residual: float
    rank: int
    n_parameters: int

    @property
    def nullspace_dim(self) -> int:
        return self.n_parameters - self.rank

    @property
    def identifiable(self) -> bool:
        return self.nullspace_dim == 0

    def is_physical(self, tol: Optional[float] = None) -> bool:
        """V + iΩ ≥ 0 for the estimate"""
        tol = settings.DEFAULT_TOL if tol is None else tol
        n = self.m.shape[0] // 2
        return min_hermitian_eigenvalue(self.v + 1j * omega_matrix(n)) >= -tol

    def to_state(self, tol: Optional[float] = None) -> GaussianState:
        return make_state(self.m, self.v, tol)


@dataclass(frozen=True)
class IdentifiabilityReport:
    mean_rank: int
    covariance_rank: int
    n_parameters: int

    @property
    def rank(self) -> int:
        return self.mean_rank + self.covariance_rank

    @property
    def identifiable(self) -> bool:
        return self.rank == self.n_parameters


ObservableCollection = Union[ObservableSet, Sequence[GaussianObservable]]


def make_observable_set(members: Iterable[GaussianObservable], tol: Optional[float] = None) -> ObservableSet:
    """
    Raises:
        InvalidInputError: If the set is empty
        InvalidDimensionError: If members act on different numbers of modes
        InvalidObservableError: If a member is not a valid observable
    """
    members = tuple(members)
    if not members:
        raise InvalidInputError("Observable set must not be empty")
    n = members[0].n_modes
    for obs in members:
        if obs.n_modes != n:
            raise InvalidDimensionError(f"All observables must act on {n} modes, found {obs.n_modes}")
        validate_observable(obs, tol, raise_on_invalid=True)
    return ObservableSet(members=members)


def _as_set(observables: ObservableCollection, tol: Optional[float] = None) -> ObservableSet:
    if isinstance(observables, ObservableSet):
        if not observables.members:
            raise InvalidInputError("Observable set must not be empty")
        return observables
    return make_observable_set(observables, tol)


def ic_single(obs: GaussianObservable, tol: Optional[float] = None) -> bool:
    """rank A₀ = 2N"""
    return classify(obs, tol).informationally_complete


def ic_finite_set(observables: ObservableCollection, tol: Optional[float] = None) -> bool:
    """A finite set is IC iff one of its members is"""
    obs_set = _as_set(observables, tol)
    return any(ic_single(obs, tol) for obs in obs_set.members)


def subspace_union_span(observables: ObservableCollection, tol: Optional[float] = None) -> SpanResult:
    """Orthonormal basis of Σ_j col(A₀ʲ)"""
    obs_set = _as_set(observables, tol)
    tol = settings.DEFAULT_TOL if tol is None else tol
    stacked = np.hstack([obs.a0 for obs in obs_set.members])
    rank = numerical_rank(stacked, tol)
    u = np.linalg.svd(stacked, full_matrices=False)[0][:, :rank]
    basis = np.column_stack([_fix_sign(col) for col in u.T]) if rank else u
    return SpanResult(dimension=rank, basis=frozen(basis))


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    """Flip so that the entry of largest magnitude is positive"""
    idx = int(np.argmax(np.abs(vector)))
    return -vector if vector[idx] < 0 else vector


def make_direction_sample(vectors) -> DirectionSample:
    """
    Raises:
        InvalidInputError: If the sample is empty or contains a zero vector
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors.reshape(1, -1)
    if vectors.size == 0:
        raise InvalidInputError("Direction sample must not be empty")
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise InvalidInputError("Direction sample contains a zero vector")
    return DirectionSample(directions=frozen(vectors / norms[:, None]))


def family_directions(kind: str, thetas: Sequence[float], rs: Optional[Sequence[float]] = None) -> DirectionSample:
    """
    Directions of single-mode quadrature families

    rotated:  (−sinθ, cosθ) for each θ
    squeezed: (−e^{−r} sinθ, e^{r} cosθ), normalized, for each (θ, r) pair
              of the Cartesian product thetas × rs
    """
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if kind == "rotated":
        vectors = np.column_stack([-np.sin(thetas), np.cos(thetas)])
    elif kind == "squeezed":
        if rs is None:
            raise InvalidInputError("Squeezed family needs squeezing parameters rs")
        th, r = np.meshgrid(thetas, np.atleast_1d(np.asarray(rs, dtype=float)), indexing="ij")
        th, r = th.ravel(), r.ravel()
        vectors = np.column_stack([-np.exp(-r) * np.sin(th), np.exp(r) * np.cos(th)])
    else:
        raise InvalidInputError(f"Unsupported direction family '{kind}' (expected 'rotated' or 'squeezed')")
    return make_direction_sample(vectors)


def observable_directions(observables: ObservableCollection) -> DirectionSample:
    """Directions a = A₀ of the one-dimensional members of a set"""
    obs_set = _as_set(observables)
    vectors = [obs.a0[:, 0] for obs in obs_set.members if obs.outcome_dim == 1]
    if not vectors:
        raise InvalidInputError("Set contains no one-dimensional observables")
    return make_direction_sample(np.vstack(vectors))


def probe_grid(dim: int, size: int) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit sphere S^{dim−1}"""
    sampler = qmc.Halton(d=dim, scramble=False)
    sampler.fast_forward(1)
    uniform = np.clip(sampler.random(size), 1e-12, 1 - 1e-12)
    points = norm.ppf(uniform)
    return points / np.linalg.norm(points, axis=1)[:, None]


def _planar_radius(directions: np.ndarray) -> float:
    angles = np.sort(np.mod(np.arctan2(directions[:, 1], directions[:, 0]), np.pi))
    gaps = np.diff(np.concatenate([angles, [angles[0] + np.pi]]))
    return float(np.max(gaps) / 2)


def direction_coverage(sample: DirectionSample, probe_grid_size: Optional[int] = None) -> float:
    """
    Covering radius of a direction sample on the projective sphere

    The geodesic distance between directions u, s is arccos|u·s|. In the plane
    the radius is computed exactly as half the largest angular gap modulo π;
    in higher dimensions it is the maximum over a fixed probe grid of the
    distance to the nearest sample direction, so it never increases when the
    sample grows.

    Raises:
        InvalidInputError: If the sample is empty
    """
    if len(sample) == 0:
        raise InvalidInputError("Direction sample must not be empty")
    if sample.dim == 2:
        radius = _planar_radius(sample.directions)
    else:
        size = settings.PROBE_GRID_SIZE if probe_grid_size is None else int(probe_grid_size)
        probes = probe_grid(sample.dim, size)
        radius = 0.0
        for start in range(0, size, _PROBE_CHUNK):
            cosines = np.abs(probes[start:start + _PROBE_CHUNK] @ sample.directions.T)
            nearest = np.arccos(np.clip(cosines.max(axis=1), 0.0, 1.0))
            radius = max(radius, float(nearest.max()))
    logger.debug(f"Covering radius {radius:.6g} for {len(sample)} directions in R^{sample.dim}")
    return radius


def _sym_basis(dim: int) -> List[np.ndarray]:
    basis = []
    for i in range(dim):
        for j in range(i, dim):
            e = np.zeros((dim, dim))
            e[i, j] = e[j, i] = 1.0
            basis.append(e)
    return basis


def _covariance_rows(g: np.ndarray, basis: List[np.ndarray]) -> np.ndarray:
    """Rows of the linear map Δ ↦ upper triangle of GᵀΔG in the Sym basis"""
    m = g.shape[1]
    iu = np.triu_indices(m)
    return np.column_stack([(g.T @ e @ g)[iu] for e in basis])


def _mean_operator(obs_set: ObservableSet) -> np.ndarray:
    om = omega_matrix(obs_set.n_modes)
    return np.vstack([obs.a0.T @ om for obs in obs_set.members])


def _covariance_operator(obs_set: ObservableSet, basis: List[np.ndarray]) -> np.ndarray:
    om = omega_matrix(obs_set.n_modes)
    return np.vstack([_covariance_rows(om @ obs.a0, basis) for obs in obs_set.members])


def gaussian_witness(observables: ObservableCollection, tol: Optional[float] = None,
                     base_variance: Optional[float] = None) -> Optional[WitnessPair]:
    """
    Distinct Gaussian states with identical statistics for every member

    Mean shifts δ with A₀ʲᵀΩδ = 0 for all j are tried first, then symmetric
    covariance perturbations Δ with (ΩA₀ʲ)ᵀΔ(ΩA₀ʲ) = 0. The base state is
    (0, cI) with c = base_variance > 1, and the covariance step is half of
    the largest t keeping both V₀ ± tΔ + iΩ ≥ 0. With λ the generalized
    eigenvalues of Δ against V₀ + iΩ, that largest t is 1/max|λ|.

    Returns None when no Gaussian witness exists. None does not certify
    informational completeness: the set can still fail to separate
    non-Gaussian states.
    """
    obs_set = _as_set(observables, tol)
    tol = settings.DEFAULT_TOL if tol is None else tol
    base_variance = settings.WITNESS_BASE_VARIANCE if base_variance is None else float(base_variance)
    if base_variance <= 1.0:
        raise InvalidInputError(f"Witness base variance must exceed 1, got {base_variance}")
    n = obs_set.n_modes
    dim = 2 * n
    v0 = base_variance * np.eye(dim)

    shifts = null_space(_mean_operator(obs_set), rcond=tol)
    if shifts.shape[1] > 0:
        delta = _fix_sign(shifts[:, 0])
        logger.info(f"Mean-shift witness found ({shifts.shape[1]} free directions)")
        return WitnessPair(
            state_a=make_state(np.zeros(dim), v0),
            state_b=make_state(delta, v0),
            certified_against=obs_set,
            kind="mean",
        )

    basis = _sym_basis(dim)
    coeffs = null_space(_covariance_operator(obs_set, basis), rcond=tol)
    if coeffs.shape[1] == 0:
        logger.info("No Gaussian witness: means and covariances are identifiable")
        return None

    delta = sum(c * e for c, e in zip(coeffs[:, 0], basis))
    delta = delta / np.linalg.norm(delta, 2)
    flat = delta[np.triu_indices(dim)]
    if flat[int(np.argmax(np.abs(flat)))] < 0:
        delta = -delta
    feasible = 1.0 / np.max(np.abs(eigh(delta.astype(complex), v0 + 1j * omega_matrix(n), eigvals_only=True)))
    step = 0.5 * feasible
    logger.info(f"Covariance witness found ({coeffs.shape[1]} free directions, step {step:.6g})")
    return WitnessPair(
        state_a=make_state(np.zeros(dim), v0 + step * delta),
        state_b=make_state(np.zeros(dim), v0 - step * delta),
        certified_against=obs_set,
        kind="covariance",
    )


def state_identifiable(observables: ObservableCollection, tol: Optional[float] = None) -> IdentifiabilityReport:
    """
    Rank of the map (m, V) ↦ outcome laws restricted to Gaussian states

    Finitely many commutative observables can identify Gaussian states (three
    distinct quadratures already do for N = 1) while the set is not IC.
    """
    obs_set = _as_set(observables, tol)
    tol = settings.DEFAULT_TOL if tol is None else tol
    dim = 2 * obs_set.n_modes
    basis = _sym_basis(dim)
    return IdentifiabilityReport(
        mean_rank=numerical_rank(_mean_operator(obs_set), tol),
        covariance_rank=numerical_rank(_covariance_operator(obs_set, basis), tol),
        n_parameters=dim + len(basis),
    )


def _predicted(obs: GaussianObservable, m: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    om = omega_matrix(obs.n_modes)
    return -obs.a0.T @ om @ m - obs.v0, 0.5 * (obs.a0.T @ om.T @ v @ om @ obs.a0 + obs.b0)


def reconstruct_gaussian(observations: Sequence[Tuple[GaussianObservable, GaussianDistribution]],
                         tol: Optional[float] = None) -> ReconstructionResult:
    """
    Estimate (m, V) from outcome laws

    Each observation contributes the linear equations
        (−A₀ᵀΩ) m = μ + v₀,    (ΩA₀)ᵀ V (ΩA₀) = 2Σ − B₀.
    A single IC observable with M = 2N is inverted in closed form; otherwise
    the stacked system is solved in the least-squares sense and the
    minimum-norm solution is returned together with the rank of the map.

    Raises:
        InvalidInputError: If there are no observations
        InvalidDimensionError: If observables act on different mode numbers
    """
    observations = list(observations)
    if not observations:
        raise InvalidInputError("Reconstruction needs at least one observation")
    tol = settings.DEFAULT_TOL if tol is None else tol
    n = observations[0][0].n_modes
    dim = 2 * n
    for obs, dist in observations:
        if obs.n_modes != n:
            raise InvalidDimensionError(f"All observables must act on {n} modes, found {obs.n_modes}")
        if dist.dim != obs.outcome_dim:
            raise InvalidDimensionError(
                f"Distribution dimension {dist.dim} does not match outcome dimension {obs.outcome_dim}"
            )

    om = omega_matrix(n)
    basis = _sym_basis(dim)
    n_parameters = dim + len(basis)
    obs0, dist0 = observations[0]

    if len(observations) == 1 and obs0.outcome_dim == dim and numerical_rank(obs0.a0, tol) == dim:
        g = om @ obs0.a0
        g_inv = np.linalg.inv(g)
        m = np.linalg.solve(g.T, dist0.mean + obs0.v0)
        v = g_inv.T @ (2 * dist0.cov - obs0.b0) @ g_inv
        rank = n_parameters
    else:
        mean_op = _mean_operator(ObservableSet(tuple(obs for obs, _ in observations)))
        mean_rhs = np.concatenate([-(dist.mean + obs.v0) for obs, dist in observations])
        m, _, mean_rank, _ = np.linalg.lstsq(mean_op, mean_rhs, rcond=tol)

        cov_op = np.vstack([_covariance_rows(om @ obs.a0, basis) for obs, _ in observations])
        cov_rhs = np.concatenate([
            (2 * dist.cov - obs.b0)[np.triu_indices(obs.outcome_dim)] for obs, dist in observations
        ])
        coeffs, _, cov_rank, _ = np.linalg.lstsq(cov_op, cov_rhs, rcond=tol)
        v = sum(c * e for c, e in zip(coeffs, basis))
        rank = int(mean_rank) + int(cov_rank)

    v = (v + v.T) / 2
    residual = 0.0
    for obs, dist in observations:
        mean, cov = _predicted(obs, m, v)
        residual = max(residual, max_abs(mean - dist.mean), max_abs(cov - dist.cov))

    result = ReconstructionResult(m=frozen(m), v=frozen(v), residual=residual, rank=rank, n_parameters=n_parameters)
    if result.nullspace_dim > 0:
        logger.warning(
            f"Reconstruction is rank deficient: rank {rank} of {n_parameters}, "
            f"minimum-norm solution returned"
        )
    else:
        logger.info(f"Reconstructed {n}-mode Gaussian state (residual {residual:.3e})")
    return result
