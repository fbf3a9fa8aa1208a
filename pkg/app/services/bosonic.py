"""
Linear bosonic observables Ê(p) = W(A₀p) f₀(p) and finite-resolution support
probes.

Two f₀ families are supported:

* SmearedGaussian: the Gaussian factor exp(−¼pᵀB₀p − iv₀ᵀp) times the
  characteristic function of a classical noise (Gaussian, Fejér or notch).
* CovariantFock: A₀ = −Ω₁ and f₀(p) = σ̂(Ω₁p) for a single-mode density
  matrix σ, evaluated by the Fock oracle.

A set of such observables is IC when the union of the sets
Y_E = {A₀p : f₀(p) ≠ 0} is dense. The verdict here is computed on a grid and
is never a proof: "ic-consistent" means no open hole larger than twice the
grid spacing was found.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.ndimage import distance_transform_edt

from app.config import settings
from app.exceptions import InvalidDimensionError, InvalidInputError, InvalidNoiseError
from app.services.fock_oracle import FockOperator, ladder_ops, make_density, oracle_weyl_grid
from app.services.observables import GaussianObservable, make_observable, validate_observable
from app.services.symplectic import omega_matrix, psd_check
from app.utils.helpers import as_matrix, as_vector, frozen, max_abs

# Set up logging
logger = logging.getLogger(__name__)

IC_CONSISTENT = "ic-consistent"
NOT_IC = "not-ic"


@dataclass(frozen=True)
class GaussianNoise:
    """Noise with characteristic function exp(−¼pᵀCp − idᵀp)"""
    c: np.ndarray
    d: np.ndarray
    kind: str = field(default="gaussian", init=False)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        quad = np.einsum("ki,ij,kj->k", points, self.c, points)
        return np.exp(-0.25 * quad - 1j * points @ self.d)

    def declared_zero(self, points: np.ndarray) -> np.ndarray:
        return np.zeros(points.shape[0], dtype=bool)


@dataclass(frozen=True)
class FejerNoise:
    """Product of triangular hats max(0, 1 − |p_i|/w): the Fejér kernel's characteristic function"""
    width: float
    kind: str = field(default="fejer", init=False)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return np.prod(np.clip(1 - np.abs(points) / self.width, 0, None), axis=1).astype(complex)

    def declared_zero(self, points: np.ndarray) -> np.ndarray:
        return np.any(np.abs(points) >= self.width, axis=1)


@dataclass(frozen=True)
class NotchNoise:
    """
    Zero balls of the given radius around ±centers with a linear ramp back to 1

    A probe fixture for engineered zero sets; positive definiteness of this
    function is not certified.
    """
    centers: np.ndarray
    radius: float
    kind: str = field(default="notch", init=False)

    def _distances(self, points: np.ndarray) -> np.ndarray:
        centers = np.vstack([self.centers, -self.centers])
        return np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        ramp = np.clip((self._distances(points) - self.radius) / self.radius, 0, 1)
        return np.prod(ramp, axis=1).astype(complex)

    def declared_zero(self, points: np.ndarray) -> np.ndarray:
        return np.any(self._distances(points) <= self.radius, axis=1)


Noise = Union[GaussianNoise, FejerNoise, NotchNoise]


@dataclass(frozen=True)
class SmearedGaussian:
    b0: np.ndarray
    v0: np.ndarray
    noise: Optional[Noise] = None
    kind: str = field(default="smeared_gaussian", init=False)


@dataclass(frozen=True)
class CovariantFock:
    sigma: FockOperator
    kind: str = field(default="covariant_fock", init=False)


@dataclass(frozen=True)
class BosonicObservable:
    a0: np.ndarray
    f0: Union[SmearedGaussian, CovariantFock]

    @property
    def n_modes(self) -> int:
        return self.a0.shape[0] // 2

    @property
    def outcome_dim(self) -> int:
        return self.a0.shape[1]


@dataclass(frozen=True)
class GridSpec:
    points: int = settings.BOSONIC_GRID_POINTS
    half_width: float = settings.BOSONIC_GRID_HALF_WIDTH

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.points - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    def mesh(self, dim: int) -> np.ndarray:
        """Grid points of [−h, h]^dim as rows, C order"""
        axes = np.meshgrid(*([self.axis()] * dim), indexing="ij")
        return np.column_stack([a.ravel() for a in axes])


@dataclass(frozen=True)
class SupportProbe:
    grid: np.ndarray
    shape: Tuple[int, ...]
    spacing: float
    zero_mask: np.ndarray
    y_set_sample: np.ndarray
    hole_radius: float
    zero_crossings: np.ndarray

    @property
    def fraction_nonzero(self) -> float:
        return float(1 - self.zero_mask.mean())

    @property
    def crossing_radii(self) -> np.ndarray:
        return np.linalg.norm(self.zero_crossings, axis=1) if self.zero_crossings.size else np.zeros(0)


@dataclass(frozen=True)
class BosonicVerdict:
    verdict: str
    evidence: Dict[str, object]

    @property
    def ic_consistent(self) -> bool:
        return self.verdict == IC_CONSISTENT


def make_noise(kind: str, c=None, d=None, width: Optional[float] = None, centers=None,
               radius: Optional[float] = None, dim: Optional[int] = None, tol: Optional[float] = None) -> Noise:
    """
    Raises:
        InvalidNoiseError: If parameters do not define a valid noise of the kind
        InvalidInputError: If the kind is unknown
    """
    if kind == "gaussian":
        c = as_matrix(np.atleast_2d(np.asarray(c, dtype=float)), name="C")
        d = np.zeros(c.shape[0]) if d is None else as_vector(d, c.shape[0], name="d")
        if c.shape[0] != c.shape[1] or (dim is not None and c.shape[0] != dim):
            raise InvalidDimensionError(f"Noise covariance has shape {c.shape}")
        if max_abs(c - c.T) > 1e-12 or not psd_check(c, tol):
            raise InvalidNoiseError("Gaussian noise covariance must be symmetric positive semidefinite")
        return GaussianNoise(c=frozen(c), d=frozen(d))
    if kind == "fejer":
        if width is None or width <= 0:
            raise InvalidNoiseError("Fejér noise needs a positive width")
        return FejerNoise(width=float(width))
    if kind == "notch":
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        if dim is not None and centers.shape[1] != dim:
            raise InvalidDimensionError(f"Notch centers must live in R^{dim}")
        if radius is None or radius <= 0:
            raise InvalidNoiseError("Notch noise needs a positive radius")
        return NotchNoise(centers=frozen(centers), radius=float(radius))
    raise InvalidInputError(f"Unsupported noise kind '{kind}'")


def smeared_gaussian(a0, b0, v0=None, noise: Optional[Noise] = None,
                     tol: Optional[float] = None) -> BosonicObservable:
    """Gaussian part validated against B₀ − iA₀ᵀΩA₀ ≥ 0"""
    base = make_observable(a0, b0, v0, tol)
    validate_observable(base, tol, raise_on_invalid=True)
    noise_dim = {GaussianNoise: lambda n: n.c.shape[0], NotchNoise: lambda n: n.centers.shape[1]}
    if type(noise) in noise_dim and noise_dim[type(noise)](noise) != base.outcome_dim:
        raise InvalidDimensionError(f"Noise must live in the outcome space R^{base.outcome_dim}")
    return BosonicObservable(a0=base.a0, f0=SmearedGaussian(b0=base.b0, v0=base.v0, noise=noise))


def bosonic_from_gaussian(obs: GaussianObservable) -> BosonicObservable:
    """A Gaussian observable as a bosonic one with no extra noise"""
    return BosonicObservable(a0=obs.a0, f0=SmearedGaussian(b0=obs.b0, v0=obs.v0))


def covariant_fock(sigma: FockOperator) -> BosonicObservable:
    """E_σ with A₀ = −Ω₁; σ must be a density matrix"""
    sigma = make_density(sigma.matrix)
    return BosonicObservable(a0=frozen(-omega_matrix(1)), f0=CovariantFock(sigma=sigma))


def f0_grid(obs: BosonicObservable, points) -> np.ndarray:
    """f₀ at each row of ``points``"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != obs.outcome_dim:
        raise InvalidDimensionError(f"Points must live in R^{obs.outcome_dim}")
    f0 = obs.f0
    if isinstance(f0, CovariantFock):
        om = omega_matrix(1)
        return oracle_weyl_grid(f0.sigma, points @ om.T)
    quad = np.einsum("ki,ij,kj->k", points, f0.b0, points)
    values = np.exp(-0.25 * quad - 1j * points @ f0.v0)
    if f0.noise is not None:
        values = values * f0.noise.evaluate(points)
    return values


def f0_eval(obs: BosonicObservable, p) -> complex:
    p = as_vector(p, obs.outcome_dim, name="p")
    return complex(f0_grid(obs, p[None, :])[0])


def _declared_zero(obs: BosonicObservable, points: np.ndarray) -> np.ndarray:
    f0 = obs.f0
    if isinstance(f0, SmearedGaussian) and f0.noise is not None:
        return f0.noise.declared_zero(points)
    return np.zeros(points.shape[0], dtype=bool)


def _fock_envelope(sigma: FockOperator, points: np.ndarray) -> np.ndarray:
    """exp(−¼pᵀVp) with V the covariance of σ, the size of f₀ had σ been Gaussian"""
    _, _, q_op, p_op = ladder_ops(sigma.cutoff)
    quadratures = (q_op, p_op)
    means = [np.trace(sigma.matrix @ r).real for r in quadratures]
    v = np.empty((2, 2))
    for i, ri in enumerate(quadratures):
        for j, rj in enumerate(quadratures):
            v[i, j] = np.trace(sigma.matrix @ (ri @ rj + rj @ ri)).real - 2 * means[i] * means[j]
    return np.exp(-0.25 * np.einsum("ki,ij,kj->k", points, v, points))


def _zero_mask(obs: BosonicObservable, points: np.ndarray, values: np.ndarray, threshold: float) -> np.ndarray:
    """
    Zeros of f₀ on the grid

    A smeared Gaussian vanishes only on the declared zero set of its noise;
    the Gaussian factor itself never does. A covariant Fock f₀ is a zero
    where it falls below threshold times its covariance-matched envelope.
    """
    if isinstance(obs.f0, CovariantFock):
        return np.abs(values) <= threshold * _fock_envelope(obs.f0.sigma, points)
    return _declared_zero(obs, points)


def _hole(mask: np.ndarray, spacing: float) -> Tuple[float, Optional[Tuple[int, ...]]]:
    """Largest distance from a masked cell to the nearest unmasked one"""
    if not mask.any():
        return 0.0, None
    if mask.all():
        return float("inf"), tuple(s // 2 for s in mask.shape)
    distances = distance_transform_edt(mask, sampling=spacing)
    index = np.unravel_index(int(np.argmax(distances)), mask.shape)
    return float(distances[index]), tuple(int(i) for i in index)


def _sign_crossings(values: np.ndarray, points: np.ndarray, shape: Tuple[int, ...], tol: float) -> np.ndarray:
    """Midpoints of grid edges along which an effectively real f₀ changes sign"""
    real = values.real.reshape(shape)
    real_valued = (np.abs(values.imag) <= tol).reshape(shape)
    grid = points.reshape(shape + (len(shape),))
    midpoints = []
    for axis in range(len(shape)):
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        flips = (real[lo] * real[hi] < 0) & real_valued[lo] & real_valued[hi]
        midpoints.append(((grid[lo] + grid[hi]) / 2)[flips])
    return np.vstack(midpoints) if midpoints else np.zeros((0, len(shape)))


def support_probe(obs: BosonicObservable, grid_spec: Optional[GridSpec] = None,
                  threshold: Optional[float] = None) -> SupportProbe:
    """
    Classify outcome-grid points p as zeros of f₀

    A point is a zero when it lies in the declared zero set of the noise or,
    for a covariant Fock f₀, when |f₀(p)| drops below threshold times the
    covariance-matched Gaussian envelope. Zeros of measure zero are usually
    missed by the grid, so sign changes of real-valued f₀ between neighbours
    are reported as well.
    """
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    threshold = settings.ZERO_THRESHOLD if threshold is None else threshold
    dim = obs.outcome_dim
    points = grid_spec.mesh(dim)
    shape = (grid_spec.points,) * dim
    values = f0_grid(obs, points)
    zero_mask = _zero_mask(obs, points, values, threshold)
    hole_radius, _ = _hole(zero_mask.reshape(shape), grid_spec.spacing)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    crossings = _sign_crossings(values, points, shape, threshold * scale)
    logger.info(
        f"Support probe ({obs.f0.kind}): {zero_mask.mean():.3%} zeros, hole radius {hole_radius:.3g}, "
        f"{len(crossings)} sign crossings"
    )
    return SupportProbe(
        grid=frozen(points),
        shape=shape,
        spacing=grid_spec.spacing,
        zero_mask=frozen(zero_mask, dtype=bool),
        y_set_sample=frozen(points[~zero_mask] @ obs.a0.T),
        hole_radius=hole_radius,
        zero_crossings=frozen(crossings),
    )


def _covered(obs: BosonicObservable, xs: np.ndarray, spacing: float, threshold: float) -> np.ndarray:
    """Grid points x of phase space that lie in Y_E up to half a cell"""
    a0 = obs.a0
    preimages = xs @ np.linalg.pinv(a0).T
    reachable = np.linalg.norm(preimages @ a0.T - xs, axis=1) <= spacing / 2
    values = f0_grid(obs, preimages)
    nonzero = ~_zero_mask(obs, preimages, values, threshold)
    return reachable & nonzero


def ic_bosonic_verdict(observables: Sequence[BosonicObservable], grid_spec: Optional[GridSpec] = None,
                       threshold: Optional[float] = None) -> BosonicVerdict:
    """
    Finite-resolution density test of the union of the Y_E over the set

    Each phase-space grid point x is mapped to its minimum-norm preimage
    p = A₀⁺x. The verdict is not-ic when some uncovered ball has radius at
    least twice the grid spacing.
    """
    observables = list(observables)
    if not observables:
        raise InvalidInputError("Bosonic verdict needs at least one observable")
    n = observables[0].n_modes
    if any(obs.n_modes != n for obs in observables):
        raise InvalidDimensionError("All observables must act on the same number of modes")
    grid_spec = GridSpec() if grid_spec is None else grid_spec
    threshold = settings.ZERO_THRESHOLD if threshold is None else threshold

    xs = grid_spec.mesh(2 * n)
    shape = (grid_spec.points,) * (2 * n)
    covered = np.zeros(xs.shape[0], dtype=bool)
    for obs in observables:
        covered |= _covered(obs, xs, grid_spec.spacing, threshold)

    uncovered = ~covered.reshape(shape)
    hole_radius, hole_index = _hole(uncovered, grid_spec.spacing)
    covered_grid = covered.reshape(shape)
    touches_boundary = any(
        covered_grid.take(0, axis=k).any() or covered_grid.take(-1, axis=k).any() for k in range(2 * n)
    )
    evidence = {
        "grid_points": grid_spec.points,
        "half_width": grid_spec.half_width,
        "spacing": grid_spec.spacing,
        "covered_fraction": float(covered.mean()),
        "hole_radius": hole_radius,
        "hole_center": None if hole_index is None else [float(grid_spec.axis()[i]) for i in hole_index],
        "bounded_support": bool(covered.any() and not touches_boundary),
    }
    verdict = NOT_IC if hole_radius >= 2 * grid_spec.spacing else IC_CONSISTENT
    logger.info(f"Bosonic verdict for {len(observables)} observables: {verdict} (hole radius {hole_radius:.3g})")
    return BosonicVerdict(verdict=verdict, evidence=evidence)
