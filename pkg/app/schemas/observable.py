from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.schemas.state import Matrix, StateSchema, Vector
from app.services.infocomplete import DirectionSample, family_directions, make_direction_sample
from app.services.observables import (
    GaussianDistribution,
    GaussianObservable,
    covariant_observable,
    make_distribution,
    make_observable,
    q_function,
    quadrature,
)
from app.utils.helpers import check_rectangular, check_square


# Gaussian observable entity: explicit (A0, B0, v0) or a named preset
class ObservableSchema(BaseModel):
    kind: Literal["observable"] = "observable"
    preset: Optional[Literal["q_function", "quadrature", "covariant"]] = None
    n_modes: int = Field(1, ge=1)
    mode: int = Field(0, ge=0)
    outcome_dim: Optional[int] = Field(None, ge=1)
    theta: float = 0.0
    r: float = 0.0
    a0: Optional[Matrix] = None
    b0: Optional[Matrix] = None
    v0: Optional[Vector] = None

    @field_validator("a0")
    @classmethod
    def validate_a0(cls, a0):
        return check_rectangular(a0, "A0")

    @field_validator("b0")
    @classmethod
    def validate_b0(cls, b0):
        return check_square(b0, "B0")

    @model_validator(mode="after")
    def validate_parameters(self):
        """Explicit observables need A0 and B0; covariant ones need B0"""
        if self.preset is None and (self.a0 is None or self.b0 is None):
            raise ValueError("An observable needs either a preset or both a0 and b0")
        if self.preset == "covariant" and self.b0 is None:
            raise ValueError("Covariant observable needs b0")
        if self.mode >= self.n_modes:
            raise ValueError("mode must be smaller than n_modes")
        if self.a0 and self.preset is None:
            if len(self.a0) != 2 * self.n_modes and "n_modes" in self.model_fields_set:
                raise ValueError(f"a0 has {len(self.a0)} rows, expected {2 * self.n_modes}")
            if self.outcome_dim is not None and len(self.a0[0]) != self.outcome_dim:
                raise ValueError(f"a0 has {len(self.a0[0])} columns, expected outcome_dim {self.outcome_dim}")
        return self

    def to_domain(self, tol: Optional[float] = None) -> GaussianObservable:
        if self.preset == "q_function":
            return q_function(self.n_modes)
        if self.preset == "quadrature":
            return quadrature(self.theta, self.r, self.n_modes, self.mode)
        if self.preset == "covariant":
            return covariant_observable(self.b0, self.v0)
        return make_observable(self.a0, self.b0, self.v0, tol)

    @classmethod
    def from_domain(cls, obs: GaussianObservable) -> "ObservableSchema":
        return cls(
            n_modes=obs.n_modes,
            outcome_dim=obs.outcome_dim,
            a0=obs.a0.tolist(),
            b0=obs.b0.tolist(),
            v0=obs.v0.tolist(),
        )


# Finite set of observables; members are entity names or inline observables
class ObservableSetSchema(BaseModel):
    kind: Literal["observable_set"] = "observable_set"
    members: List[Union[str, ObservableSchema]] = Field(..., min_length=1)


# Normal outcome law in the standard convention exp(iμᵀp − ½pᵀΣp)
class DistributionSchema(BaseModel):
    kind: Literal["distribution"] = "distribution"
    mean: Vector
    cov: Matrix

    @field_validator("cov")
    @classmethod
    def validate_cov(cls, cov):
        return check_square(cov, "cov")

    def to_domain(self, tol: Optional[float] = None) -> GaussianDistribution:
        return make_distribution(self.mean, self.cov, tol)

    @classmethod
    def from_domain(cls, dist: GaussianDistribution) -> "DistributionSchema":
        return cls(mean=dist.mean.tolist(), cov=dist.cov.tolist())


class AngleGrid(BaseModel):
    start: float
    stop: float
    count: int = Field(..., ge=1)
    endpoint: bool = False

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count, endpoint=self.endpoint)


# Direction sample: explicit vectors or a rotated/squeezed quadrature family
class DirectionsSchema(BaseModel):
    kind: Literal["directions"] = "directions"
    family: Optional[Literal["rotated", "squeezed"]] = None
    vectors: Optional[Matrix] = None
    thetas: Optional[Union[Vector, AngleGrid]] = None
    rs: Optional[Union[Vector, AngleGrid]] = None

    @model_validator(mode="after")
    def validate_parameters(self):
        if self.family is None and not self.vectors:
            raise ValueError("Directions need either a family or explicit vectors")
        if self.family is not None and self.thetas is None:
            raise ValueError("A direction family needs thetas")
        if self.family == "squeezed" and self.rs is None:
            raise ValueError("The squeezed family needs rs")
        return self

    @staticmethod
    def _values(grid):
        return grid.values() if isinstance(grid, AngleGrid) else grid

    def to_domain(self, tol: Optional[float] = None) -> DirectionSample:
        if self.family is None:
            return make_direction_sample(self.vectors)
        rs = None if self.rs is None else self._values(self.rs)
        return family_directions(self.family, self._values(self.thetas), rs)


class PushforwardRequest(BaseModel):
    observable: ObservableSchema
    state: StateSchema


class ValidationReport(BaseModel):
    valid: bool
    min_eigenvalue: float
    message: str


class ClassificationReport(BaseModel):
    commutative: bool
    sharp: bool
    covariant: bool
    ic: bool
