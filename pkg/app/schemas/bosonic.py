from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config import settings
from app.schemas.fock import FockOperatorSchema
from app.schemas.state import Matrix, Vector
from app.services.bosonic import (
    BosonicObservable,
    GridSpec,
    Noise,
    covariant_fock,
    make_noise,
    smeared_gaussian,
)
from app.utils.helpers import check_rectangular


# Classical noise whose characteristic function multiplies f0
class NoiseSchema(BaseModel):
    kind: Literal["gaussian", "fejer", "notch"]
    c: Optional[Matrix] = None
    d: Optional[Vector] = None
    width: Optional[float] = Field(None, gt=0)
    centers: Optional[Matrix] = None
    radius: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def validate_parameters(self):
        required = {"gaussian": "c", "fejer": "width", "notch": "centers"}[self.kind]
        if getattr(self, required) is None:
            raise ValueError(f"{self.kind} noise needs {required}")
        if self.kind == "notch" and self.radius is None:
            raise ValueError("notch noise needs radius")
        return self

    def to_domain(self, tol: Optional[float] = None) -> Noise:
        return make_noise(self.kind, c=self.c, d=self.d, width=self.width, centers=self.centers,
                          radius=self.radius, tol=tol)


# Bosonic observable W(A0 p) f0(p) of one of the two supported families
class BosonicObservableSchema(BaseModel):
    kind: Literal["bosonic"] = "bosonic"
    family: Literal["smeared_gaussian", "covariant_fock"]
    a0: Optional[Matrix] = None
    b0: Optional[Matrix] = None
    v0: Optional[Vector] = None
    noise: Optional[NoiseSchema] = None
    sigma: Optional[Union[str, FockOperatorSchema]] = None

    @field_validator("a0")
    @classmethod
    def validate_a0(cls, a0):
        return check_rectangular(a0, "A0")

    @model_validator(mode="after")
    def validate_parameters(self):
        if self.family == "smeared_gaussian" and (self.a0 is None or self.b0 is None):
            raise ValueError("A smeared Gaussian observable needs a0 and b0")
        if self.family == "covariant_fock" and self.sigma is None:
            raise ValueError("A Fock-generated covariant observable needs sigma")
        return self

    def to_domain(self, tol: Optional[float] = None, sigma=None) -> BosonicObservable:
        """``sigma`` overrides a referenced density matrix resolved by the caller"""
        if self.family == "covariant_fock":
            if sigma is None:
                sigma = self.sigma.to_domain()
            return covariant_fock(sigma)
        noise = None if self.noise is None else self.noise.to_domain(tol)
        return smeared_gaussian(self.a0, self.b0, self.v0, noise, tol)


class GridSchema(BaseModel):
    points: int = Field(settings.BOSONIC_GRID_POINTS, ge=3)
    half_width: float = Field(settings.BOSONIC_GRID_HALF_WIDTH, gt=0)

    def to_domain(self) -> GridSpec:
        return GridSpec(points=self.points, half_width=self.half_width)
