from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from app.schemas.state import Matrix, StateSchema, Vector
from app.services.channels import (
    DilationSpec,
    GaussianChannel,
    attenuator,
    eight_port_dilation,
    identity_channel,
    make_channel,
    make_dilation,
)
from app.utils.helpers import check_rectangular, check_square


# Gaussian channel entity; B is split into real and imaginary parts
class ChannelSchema(BaseModel):
    kind: Literal["channel"] = "channel"
    preset: Optional[Literal["identity", "attenuator"]] = None
    n_modes: int = Field(1, ge=1)
    in_modes: Optional[int] = Field(None, ge=1)
    out_modes: Optional[int] = Field(None, ge=1)
    eta: float = Field(1.0, ge=0, le=1)
    a: Optional[Matrix] = None
    b_re: Optional[Matrix] = None
    b_im: Optional[Matrix] = None
    v: Optional[Vector] = None

    @field_validator("a")
    @classmethod
    def validate_a(cls, a):
        return check_rectangular(a, "A")

    @field_validator("b_re", "b_im")
    @classmethod
    def validate_b(cls, b):
        return check_square(b, "B")

    @model_validator(mode="after")
    def validate_parameters(self):
        """Explicit channels need A, B and v; in_modes and out_modes must match A"""
        if self.preset is None and (self.a is None or self.b_re is None or self.v is None):
            raise ValueError("A channel needs either a preset or a, b_re and v")
        if self.a and self.preset is None:
            if self.in_modes is not None and len(self.a) != 2 * self.in_modes:
                raise ValueError(f"a has {len(self.a)} rows, expected {2 * self.in_modes} for in_modes")
            if self.out_modes is not None and len(self.a[0]) != 2 * self.out_modes:
                raise ValueError(f"a has {len(self.a[0])} columns, expected {2 * self.out_modes} for out_modes")
        return self

    def to_domain(self, tol: Optional[float] = None) -> GaussianChannel:
        if self.preset == "identity":
            return identity_channel(self.n_modes)
        if self.preset == "attenuator":
            return attenuator(self.eta, self.n_modes)
        b = np.asarray(self.b_re, dtype=float)
        if self.b_im is not None:
            b = b + 1j * np.asarray(self.b_im, dtype=float)
        return make_channel(self.a, b, self.v, tol)

    @classmethod
    def from_domain(cls, ch: GaussianChannel) -> "ChannelSchema":
        return cls(
            in_modes=ch.in_modes,
            out_modes=ch.out_modes,
            a=ch.a.tolist(),
            b_re=ch.b.real.tolist(),
            b_im=ch.b.imag.tolist(),
            v=ch.v.tolist(),
        )


# Symplectic dilation entity (system ⊗ ancilla, first kept_modes homodyned)
class DilationSchema(BaseModel):
    kind: Literal["dilation"] = "dilation"
    preset: Optional[Literal["eight_port"]] = None
    s: Optional[Matrix] = None
    d: Optional[Vector] = None
    ancilla: Optional[StateSchema] = None
    kept_modes: Optional[int] = Field(None, ge=1)

    @field_validator("s")
    @classmethod
    def validate_s(cls, s):
        return check_square(s, "S")

    @model_validator(mode="after")
    def validate_parameters(self):
        if self.preset is None and self.s is None:
            raise ValueError("A dilation needs either a preset or the symplectic matrix s")
        return self

    def to_domain(self, tol: Optional[float] = None) -> DilationSpec:
        ancilla = None if self.ancilla is None else self.ancilla.to_domain(tol)
        if self.preset == "eight_port":
            return eight_port_dilation(ancilla)
        return make_dilation(self.s, self.d, ancilla, self.kept_modes, tol)
