from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.schemas.state import Matrix, Vector
from app.services.fock_oracle import (
    FockOperator,
    coherent_state,
    make_density,
    number_state,
    squeezed_state,
)
from app.utils.helpers import check_square


# Single-mode density matrix in a truncated number basis
class FockOperatorSchema(BaseModel):
    kind: Literal["fock"] = "fock"
    preset: Optional[Literal["number", "coherent", "squeezed"]] = None
    cutoff: Optional[int] = Field(None, ge=2)
    n: int = Field(0, ge=0)
    m: Optional[Vector] = None
    r: float = 0.0
    re: Optional[Matrix] = None
    im: Optional[Matrix] = None

    @model_validator(mode="after")
    def validate_parameters(self):
        """Explicit operators need the real part, with matching imaginary part and cutoff"""
        if self.preset is None:
            if self.re is None:
                raise ValueError("A Fock operator needs either a preset or its real part re")
            check_square(self.re, "re")
            if self.im is not None and (len(self.im) != len(self.re) or check_square(self.im, "im") is None):
                raise ValueError("im must have the same shape as re")
            if self.cutoff is not None and self.cutoff != len(self.re):
                raise ValueError(f"Declared cutoff {self.cutoff} does not match the matrix size {len(self.re)}")
        if self.preset == "coherent" and self.m is None:
            raise ValueError("Coherent state needs its displacement m")
        return self

    def to_domain(self, cutoff: Optional[int] = None) -> FockOperator:
        cutoff = self.cutoff if self.cutoff is not None else cutoff
        if self.preset == "number":
            return number_state(self.n, cutoff)
        if self.preset == "coherent":
            return coherent_state(self.m, cutoff)
        if self.preset == "squeezed":
            return squeezed_state(self.r, cutoff)
        matrix = np.asarray(self.re, dtype=float)
        if self.im is not None:
            matrix = matrix + 1j * np.asarray(self.im, dtype=float)
        return make_density(matrix)

    @classmethod
    def from_domain(cls, rho: FockOperator) -> "FockOperatorSchema":
        return cls(cutoff=rho.cutoff, re=rho.matrix.real.tolist(), im=rho.matrix.imag.tolist())
