from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.services.states import GaussianState, coherent, make_state, squeezed_vacuum, thermal, vacuum
from app.utils.helpers import check_square

Vector = List[float]
Matrix = List[List[float]]


# Gaussian state entity: explicit (m, V) or a named preset
class StateSchema(BaseModel):
    kind: Literal["state"] = "state"
    preset: Optional[Literal["vacuum", "coherent", "squeezed", "thermal"]] = None
    n_modes: int = Field(1, ge=1)
    m: Optional[Vector] = None
    v: Optional[Matrix] = None
    r: float = 0.0
    theta: float = 0.0
    nbar: float = Field(0.0, ge=0)

    @field_validator("v")
    @classmethod
    def validate_v(cls, v):
        """Covariance must be a square matrix"""
        return check_square(v, "V")

    @model_validator(mode="after")
    def validate_parameters(self):
        """Explicit states need both m and V; coherent states need m"""
        if self.preset is None and (self.m is None or self.v is None):
            raise ValueError("A state needs either a preset or both m and v")
        if self.preset == "coherent" and self.m is None:
            raise ValueError("Coherent state needs its displacement m")
        return self

    def to_domain(self, tol: Optional[float] = None) -> GaussianState:
        if self.preset == "vacuum":
            return vacuum(self.n_modes)
        if self.preset == "coherent":
            return coherent(self.m)
        if self.preset == "squeezed":
            return squeezed_vacuum(self.r, self.theta)
        if self.preset == "thermal":
            return thermal(self.n_modes, self.nbar)
        return make_state(self.m, self.v, tol)

    @classmethod
    def from_domain(cls, state: GaussianState) -> "StateSchema":
        return cls(n_modes=state.n_modes, m=state.m.tolist(), v=state.v.tolist())
