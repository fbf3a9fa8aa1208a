from typing import Annotated, Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from app.config import settings
from app.schemas.bosonic import BosonicObservableSchema
from app.schemas.channel import ChannelSchema, DilationSchema
from app.schemas.fock import FockOperatorSchema
from app.schemas.observable import (
    DirectionsSchema,
    DistributionSchema,
    ObservableSchema,
    ObservableSetSchema,
)
from app.schemas.state import StateSchema

EntitySchema = Annotated[
    Union[
        StateSchema,
        ChannelSchema,
        DilationSchema,
        ObservableSchema,
        ObservableSetSchema,
        DistributionSchema,
        DirectionsSchema,
        FockOperatorSchema,
        BosonicObservableSchema,
    ],
    Field(discriminator="kind"),
]


# One library call: op name, arguments (entity names, inline entities or plain values)
class TaskSchema(BaseModel):
    op: str = Field(..., min_length=1)
    args: Dict[str, Any] = Field(default_factory=dict)
    output_name: Optional[str] = None


# Problem file: named entities plus an ordered task list
class ProblemFile(BaseModel):
    version: str
    entities: Dict[str, EntitySchema] = Field(default_factory=dict)
    tasks: List[TaskSchema] = Field(..., min_length=1)

    @field_validator("version")
    @classmethod
    def validate_version(cls, v):
        """Only known problem-file versions are accepted"""
        if v not in settings.PROBLEM_VERSIONS:
            raise ValueError(f"Unsupported problem version '{v}' (known: {', '.join(settings.PROBLEM_VERSIONS)})")
        return v

    @model_validator(mode="after")
    def validate_output_names(self):
        """Task outputs may not shadow entities or each other"""
        seen = set(self.entities)
        for task in self.tasks:
            if task.output_name is None:
                continue
            if task.output_name in seen:
                raise ValueError(f"Output name '{task.output_name}' is already defined")
            seen.add(task.output_name)
        return self
