from app.schemas.state import Matrix, StateSchema, Vector

from app.schemas.channel import ChannelSchema, DilationSchema

from app.schemas.observable import (
    AngleGrid, ClassificationReport, DirectionsSchema, DistributionSchema,
    ObservableSchema, ObservableSetSchema, PushforwardRequest, ValidationReport
)

from app.schemas.fock import FockOperatorSchema

from app.schemas.bosonic import BosonicObservableSchema, GridSchema, NoiseSchema

from app.schemas.problem import EntitySchema, ProblemFile, TaskSchema
