from fastapi import APIRouter

from app.schemas.observable import (
    ClassificationReport,
    DistributionSchema,
    ObservableSchema,
    PushforwardRequest,
    ValidationReport,
)
from app.services.observables import classify, pushforward, validate_observable

router = APIRouter(
    prefix="/observables",
    tags=["Observables"],
)

# Library errors (bad shapes, unphysical states) are turned into 400s by the
# application-level GaussianToolkitError handler.


@router.post("/validate", response_model=ValidationReport)
async def validate(observable: ObservableSchema):
    """
    Check the positivity condition B₀ − iA₀ᵀΩA₀ ≥ 0

    An observable that fails the check is still a 200 with valid = false.
    """
    result = validate_observable(observable.to_domain())
    return ValidationReport(valid=result.valid, min_eigenvalue=result.min_eigenvalue, message=result.message)


@router.post("/classify", response_model=ClassificationReport)
async def classify_observable(observable: ObservableSchema):
    """Commutative, sharp, covariant and informationally complete flags"""
    return ClassificationReport(**classify(observable.to_domain()).as_dict())


@router.post("/pushforward", response_model=DistributionSchema)
async def pushforward_distribution(request: PushforwardRequest):
    """
    Outcome distribution of measuring a Gaussian state

    Args:
        request: Observable and state

    Returns:
        Normal outcome law (mean and covariance)
    """
    dist = pushforward(request.observable.to_domain(), request.state.to_domain())
    return DistributionSchema.from_domain(dist)
