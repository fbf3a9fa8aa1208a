import json
import logging
from typing import Optional

from fastapi import APIRouter, HTTPException, Query, status
from fastapi.responses import Response

from app.exceptions import ProblemValidationError, TaskExecutionError
from app.schemas.problem import ProblemFile
from app.services.tasks import RunOptions, run_problem
from app.utils.helpers import canonical_dumps

# Set up logging
logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/problems",
    tags=["Problems"],
)


@router.post("/run")
async def run(
    problem: ProblemFile,
    seed: int = 0,
    tol: Optional[float] = Query(None, gt=0),
    cutoff: Optional[int] = Query(None, ge=2),
    timing: bool = False,
    op: Optional[str] = None,
):
    """
    Run a problem file and return its report

    Args:
        problem: Parsed problem file
        seed: Seed for sampling tasks
        tol: Numerical tolerance override
        cutoff: Fock cutoff override
        timing: Record per-task wall-clock times (timing_s is null otherwise)
        op: Run only the tasks with this op

    Returns:
        Canonical JSON report

    Raises:
        HTTPException: 422 for an invalid problem, 400 with the partial report
            when a task fails
    """
    options = RunOptions(seed=seed, tol=tol, cutoff=cutoff, timing=timing)
    try:
        report = run_problem(problem, options, only_op=op)
    except ProblemValidationError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=str(exc)
        )
    except TaskExecutionError as exc:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail={
                "message": str(exc),
                "task_index": exc.task_index,
                "op": exc.op,
                "report": json.loads(canonical_dumps(exc.partial_report or {})),
            }
        )

    logger.info(f"Ran problem with {len(report['tasks'])} task(s)")
    return Response(content=canonical_dumps(report), media_type="application/json")
