from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import logging

from app.config import settings
from app.exceptions import GaussianToolkitError

# Set up logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)
logger = logging.getLogger(__name__)

app = FastAPI(
    title=settings.APP_NAME,
    description=settings.APP_DESCRIPTION,
    version=settings.APP_VERSION,
    docs_url="/api/docs",
    redoc_url="/api/redoc",
    openapi_url="/api/openapi.json",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

from app.routers import observables, problems

app.include_router(problems.router, prefix="/api", tags=["Problems"])
app.include_router(observables.router, prefix="/api", tags=["Observables"])


@app.exception_handler(GaussianToolkitError)
async def toolkit_error_handler(request: Request, exc: GaussianToolkitError):
    """Library errors that escape a route become 400 responses"""
    logger.warning(f"{request.url.path}: {type(exc).__name__}: {exc}")
    content = {"detail": str(exc), "error": type(exc).__name__}
    min_eigenvalue = getattr(exc, "min_eigenvalue", None)
    if min_eigenvalue is not None:
        content["min_eigenvalue"] = min_eigenvalue
    return JSONResponse(status_code=status.HTTP_400_BAD_REQUEST, content=content)


@app.on_event("startup")
async def startup_event():
    logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION} ({settings.ENVIRONMENT})")
    logger.info(f"Tolerance {settings.DEFAULT_TOL:g}, Fock cutoff {settings.FOCK_CUTOFF}")


@app.get("/api/health", tags=["Health"])
async def health_check():
    """Liveness plus the numeric defaults reports are computed with"""
    return {
        "status": "ok",
        "version": settings.APP_VERSION,
        "tol": settings.DEFAULT_TOL,
        "cutoff": settings.FOCK_CUTOFF,
        "problem_versions": settings.PROBLEM_VERSIONS,
    }


@app.get("/", tags=["Root"])
async def root():
    return {"message": f"Welcome to {settings.APP_NAME}", "docs_url": "/api/docs"}
