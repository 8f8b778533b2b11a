"""
FastAPI application for phasequant.
Exposes spectra, Cornell tables and the contour-identity check over HTTP.
"""
import logging
from contextlib import asynccontextmanager
from typing import Any, Dict

from fastapi import FastAPI, HTTPException, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .config import configure_logging
from .errors import BoundStateError, ConfigurationError, DomainViolationError, PhaseQuantError
from .models import CornellConfig, RunConfig
from .service import quant_service

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan manager.
    Configures logging and runs the harmonic self-check on startup.
    """
    configure_logging()
    result = quant_service.health_check()
    if result["status"] == "ok":
        logger.info("self-check passed: E0=%r", result["ground_state"])
    else:
        logger.warning("self-check %s: %s", result["status"], result["message"])

    yield

    logger.info("shutting down")


app = FastAPI(
    title="phasequant API",
    description="Semiclassical exact quantization: spectra, wavefunctions and Cornell checks",
    version=__version__,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def status_for(error: PhaseQuantError) -> int:
    """HTTP status of a phasequant error."""
    if isinstance(error, ConfigurationError):
        return status.HTTP_400_BAD_REQUEST
    if isinstance(error, (DomainViolationError, BoundStateError)):
        return status.HTTP_422_UNPROCESSABLE_ENTITY
    return status.HTTP_500_INTERNAL_SERVER_ERROR


@app.exception_handler(PhaseQuantError)
async def phasequant_error_handler(request: Request, exc: PhaseQuantError) -> JSONResponse:
    logger.warning("%s on %s: %s", exc.kind, request.url.path, exc.message)
    return JSONResponse(status_code=status_for(exc), content={"detail": exc.to_dict()})


@app.get("/", tags=["Root"])
async def root():
    """Root endpoint - API information."""
    return {
        "service": "phasequant API",
        "version": __version__,
        "status": "running",
        "endpoints": {
            "health": "/health",
            "spectrum": "/spectrum",
            "cornell": "/cornell/spectrum",
            "identity": "/cornell/identity",
            "docs": "/docs",
        },
    }


@app.get("/health", tags=["Health"])
async def health_check():
    """
    Health check endpoint.
    Quantizes the harmonic ground state.
    """
    result = quant_service.health_check()
    if result["status"] == "error":
        raise HTTPException(status_code=status.HTTP_503_SERVICE_UNAVAILABLE, detail=result["message"])
    return result


@app.post("/spectrum", tags=["Quantization"])
def post_spectrum(config: RunConfig) -> Dict[str, Any]:
    """
    Levels 0..n_max for the posted problem.

    A level that fails ends the list; its structured error is returned in
    `error` and the response status reflects the error class.
    """
    report = quant_service.spectrum(config.model_copy(update={"command": "spectrum"}))
    body = report.model_dump(mode="json", exclude_none=True)
    if report.error is None:
        return body
    code = {1: status.HTTP_400_BAD_REQUEST, 3: status.HTTP_422_UNPROCESSABLE_ENTITY}.get(
        report.error.exit_code, status.HTTP_500_INTERNAL_SERVER_ERROR
    )
    return JSONResponse(status_code=code, content=body)


@app.post("/cornell/spectrum", tags=["Cornell"])
def post_cornell_spectrum(cornell: CornellConfig) -> Dict[str, Any]:
    """Closed-form and numeric Cornell levels with the Regge table."""
    return quant_service.cornell_table(RunConfig(command="cornell", cornell=cornell))


@app.post("/cornell/identity", tags=["Cornell"])
def post_cornell_identity(sweeps: int = 20, seed: int = 0) -> Dict[str, Any]:
    """Contour identity over seeded random parameter sets."""
    if sweeps < 1:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="sweeps must be at least 1")
    config = RunConfig(command="identity-check", sweeps=sweeps, seed=seed)
    return quant_service.identity_check(config).model_dump(mode="json")


# Development server runner
if __name__ == "__main__":
    import uvicorn

    from .config import get_settings

    uvicorn.run("src.phasequant.main:app", host=get_settings().host, port=get_settings().port, reload=True)
