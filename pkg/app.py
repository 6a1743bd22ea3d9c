from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from prometheus_fastapi_instrumentator import Instrumentator
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

from constants import VERSION
from services.experiment_service import ExperimentService
from utils.common import mask_to_image, pil_image_to_base64, provenance
from utils.data_types import (
    AsymptoteRequest,
    DensityRequest,
    ExpectedRequest,
    LemniscateRequest,
    MonteCarloRequest,
    SampleRequest,
    SelftestRequest,
)
from utils.errors import DomainError, HarmonicZerosError
from utils.settings import HZ_ALLOWED_ORIGINS, HZ_LOG_LEVEL, HZ_RATE_LIMIT, HZ_SEED, configure_logging

configure_logging(HZ_LOG_LEVEL)


def get_api_key(request: Request):
    return request.headers.get("API_KEY", get_remote_address(request))


limiter = Limiter(key_func=get_api_key)

app = FastAPI(title="harmonic-zeros", version=VERSION)
app.state.limiter = limiter
app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)
app.add_middleware(
    CORSMiddleware,
    allow_origins=HZ_ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)
Instrumentator().instrument(app).expose(app)

service = ExperimentService()


@app.exception_handler(HarmonicZerosError)
async def harmonic_zeros_error_handler(request: Request, exc: HarmonicZerosError):
    # DegreeError, PhaseBoundaryError and RadiusError are DomainErrors
    status_code = 422 if isinstance(exc, DomainError) else 500
    return JSONResponse(status_code=status_code, content={"detail": str(exc)})


@app.get("/api/v1/version")
def version(request: Request):
    return {"version": VERSION}


@app.post("/api/v1/expected")
@limiter.limit(HZ_RATE_LIMIT)
def expected(request: Request, data: ExpectedRequest):
    rows = service.expected_rows(data.n, m=data.m, alpha=data.alpha, model=data.model, quadrature=data.quadrature)
    return {"meta": provenance(data.model_dump(mode="json")), "header": service.HEADERS["expected"], "rows": rows}


@app.post("/api/v1/density")
@limiter.limit(HZ_RATE_LIMIT)
def density(request: Request, data: DensityRequest):
    spec = service.make_spec(data.n, m=data.m)
    rows = service.density_rows(spec.n, spec.m, data.r_grid)
    return {"meta": provenance(data.model_dump(mode="json")), "header": service.HEADERS["density"], "rows": rows}


@app.post("/api/v1/asymptote")
@limiter.limit(HZ_RATE_LIMIT)
def asymptote(request: Request, data: AsymptoteRequest):
    meta = provenance(data.model_dump(mode="json"))
    if not data.n:
        return {"meta": meta, "header": service.HEADERS["constants"], "rows": service.constant_rows(data.alpha)}
    rows, fits = service.asymptote_rows(data.alpha, data.n, data.quadrature)
    return {"meta": meta, "header": service.HEADERS["asymptote"], "rows": rows, "fits": fits}


@app.post("/api/v1/montecarlo")
@limiter.limit(HZ_RATE_LIMIT)
def montecarlo(request: Request, data: MonteCarloRequest):
    spec = service.make_spec(data.n, m=data.m, alpha=data.alpha, model=data.model, seed=data.seed)
    document, _ = service.montecarlo(spec, data.trials, data.solver)
    return {"meta": provenance(data.model_dump(mode="json")), **document}


@app.post("/api/v1/sample")
@limiter.limit(HZ_RATE_LIMIT)
def sample(request: Request, data: SampleRequest):
    spec = service.make_spec(data.n, m=data.m, alpha=data.alpha, model=data.model, seed=data.seed)
    document = service.sample_document(spec, data.stream, data.find_zeros, data.solver)
    return {"meta": provenance(data.model_dump(mode="json")), **document}


@app.post("/api/v1/lemniscate")
@limiter.limit(HZ_RATE_LIMIT)
def lemniscate(request: Request, data: LemniscateRequest):
    spec = service.make_spec(data.n, m=data.m, alpha=data.alpha, model=data.model, seed=data.seed)
    document, mask, _ = service.lemniscate(spec, data.stream, data.window, data.full_disk)
    if data.image:
        document["image"] = pil_image_to_base64(mask_to_image(mask))
    return {"meta": provenance(data.model_dump(mode="json")), **document}


@app.post("/api/v1/selftest")
@limiter.limit(HZ_RATE_LIMIT)
def selftest(request: Request, data: SelftestRequest):
    return {"meta": provenance(data.model_dump(mode="json")), **service.selftest(seed=HZ_SEED, quick=data.quick)}
