"""HTTP service wrapping the run drivers.

One POST endpoint per verb; requests carry the TOML configuration text
and responses return the artifact files as strings plus the would-be
process exit code, so clients (the CLI included) just write bytes to
disk. The service holds no state; determinism is inherited from the
drivers.
"""

from fastapi import FastAPI
from pydantic import BaseModel

from . import __version__
from .config import load_config
from .errors import ConfigurationError
from .runner import DRIVERS, EXIT_CONFIG

app = FastAPI(title="viscobeam", version=__version__)


class JobRequest(BaseModel):
    config_toml: str


class JobResponse(BaseModel):
    exit_code: int
    report: str
    files: dict[str, str]


def _handle(verb, req):
    try:
        cfg = load_config(req.config_toml)
    except ConfigurationError as exc:
        return JobResponse(exit_code=EXIT_CONFIG,
                           report=f"configuration error: {exc}\n", files={})
    out = DRIVERS[verb](cfg)
    return JobResponse(exit_code=out["exit_code"], report=out["report"],
                       files=out["files"])


@app.post("/run", response_model=JobResponse)
def post_run(req: JobRequest):
    return _handle("run", req)


@app.post("/verify", response_model=JobResponse)
def post_verify(req: JobRequest):
    return _handle("verify", req)


@app.post("/gamma", response_model=JobResponse)
def post_gamma(req: JobRequest):
    return _handle("gamma", req)


@app.post("/quadforms", response_model=JobResponse)
def post_quadforms(req: JobRequest):
    return _handle("quadforms", req)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}
