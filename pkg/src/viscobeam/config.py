"""Run configuration: TOML ingestion, validation, canonical serialization.

The schema is strict (unknown keys rejected) and every numeric range is
validated at load time. Serialization of resolved configurations and
manifests is canonical — sorted keys, fixed float formatting with 17
significant digits — so identical runs produce identical bytes.
"""

import hashlib

import tomli
from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import ConfigurationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MaterialSection(_Section):
    kind: str = "svk_zero_poisson"
    mu: float = 1.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lam: float = 0.0
    c1: float = 1.0
    p: float = 4.0


class ModelSection(_Section):
    r: float = 0.0
    l: float = 1.0
    alpha: float = 0.5


class MeshSection(_Section):
    n_elems: int = 16
    n_plot: int = 101


class FlowSection(_Section):
    tau: float = 0.01
    T: float = 1.0
    newton_tol: float = 1e-10
    max_iter: int = 50
    snapshot_stride: int = 10


class DimredSection(_Section):
    h_list: list[float] = [0.2, 0.1, 0.05]
    n1: int = 24
    n2: int = 6
    n3: int = 6


class BoundarySection(_Section):
    kind: str = "clamped"
    xi1_left: float = 0.0
    xi1_right: float = 0.0
    xi2_left: float = 0.0
    xi2_right: float = 0.0
    dxi2_left: float = 0.0
    dxi2_right: float = 0.0
    xi3_left: float = 0.0
    xi3_right: float = 0.0
    dxi3_left: float = 0.0
    dxi3_right: float = 0.0


class ForceSection(_Section):
    # Polynomial coefficients of f1d(x) = sum coeffs[k] x^k.
    coeffs: list[float] = []


class InitialSection(_Section):
    # Amplitudes of the standard smooth initial datum.
    xi1: float = 0.0
    xi2: float = 0.0
    xi3: float = 0.1
    theta: float = 0.1


class RunConfig(_Section):
    material: MaterialSection = MaterialSection()
    model: ModelSection = ModelSection()
    mesh: MeshSection = MeshSection()
    flow: FlowSection = FlowSection()
    dimred: DimredSection = DimredSection()
    boundary: BoundarySection = BoundarySection()
    force: ForceSection = ForceSection()
    initial: InitialSection = InitialSection()
    seed: int = 0


def _validate_ranges(cfg):
    checks = [
        (cfg.material.mu > 0, "material.mu must be positive"),
        (cfg.material.p > 3, "material.p must exceed 3"),
        (cfg.material.c1 > 0, "material.c1 must be positive"),
        (cfg.model.r >= 0, "model.r must be nonnegative"),
        (cfg.model.l > 0, "model.l must be positive"),
        (0 < cfg.model.alpha < 1, "model.alpha must lie in (0, 1)"),
        (cfg.mesh.n_elems >= 4, "mesh.n_elems must be at least 4"),
        (cfg.mesh.n_plot >= 2, "mesh.n_plot must be at least 2"),
        (cfg.flow.tau > 0, "flow.tau must be positive"),
        (cfg.flow.T > 0, "flow.T must be positive"),
        (cfg.flow.tau <= cfg.flow.T, "flow.tau must not exceed flow.T"),
        (cfg.flow.newton_tol > 0, "flow.newton_tol must be positive"),
        (cfg.flow.max_iter >= 1, "flow.max_iter must be at least 1"),
        (cfg.flow.snapshot_stride >= 1,
         "flow.snapshot_stride must be at least 1"),
        (len(cfg.dimred.h_list) >= 1, "dimred.h_list must be nonempty"),
        (all(0 < h < 1 for h in cfg.dimred.h_list),
         "dimred.h_list entries must lie in (0, 1)"),
        (all(a > b for a, b in zip(cfg.dimred.h_list, cfg.dimred.h_list[1:])),
         "dimred.h_list must be strictly decreasing"),
        (cfg.dimred.n1 >= 2 and cfg.dimred.n2 >= 2 and cfg.dimred.n3 >= 2,
         "dimred quadrature sizes must be at least 2"),
        (cfg.boundary.kind in ("clamped", "free"),
         "boundary.kind must be 'clamped' or 'free'"),
        (cfg.seed >= 0, "seed must be nonnegative"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigurationError(msg)


def load_config(text):
    """Parse and validate a TOML configuration string."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"TOML parse error: {exc}") from exc
    try:
        cfg = RunConfig(**raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ConfigurationError(f"config field {loc}: {first['msg']}") from exc
    _validate_ranges(cfg)
    return cfg


def load_config_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return load_config(fh.read())


# ---------------------------------------------------------------------------
# Canonical serialization


def _canon(obj):
    if isinstance(obj, dict):
        items = sorted(obj.items())
        inner = ",".join(f"{_canon(str(k))}:{_canon(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return f"{obj:.17g}"
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if obj is None:
        return "null"
    raise TypeError(f"cannot canonicalize {type(obj)}")


def canonical_json(obj):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    return _canon(obj)


def config_hash(cfg):
    """SHA-256 of the canonically serialized resolved configuration."""
    blob = canonical_json(cfg.model_dump())
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def format_float(x):
    """Shortest round-trip decimal representation, for CSV cells."""
    return repr(float(x))
