"""Run orchestration: build the discrete problem from a configuration,
execute the requested driver, and render deterministic artifacts.

Drivers return {"exit_code": int, "files": {name: text}, "report": str}.
Artifacts are byte-stable for a fixed configuration and seed: canonical
JSON for manifests/snapshots, shortest round-trip floats in CSV, and the
config hash in every file header. Timing is deliberately kept out of all
artifacts.
"""

import math

import numpy as np

from . import __version__
from .beam1d import Beam1D
from .config import canonical_json, config_hash, format_float
from .dimred import ScaledGeometry, gamma_table, make_grid
from .errors import ConfigurationError, ViscobeamError
from .fem import make_mesh
from .flow import FlowSpace, edb_deficit, local_slope, run_flow
from .material import MaterialModel, eval_W
from .quadforms import reduced_forms
from .tensors import random_rotation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# ---------------------------------------------------------------------------
# Problem construction


def make_material(cfg):
    m = cfg.material
    return MaterialModel(kind_W=m.kind, mu=m.mu, lambda2=m.lambda2,
                         lambda3=m.lambda3, lam=m.lam, c1=m.c1, p=m.p)


def make_force(cfg):
    coeffs = cfg.force.coeffs
    if not coeffs:
        return None
    poly = np.polynomial.Polynomial(coeffs)
    return lambda x: float(poly(x))


def smooth_initial_fields(cfg):
    """The standard smooth initial datum.

    xi1 is a half sine, xi2/xi3 quartic bumps with zero value and slope
    at the clamped ends, theta a C^1 bump compactly supported away from
    the outermost two elements on each side (so its P1 interpolant
    vanishes identically there, as the recovery ansatz requires).
    """
    l = cfg.model.l
    a = cfg.initial
    n = cfg.mesh.n_elems
    s0 = 2.0 / n
    s1 = 1.0 - 2.0 / n
    norm = ((s1 - s0) ** 2 / 4.0) ** 2

    def xi1(x):
        return a.xi1 * math.sin(math.pi * (x / l + 0.5))

    def bump(x):
        u = 2.0 * x / l
        return (1.0 - u * u) ** 2

    def dbump(x):
        u = 2.0 * x / l
        return -8.0 * u * (1.0 - u * u) / l

    def theta(x):
        s = x / l + 0.5
        if s <= s0 or s >= s1:
            return 0.0
        return a.theta * ((s - s0) * (s1 - s)) ** 2 / norm

    return {
        "xi1": xi1,
        "xi2": lambda x: a.xi2 * bump(x),
        "dxi2": lambda x: a.xi2 * dbump(x),
        "xi3": lambda x: a.xi3 * bump(x),
        "dxi3": lambda x: a.xi3 * dbump(x),
        "theta": theta,
    }


def apply_boundary(beam, z, cfg):
    """Overwrite the constrained DOFs with the configured trace values."""
    if cfg.boundary.kind != "clamped":
        return z
    b = cfg.boundary
    h = beam.mesh.h
    n = beam.n_nodes
    z = z.copy()
    s = beam.slices["xi1"]
    z[s.start] = b.xi1_left
    z[s.start + n - 1] = b.xi1_right
    s = beam.slices["xi2"]
    z[s.start:s.start + 2] = [b.xi2_left, h * b.dxi2_left]
    z[s.start + 2 * n - 2:s.start + 2 * n] = [b.xi2_right, h * b.dxi2_right]
    s = beam.slices["xi3"]
    z[s.start:s.start + 2] = [b.xi3_left, h * b.dxi3_left]
    z[s.start + 2 * n - 2:s.start + 2 * n] = [b.xi3_right, h * b.dxi3_right]
    s = beam.slices["theta"]
    z[s.start] = 0.0
    z[s.start + n - 1] = 0.0
    return z


def build_problem(cfg):
    """(material, form_w, form_r, beam, z0, space, force) from a config."""
    material = make_material(cfg)
    form_w, form_r = reduced_forms(material)
    mesh = make_mesh(cfg.model.l, cfg.mesh.n_elems)
    force = make_force(cfg)
    beam = Beam1D(mesh, form_w, form_r, r=cfg.model.r, force=force)
    fields = smooth_initial_fields(cfg)
    z0 = beam.interpolate(xi1=fields["xi1"], xi2=fields["xi2"],
                          dxi2=fields["dxi2"], xi3=fields["xi3"],
                          dxi3=fields["dxi3"], theta=fields["theta"])
    z0 = apply_boundary(beam, z0, cfg)
    space = FlowSpace.from_beam(beam,
                                beam.free_mask(cfg.boundary.kind == "clamped"))
    return material, form_w, form_r, beam, z0, space, force


# ---------------------------------------------------------------------------
# Artifact rendering


def quadform_fragment(form_w, form_r):
    return {
        "C0_W": form_w.c0,
        "Cstar_W": form_w.cstar,
        "Q1_W": [list(map(float, row)) for row in form_w.q1],
        "H_holds_W": form_w.holds,
        "H_residual_W": form_w.h_residual,
        "C0_R": form_r.c0,
        "Cstar_R": form_r.cstar,
        "Q1_R": [list(map(float, row)) for row in form_r.q1],
        "H_holds_R": form_r.holds,
        "H_residual_R": form_r.h_residual,
    }


def make_manifest(cfg, form_w, form_r):
    geoms = [ScaledGeometry(h=h, r=cfg.model.r, alpha=cfg.model.alpha,
                            p=cfg.material.p) for h in cfg.dimred.h_list]
    manifest = {
        "artifact_version": __version__,
        "config_hash": config_hash(cfg),
        "config": cfg.model_dump(),
        "quadforms": quadform_fragment(form_w, form_r),
        "scaling_schedule": [
            {"h": g.h, "delta_h": g.delta, "eps_h": g.eps, "zeta_h": g.zeta}
            for g in geoms
        ],
    }
    return canonical_json(manifest)


def state_record(beam, z, cfg):
    return {
        "mesh": {"length": beam.mesh.length, "n_elems": beam.mesh.n_elems},
        "r": cfg.model.r,
        "boundary": cfg.boundary.model_dump(),
        "xi1": [float(v) for v in z[beam.slices["xi1"]]],
        "xi2": [float(v) for v in z[beam.slices["xi2"]]],
        "xi3": [float(v) for v in z[beam.slices["xi3"]]],
        "theta": [float(v) for v in z[beam.slices["theta"]]],
    }


def _csv(header_cols, rows, chash):
    lines = [f"# config {chash}", ",".join(header_cols)]
    for row in rows:
        lines.append(",".join(
            format_float(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def ledger_csv(traj, chash):
    cols = ("n", "t", "phi", "D_increment", "metric_derivative", "slope",
            "edb_partial", "newton_iters", "newton_residual")
    rows = [(r.n, r.t, r.phi, r.d_increment, r.metric_derivative, r.slope,
             r.edb_partial, r.newton_iters, r.newton_residual)
            for r in traj.ledger]
    return _csv(cols, rows, chash)


def fields_csv(beam, z, n_plot, chash):
    x = np.linspace(beam.mesh.nodes[0], beam.mesh.nodes[-1], n_plot)
    rows = []
    vals = {name: beam.eval_field(z, name, x) for name in
            ("xi1", "xi2", "xi3", "theta")}
    for i, xi in enumerate(x):
        rows.append((float(xi), float(vals["xi1"][i]), float(vals["xi2"][i]),
                     float(vals["xi3"][i]), float(vals["theta"][i])))
    return _csv(("x1", "xi1", "xi2", "xi3", "theta"), rows, chash)


def gamma_csv(rows, chash):
    cols = ("h", "delta_h", "eps_h", "zeta_h", "phi_h", "phi0", "err_energy",
            "err_metric", "err_u3", "err_theta", "penalty_term")
    return _csv(cols, [tuple(float(row[c]) for c in cols) for row in rows],
                chash)


# ---------------------------------------------------------------------------
# Drivers


def _guard(fn):
    try:
        return fn()
    except ConfigurationError as exc:
        return {"exit_code": EXIT_CONFIG, "files": {},
                "report": f"configuration error: {exc}\n"}
    except ViscobeamError as exc:
        return {"exit_code": EXIT_NUMERICAL, "files": {},
                "report": f"numerical error: {exc}\n"}


def run_driver(cfg):
    """Flow run: manifest, EDB ledger, field samples, state snapshots."""

    def inner():
        _, form_w, form_r, beam, z0, space, _ = build_problem(cfg)
        chash = config_hash(cfg)
        traj = run_flow(space, z0, cfg.flow.tau, cfg.flow.T,
                        newton_tol=cfg.flow.newton_tol,
                        max_iter=cfg.flow.max_iter)
        files = {
            "manifest.json": make_manifest(cfg, form_w, form_r),
            "ledger.csv": ledger_csv(traj, chash),
            "fields.csv": fields_csv(beam, traj.states[-1], cfg.mesh.n_plot,
                                     chash),
        }
        stride = cfg.flow.snapshot_stride
        last = len(traj.states) - 1
        for n, z in enumerate(traj.states):
            if n % stride == 0 or n == last:
                files[f"snapshot_{n:06d}.json"] = canonical_json(
                    state_record(beam, z, cfg))
        report = (f"flow run complete: {last} steps, "
                  f"edb_deficit={edb_deficit(traj):.6e}\n")
        return {"exit_code": EXIT_OK, "files": files, "report": report}

    return _guard(inner)


def gamma_driver(cfg):
    """Gamma-convergence table over the configured h-sequence."""

    def inner():
        material, form_w, form_r, beam, z0, _, force = build_problem(cfg)
        chash = config_hash(cfg)
        geoms = [ScaledGeometry(h=h, r=cfg.model.r, alpha=cfg.model.alpha,
                                p=cfg.material.p) for h in cfg.dimred.h_list]
        for g in geoms:
            if not g.check_invariants():
                raise ConfigurationError(
                    f"penalty-scale invariants violated at h={g.h}")
        grid = make_grid(beam.mesh, cfg.dimred.n1, cfg.dimred.n2,
                         cfg.dimred.n3)
        rows = gamma_table(beam, z0, material, geoms, force=force, grid=grid)
        files = {
            "manifest.json": make_manifest(cfg, form_w, form_r),
            "gamma.csv": gamma_csv(rows, chash),
        }
        report = "gamma table complete: " + ", ".join(
            f"h={row['h']:g} err={row['err_energy']:.3e}" for row in rows) + "\n"
        return {"exit_code": EXIT_OK, "files": files, "report": report}

    return _guard(inner)


def quadforms_driver(cfg):
    """Quadratic-form constants as a manifest fragment."""

    def inner():
        material = make_material(cfg)
        form_w, form_r = reduced_forms(material)
        blob = canonical_json({
            "config_hash": config_hash(cfg),
            "quadforms": quadform_fragment(form_w, form_r),
        })
        report = (f"C0_W={form_w.c0:.12g} Cstar_W={form_w.cstar:.12g} "
                  f"C0_R={form_r.c0:.12g} Cstar_R={form_r.cstar:.12g} "
                  f"H_W={form_w.holds} H_R={form_r.holds}\n")
        return {"exit_code": EXIT_OK, "files": {"quadforms.json": blob},
                "report": report}

    return _guard(inner)


# ---------------------------------------------------------------------------
# Verify suite


def _verify_checks(cfg):
    rng = np.random.default_rng(cfg.seed)
    material, form_w, form_r, beam, z0, space, _ = build_problem(cfg)
    checks = []

    # Frame indifference of the stored energy.
    worst = 0.0
    for _ in range(20):
        q = random_rotation(rng)
        f = np.eye(3) + 0.05 * rng.standard_normal((3, 3))
        worst = max(worst, abs(eval_W(material, q @ f)[0]
                               - eval_W(material, f)[0]))
    checks.append(("material frame indifference", worst < 1e-12,
                   f"max |W(QF)-W(F)| = {worst:.3e}"))

    # Closed-form W gradient against central differences.
    f = np.eye(3) + 0.05 * rng.standard_normal((3, 3))
    _, grad, _ = eval_W(material, f, order=1)
    step = 1e-6
    fd = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            fp = f.copy(); fp[i, j] += step
            fm = f.copy(); fm[i, j] -= step
            fd[i, j] = (eval_W(material, fp)[0] - eval_W(material, fm)[0]) / (2 * step)
    rel = np.linalg.norm(fd - grad) / max(np.linalg.norm(grad), 1e-30)
    checks.append(("W gradient vs finite differences", rel < 1e-6,
                   f"rel err = {rel:.3e}"))

    # Block-decoupling hypothesis for both channels.
    checks.append((
        "quadform decoupling (energy channel)", form_w.holds,
        f"residual = {form_w.h_residual:.3e}"))
    checks.append((
        "quadform decoupling (dissipation channel)", form_r.holds,
        f"residual = {form_r.h_residual:.3e}"))

    # Beam energy gradient against central differences.
    z = z0 + 0.01 * rng.standard_normal(beam.ndof)
    _, grad, _ = beam.energy(z, order=1)
    d = rng.standard_normal(beam.ndof)
    d /= np.linalg.norm(d)
    step = 1e-6
    fd = (beam.energy(z + step * d)[0] - beam.energy(z - step * d)[0]) / (2 * step)
    rel = abs(fd - float(grad @ d)) / max(abs(fd), 1e-30)
    checks.append(("beam gradient vs finite differences", rel < 1e-6,
                   f"rel err = {rel:.3e}"))

    # Metric symmetry and positivity spot checks.
    za = z0 + 0.01 * rng.standard_normal(beam.ndof)
    zb = z0 + 0.01 * rng.standard_normal(beam.ndof)
    sym_err = abs(beam.metric_sq(za, zb)[0] - beam.metric_sq(zb, za)[0])
    pos = beam.metric_sq(za, zb)[0] > 0
    checks.append(("metric symmetry and positivity",
                   sym_err < 1e-14 and pos,
                   f"|D2(a,b)-D2(b,a)| = {sym_err:.3e}"))

    # Generalized convexity along segments (reported with C = 1e3).
    ok_m, ok_e = beam.generalized_convexity_check(za, zb, C=1e3)
    checks.append(("generalized convexity (C=1e3)", ok_m and ok_e,
                   f"metric={ok_m} energy={ok_e}"))

    # EDB deficit decreasing under tau halving (short horizon).
    taus = [cfg.flow.tau, cfg.flow.tau / 2, cfg.flow.tau / 4]
    horizon = min(cfg.flow.T, 20 * cfg.flow.tau)
    deficits = []
    for tau in taus:
        traj = run_flow(space, z0, tau, horizon,
                        newton_tol=cfg.flow.newton_tol,
                        max_iter=cfg.flow.max_iter)
        deficits.append(abs(edb_deficit(traj)))
    dec = deficits[0] >= deficits[1] >= deficits[2]
    detail = "|EDB| = " + ", ".join(f"{d:.3e}" for d in deficits)
    if cfg.model.r == 0:
        ratios = [deficits[1] / deficits[0] if deficits[0] else 0.0,
                  deficits[2] / deficits[1] if deficits[1] else 0.0]
        dec = dec and all(0.3 <= q <= 0.7 for q in ratios)
        detail += "; halving ratios " + ", ".join(f"{q:.3f}" for q in ratios)
    checks.append(("EDB deficit under tau refinement", dec, detail))

    # Slope vanishes only at critical points.
    s0 = local_slope(space, z0)
    checks.append(("local slope finite at initial datum",
                   np.isfinite(s0) and s0 >= 0, f"slope = {s0:.6e}"))
    return checks


def verify_driver(cfg):
    """Invariant suite; exit 0 iff every check passes."""

    def inner():
        checks = _verify_checks(cfg)
        lines = []
        all_ok = True
        for name, ok, detail in checks:
            all_ok &= bool(ok)
            lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        lines.append("verify: " + ("all checks passed" if all_ok
                                   else "FAILURES detected"))
        return {"exit_code": EXIT_OK if all_ok else EXIT_NUMERICAL,
                "files": {}, "report": "\n".join(lines) + "\n"}

    return _guard(inner)


DRIVERS = {
    "run": run_driver,
    "verify": verify_driver,
    "gamma": gamma_driver,
    "quadforms": quadforms_driver,
}
