"""3D evaluation side of the thin-limit verification.

The reference domain is Omega = I x (-1/2, 1/2)^2 with anisotropic
rescaling: physical width h in x2, height delta_h = h^2 in x3, energy
scale eps_h and second-gradient penalty scale zeta_h. Deformations are
built from a 1D beam state through the recovery ansatz

  y1 = x1 + eps (xi1 - x2 xi2' - x3 xi3' - h x2 x3 theta' - h r x2 xi3' theta)
  y2 = h x2 + eps (xi2/h - x3 theta - (h r/2) x2 theta^2)
  y3 = d x3 + eps (xi3/d + (h/d) x2 theta - (d r/2) x3 (xi3'^2 + theta^2))

(d = delta_h). Each component is affine in (x2, x3) with at most an
x2*x3 cross term, so scaled gradients and Hessians are assembled from
closed-form x1-derivatives of the coefficient functions — never from
numerical differentiation of samples. The displacement part
Delta = (grad_h y - Id)/eps is stored directly, which keeps Green
strains E = eps (Delta + Delta^T) + eps^2 Delta^T Delta free of
catastrophic cancellation at eps ~ h^4.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ProjectionError, ShapeError
from .material import D_from_strains, P_values, W_from_strain
from .tensors import ID3, dist_so3, polar_factor, sym

I0_TWIST = 1.0 / 6.0  # cross-section polar moment int_w (x2^2 + x3^2)


# ---------------------------------------------------------------------------
# Scaling schedule


@dataclass(frozen=True)
class ScaledGeometry:
    """Width h plus the derived scaling schedule.

    delta_h = h^2; eps_h = r h^4 for r > 0 and h^5 for r = 0;
    zeta_h = eps_h^2 (eps_h/delta_h)^(-beta p) with beta = (1+alpha)/2.
    This choice satisfies both penalty-scale inequalities
    zeta eps^-2 (eps/delta)^(alpha p) >= 1 and zeta eps^-2 (eps/delta)^p <= 1
    and keeps zeta_h a null sequence.
    """

    h: float
    r: float
    alpha: float = 0.5
    p: float = 4.0

    def __post_init__(self):
        if not (0 < self.h < 1):
            raise DomainError("need 0 < h < 1")
        if self.r < 0:
            raise DomainError("r must be nonnegative")
        if not (0 < self.alpha < 1):
            raise DomainError("alpha must lie in (0, 1)")
        if self.p <= 3:
            raise DomainError("p must exceed 3")

    @property
    def delta(self):
        return self.h**2

    @property
    def eps(self):
        if self.r > 0:
            return self.r * self.h**4
        return self.h**5

    @property
    def zeta(self):
        beta = 0.5 * (1.0 + self.alpha)
        return self.eps**2 * (self.eps / self.delta) ** (-beta * self.p)

    def check_invariants(self):
        ratio = self.eps / self.delta
        lo = self.zeta * self.eps**-2 * ratio ** (self.alpha * self.p)
        hi = self.zeta * self.eps**-2 * ratio**self.p
        return lo >= 1.0 - 1e-12 and hi <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# Tensor-product quadrature grid


@dataclass(frozen=True)
class Grid3D:
    """Composite Gauss in x1 (per beam element) times Gauss in x2, x3."""

    x1: np.ndarray
    w1: np.ndarray
    x2: np.ndarray
    w2: np.ndarray
    x3: np.ndarray
    w3: np.ndarray

    @property
    def shape(self):
        return (self.x1.size, self.x2.size, self.x3.size)

    @property
    def weights(self):
        return (self.w1[:, None, None] * self.w2[None, :, None]
                * self.w3[None, None, :])

    def coords(self):
        """Broadcastable (X1, X2, X3) arrays of shape (n1, n2, n3)."""
        return (self.x1[:, None, None], self.x2[None, :, None],
                self.x3[None, None, :])

    def same_as(self, other):
        return (self.shape == other.shape
                and np.array_equal(self.x1, other.x1)
                and np.array_equal(self.x2, other.x2)
                and np.array_equal(self.x3, other.x3))


def make_grid(mesh, n1=24, n2=6, n3=6):
    """Quadrature grid on Omega; x1 nodes never sit on mesh nodes, so
    piecewise-polynomial beam fields are smooth on every x1 panel."""
    from .fem import quad_points

    n_per = max(5, int(math.ceil(n1 / mesh.n_elems)))
    x1, w1 = quad_points(mesh, n_per)
    p2, q2 = np.polynomial.legendre.leggauss(n2)
    p3, q3 = np.polynomial.legendre.leggauss(n3)
    return Grid3D(x1=x1, w1=w1, x2=0.5 * p2, w2=0.5 * q2,
                  x3=0.5 * p3, w3=0.5 * q3)


# ---------------------------------------------------------------------------
# Recovery ansatz


def _field_tables(beam, z, x1):
    """1D field derivatives at the x1 sample points.

    Orders 0..2 for the P1 fields (their second derivative vanishes per
    panel) and 0..3 for the Hermite fields.
    """
    tabs = {}
    for name, kmax in (("xi1", 2), ("xi2", 3), ("xi3", 3), ("theta", 2)):
        tabs[name] = [beam.eval_field(z, name, x1, k) for k in range(kmax + 1)]
    return tabs


def _disp_coeffs(tabs, geom):
    """x1-coefficients of the displacement part and their derivatives.

    disp_i = c[i]['0'] + c[i]['2'] x2 + c[i]['3'] x3 + c[i]['23'] x2 x3,
    each entry a list [value, d/dx1, d2/dx1^2] of arrays over the x1
    samples.
    """
    a = tabs["xi1"]
    b = tabs["xi2"]
    c = tabs["xi3"]
    t = tabs["theta"]
    h = geom.h
    d = geom.delta
    r = geom.r
    zero = np.zeros_like(a[0])

    coeffs = {
        0: {
            "0": [a[0], a[1], a[2]],
            "2": [-b[1] - h * r * c[1] * t[0],
                  -b[2] - h * r * (c[2] * t[0] + c[1] * t[1]),
                  -b[3] - h * r * (c[3] * t[0] + 2 * c[2] * t[1]
                                   + c[1] * t[2])],
            "3": [-c[1], -c[2], -c[3]],
            "23": [-h * t[1], -h * t[2], zero],
        },
        1: {
            "0": [b[0] / h, b[1] / h, b[2] / h],
            "2": [-0.5 * h * r * t[0] ** 2, -h * r * t[0] * t[1],
                  -h * r * (t[1] ** 2 + t[0] * t[2])],
            "3": [-t[0], -t[1], -t[2]],
            "23": [zero, zero, zero],
        },
        2: {
            "0": [c[0] / d, c[1] / d, c[2] / d],
            "2": [(h / d) * t[0], (h / d) * t[1], (h / d) * t[2]],
            "3": [-0.5 * d * r * (c[1] ** 2 + t[0] ** 2),
                  -d * r * (c[1] * c[2] + t[0] * t[1]),
                  -d * r * (c[2] ** 2 + c[1] * c[3] + t[1] ** 2
                            + t[0] * t[2])],
            "23": [zero, zero, zero],
        },
    }
    return coeffs


@dataclass(frozen=True)
class ScaledDeformation:
    """Samples of a recovery deformation on the quadrature grid.

    disp is the scaled displacement (y - base)/eps (shape (3, n1, n2, n3)),
    delta_mat the reduced scaled gradient (grad_h y - Id)/eps with shape
    (n1, n2, n3, 3, 3), and hess the scaled Hessian (n1, n2, n3, 3, 3, 3).
    """

    geometry: ScaledGeometry
    grid: Grid3D
    disp: np.ndarray
    delta_mat: np.ndarray
    hess: np.ndarray

    def grad_h(self):
        return ID3 + self.geometry.eps * self.delta_mat

    def green_strain(self):
        """E = F^T F - Id computed cancellation-free from delta_mat."""
        eps = self.geometry.eps
        dt = np.swapaxes(self.delta_mat, -1, -2)
        return eps * (self.delta_mat + dt) + eps**2 * (dt @ self.delta_mat)


def _check_theta_support(beam, z):
    """theta must vanish at the endpoint nodes and one buffer element."""
    s = beam.slices["theta"]
    th = z[s]
    ends = np.array([th[0], th[1], th[-2], th[-1]])
    if np.any(ends != 0.0):
        raise DomainError(
            "recovery ansatz needs theta compactly supported: endpoint and "
            "buffer-element nodal values must be exactly zero")


def build_recovery(beam, z, geom, grid=None):
    """Recovery deformation of a beam state at width h (Ansatz fields).

    The smooth input convention: clamped boundary data and compactly
    supported twist make y match the rigid boundary conditions at
    x1 = -l/2, l/2 exactly.
    """
    if grid is None:
        grid = make_grid(beam.mesh)
    _check_theta_support(beam, z)
    tabs = _field_tables(beam, z, grid.x1)
    coeffs = _disp_coeffs(tabs, geom)
    x2 = grid.x2[None, :, None]
    x3 = grid.x3[None, None, :]
    n1, n2, n3 = grid.shape
    h, d = geom.h, geom.delta

    def combine(i, order):
        c = coeffs[i]
        return (c["0"][order][:, None, None]
                + c["2"][order][:, None, None] * x2
                + c["3"][order][:, None, None] * x3
                + c["23"][order][:, None, None] * x2 * x3)

    disp = np.stack([combine(i, 0) for i in range(3)])

    delta_mat = np.zeros((n1, n2, n3, 3, 3))
    hess = np.zeros((n1, n2, n3, 3, 3, 3))
    for i in range(3):
        c = coeffs[i]
        # Scaled first derivatives of the displacement part.
        delta_mat[..., i, 0] = combine(i, 1)
        delta_mat[..., i, 1] = (c["2"][0][:, None, None]
                                + c["23"][0][:, None, None] * x3) / h
        delta_mat[..., i, 2] = (c["3"][0][:, None, None]
                                + c["23"][0][:, None, None] * x2) / d
        # Scaled second derivatives (already including the eps factor:
        # hess stores eps * per-unit-displacement values times eps — the
        # ansatz Hessian is proportional to eps overall).
        hess[..., i, 0, 0] = combine(i, 2)
        h12 = (c["2"][1][:, None, None] + c["23"][1][:, None, None] * x3) / h
        h13 = (c["3"][1][:, None, None] + c["23"][1][:, None, None] * x2) / d
        h23 = np.broadcast_to(c["23"][0][:, None, None] / (h * d),
                              (n1, n2, n3))
        hess[..., i, 0, 1] = h12
        hess[..., i, 1, 0] = h12
        hess[..., i, 0, 2] = h13
        hess[..., i, 2, 0] = h13
        hess[..., i, 1, 2] = h23
        hess[..., i, 2, 1] = h23
    hess *= geom.eps
    return ScaledDeformation(geometry=geom, grid=grid, disp=disp,
                             delta_mat=delta_mat, hess=hess)


def evaluate_y(beam, z, geom, x1, x2, x3):
    """Pointwise deformation y at arbitrary coordinates (oracle hook for
    finite-difference checks of the symbolic gradients)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x3 = np.asarray(x3, dtype=float)
    tabs = _field_tables(beam, z, x1.ravel())
    tabs = {k: [np.reshape(v, x1.shape) for v in vs] for k, vs in tabs.items()}
    coeffs = _disp_coeffs(tabs, geom)
    eps = geom.eps
    base = np.stack([x1, geom.h * x2, geom.delta * x3])
    disp = np.stack([
        coeffs[i]["0"][0] + coeffs[i]["2"][0] * x2 + coeffs[i]["3"][0] * x3
        + coeffs[i]["23"][0] * x2 * x3
        for i in range(3)
    ])
    return base + eps * disp


# ---------------------------------------------------------------------------
# Scaled energy and dissipation distance


def phi_h(defm, model, force=None):
    """Rescaled energy, returned as (total, elastic, penalty, force_part).

    phi_h = eps^-2 int W(grad_h y) + zeta eps^-2 int P(hess_h y)
            - eps^-2 int f3D y3 with f3D = eps delta f1D. The affine base
    of y3 integrates against f3D to zero by symmetry of the cross-section
    rule, so the force term reduces to -int f1D u3.
    """
    geom = defm.geometry
    w = defm.grid.weights
    dso3 = dist_so3(defm.grad_h())
    if np.any(dso3 > model.near_so3_tol):
        idx = np.unravel_index(int(np.argmax(dso3)), dso3.shape)
        raise DomainError(
            "scaled gradient outside the near-SO(3) trust region at node "
            f"(x1={float(defm.grid.x1[idx[0]]):.4g}, "
            f"x2={float(defm.grid.x2[idx[1]]):.4g}, "
            f"x3={float(defm.grid.x3[idx[2]]):.4g})")
    e = defm.green_strain()
    elastic = float(np.sum(w * W_from_strain(model, e))) / geom.eps**2
    penalty = geom.zeta / geom.eps**2 * float(
        np.sum(w * P_values(model, defm.hess)))
    force_part = 0.0
    if force is not None:
        f1 = np.asarray([force(x) for x in defm.grid.x1], dtype=float)
        u3 = geom.delta * defm.disp[2]
        force_part = -float(np.sum(w * f1[:, None, None] * u3))
    return elastic + penalty + force_part, elastic, penalty, force_part


def dist_h(d0, d1, model):
    """Scaled dissipation distance (eps^-2 int D^2(grad_h y0, grad_h y1))^1/2."""
    if d0.geometry != d1.geometry or not d0.grid.same_as(d1.grid):
        raise ShapeError("deformations must share geometry and grid")
    w = d0.grid.weights
    dd = D_from_strains(model, d0.green_strain(), d1.green_strain())
    return float(np.sqrt(np.sum(w * dd * dd)) / d0.geometry.eps)


# ---------------------------------------------------------------------------
# Extraction operators


def extract_displacements(defm):
    """(u1, u2, u3) on the grid, per the anisotropic rescaling
    u1 = (y1-x1)/eps, u2 = (y2-h x2)/(eps/h), u3 = (y3-d x3)/(eps/d)."""
    geom = defm.geometry
    return defm.disp[0], geom.h * defm.disp[1], geom.delta * defm.disp[2]


def extract_twist(defm):
    """Cross-section twist moment theta^h(x1).

    theta^h = (1/I0)(1/eps) int_w ((d/h) x2 y3 - x3 y2); the affine base
    contributes an x2*x3 moment that vanishes exactly for the symmetric
    rule, leaving the displacement part.
    """
    geom = defm.geometry
    x2 = defm.grid.x2[None, :, None]
    x3 = defm.grid.x3[None, None, :]
    w23 = defm.grid.w2[:, None] * defm.grid.w3[None, :]
    integrand = (geom.delta / geom.h) * x2 * defm.disp[2] - x3 * defm.disp[1]
    return np.einsum("ijk,jk->i", integrand, w23) / I0_TWIST


def l2_norm_1d(grid, values):
    """L2(I) norm of a 1D sampled field on the grid's x1 rule."""
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.dot(grid.w1, values * values)))


def l2_norm_3d(grid, values):
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.sum(grid.weights * values * values)))


# ---------------------------------------------------------------------------
# Rotation field and strain variable


def _bump_kernel(radius_cells=2):
    offs = np.arange(-radius_cells, radius_cells + 1)
    d = np.sqrt(offs[:, None] ** 2 + offs[None, :] ** 2)
    k = np.zeros_like(d)
    inside = d < radius_cells + 0.5
    s = d[inside] / (radius_cells + 0.5)
    k[inside] = np.exp(-1.0 / (1.0 - s * s))
    return k / np.sum(k)


@dataclass(frozen=True)
class RotationField:
    """Per-cell rotations, constant in x3; idx1/idx2 map grid points to
    their cells."""

    cells: np.ndarray  # (nc1, nc2, 3, 3)
    idx1: np.ndarray
    idx2: np.ndarray

    def at_grid(self):
        return self.cells[self.idx1[:, None], self.idx2[None, :]]


def _cell_index(coords, n_cells):
    """Rank-based partition of sorted sample coordinates into n_cells
    contiguous, nonempty chunks (Gauss nodes cluster, so partitioning by
    coordinate value could leave cells empty)."""
    n = coords.size
    return np.minimum(np.arange(n) * n_cells // n, n_cells - 1)


def build_rotation_field(defm, length=None, rot_tol=1e-10):
    """Piecewise rotation field: cell-average the scaled gradient over
    physical cubes of side delta_h in (x1, x2), project onto SO(3),
    mollify with a radius-2-cell bump, and re-project.

    Cell counts are capped by the grid resolution so every cell contains
    at least one quadrature line.
    """
    geom = defm.geometry
    grid = defm.grid
    if length is None:
        length = grid.x1[-1] - grid.x1[0]
    # Target physical cell side delta_h (x1 is unscaled, x2 spans width h),
    # capped by the grid resolution.
    nc1 = min(max(int(math.ceil(length / geom.delta)), 3), grid.x1.size)
    nc2 = min(max(int(math.ceil(geom.h / geom.delta)), 3), grid.x2.size)
    idx1 = _cell_index(grid.x1, nc1)
    idx2 = _cell_index(grid.x2, nc2)

    f = defm.grad_h()
    w = grid.weights
    cells_sum = np.zeros((nc1, nc2, 3, 3))
    cells_w = np.zeros((nc1, nc2))
    for i1 in range(grid.x1.size):
        for i2 in range(grid.x2.size):
            c1, c2 = idx1[i1], idx2[i2]
            ww = w[i1, i2, :]
            cells_sum[c1, c2] += np.einsum("k,kab->ab", ww, f[i1, i2])
            cells_w[c1, c2] += float(np.sum(ww))
    if np.any(cells_w == 0.0):
        raise ShapeError("empty rotation cell: grid too coarse for h")
    avg = cells_sum / cells_w[:, :, None, None]
    if np.any(np.linalg.det(avg) <= 0):
        raise ProjectionError("cell-averaged gradient has nonpositive det")
    r_cells = polar_factor(avg)

    kernel = _bump_kernel(2)
    padded = np.pad(r_cells, ((2, 2), (2, 2), (0, 0), (0, 0)), mode="reflect")
    moll = np.zeros_like(r_cells)
    for di in range(5):
        for dj in range(5):
            moll += kernel[di, dj] * padded[di:di + nc1, dj:dj + nc2]
    if np.any(np.linalg.det(moll) <= 0):
        raise ProjectionError(
            "mollified field left the tubular neighborhood of SO(3)")
    r_cells = polar_factor(moll)
    err = np.max(np.abs(np.swapaxes(r_cells, -1, -2) @ r_cells - ID3))
    if err > rot_tol:
        raise ProjectionError(f"projected samples off SO(3) by {err:.3g}")
    return RotationField(cells=r_cells, idx1=idx1, idx2=idx2)


def strain_G(defm, rot):
    """Scaled strain G^h = ((R^h)^T grad_h y - Id)/eps on the grid."""
    eps = defm.geometry.eps
    r = rot.at_grid()[:, :, None]  # broadcast over x3
    rt = np.swapaxes(r, -1, -2)
    return (rt - ID3) / eps + rt @ defm.delta_mat


def rotation_sym_part(defm, rot):
    """sym((R^h - Id)/eps) on the grid; converges to (r/2) A_{u,theta}^2."""
    r = rot.at_grid()[:, :, None]
    return sym((r - ID3) / defm.geometry.eps)


def moment(grid, values, a=0, b=0, c=0):
    """int values * x1^a x2^b x3^c over Omega."""
    x1, x2, x3 = grid.coords()
    return float(np.sum(grid.weights * values * x1**a * x2**b * x3**c))


def g11_limit(beam, z, grid, r):
    """Limiting (1,1) strain xi1' - x2 xi2'' - x3 xi3'' + (r/2) xi3'^2."""
    x2 = grid.x2[None, :, None]
    x3 = grid.x3[None, None, :]
    a1 = beam.eval_field(z, "xi1", grid.x1, 1)[:, None, None]
    b2 = beam.eval_field(z, "xi2", grid.x1, 2)[:, None, None]
    c2 = beam.eval_field(z, "xi3", grid.x1, 2)[:, None, None]
    c1 = beam.eval_field(z, "xi3", grid.x1, 1)[:, None, None]
    return a1 - x2 * b2 - x3 * c2 + 0.5 * r * c1 * c1


def asym_limit(beam, z, grid, r):
    """(r/2) A_{u,theta}^2 with A = e3 (x) p - p (x) e3, p = (xi3', theta, 0)."""
    c1 = beam.eval_field(z, "xi3", grid.x1, 1)
    th = beam.eval_field(z, "theta", grid.x1, 0)
    n1 = grid.x1.size
    a2 = np.zeros((n1, 3, 3))
    a2[:, 0, 0] = -c1 * c1
    a2[:, 0, 1] = -c1 * th
    a2[:, 1, 0] = -c1 * th
    a2[:, 1, 1] = -th * th
    a2[:, 2, 2] = -(c1 * c1 + th * th)
    return 0.5 * r * a2[:, None, None, :, :] * np.ones(grid.shape)[..., None, None]


# ---------------------------------------------------------------------------
# Gamma-convergence driver


def gamma_table(beam, z, model, geom_list, force=None, companion=None,
                grid=None):
    """Convergence table over a decreasing h-sequence.

    Rows carry the scaling schedule, the scaled energy and its distance
    to the beam energy phi0, the penalty part, the scaled dissipation
    distance to a companion state against D0, and the L2 extraction
    errors of u3 and theta.
    """
    if grid is None:
        grid = make_grid(beam.mesh)
    if companion is None:
        companion = 0.6 * z
    phi0 = beam.energy(z, 0)[0]
    d0 = beam.metric(z, companion)
    xi3_ref = beam.eval_field(z, "xi3", grid.x1, 0)[:, None, None]
    th_ref = beam.eval_field(z, "theta", grid.x1, 0)
    rows = []
    for geom in geom_list:
        defm = build_recovery(beam, z, geom, grid)
        comp = build_recovery(beam, companion, geom, grid)
        total, elastic, penalty, force_part = phi_h(defm, model, force)
        dh = dist_h(defm, comp, model)
        _, _, u3 = extract_displacements(defm)
        theta_h = extract_twist(defm)
        rows.append({
            "h": geom.h,
            "delta_h": geom.delta,
            "eps_h": geom.eps,
            "zeta_h": geom.zeta,
            "phi_h": total,
            "phi0": phi0,
            "err_energy": abs(total - phi0),
            "err_metric": abs(dh - d0),
            "err_u3": l2_norm_3d(grid, u3 - xi3_ref),
            "err_theta": l2_norm_1d(grid, theta_h - th_ref),
            "penalty_term": penalty,
        })
    return rows
