"""Reduced beam model: energy, dissipation metric, and their derivatives.

State layout for a mesh with N nodes (ndof = 6N):

    z = [ xi1 (N, P1) | xi2 (2N, Hermite) | xi3 (2N, Hermite) | theta (N, P1) ]

xi1 is the axial stretch displacement, xi2/xi3 the transverse deflections,
theta the twist. The energy is

    phi(z) = 1/2 int Q0_W(m) + 1/24 int [Q0_W(xi2'') + Q1_W(xi3'', theta')]
             - int f xi3,       m = xi1' + (r/2) (xi3')^2,

and the squared dissipation distance between states a and z is

    D^2(a, z) = int Q0_R(m(z) - m(a))
                + 1/12 int [Q0_R(d xi2'') + Q1_R(d xi3'', d theta')],

with Q0/Q1 the reduced quadratic forms of the 3D energy and dissipation
densities. Both are instances of one weighted quadratic functional, so a
single assembler provides values, gradients, and Hessians for both.

Dirichlet conditions are imposed by lifting: states carry their boundary
values and solvers restrict to the free-DOF mask.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .fem import (
    hermite_eval_matrix,
    hermite_interpolate,
    p1_eval_matrix,
    p1_interpolate,
    quad_points,
)

FIELDS = ("xi1", "xi2", "xi3", "theta")

# Membrane / bending / torsion weights for the energy and the metric.
ENERGY_COEFFS = (0.5, 1.0 / 24.0, 1.0 / 24.0)
METRIC_COEFFS = (1.0, 1.0 / 12.0, 1.0 / 12.0)


class Beam1D:
    """Discrete beam with energy and dissipation metric.

    form_w and form_r are ReducedForm instances (energy and dissipation
    reductions), r is the membrane-bending coupling strength, and force
    is the transverse load density f(x1) (callable or None).
    """

    def __init__(self, mesh, form_w, form_r, r=0.0, force=None, n_gauss=5):
        self.mesh = mesh
        self.form_w = form_w
        self.form_r = form_r
        self.r = float(r)
        n = mesh.n_nodes
        self.n_nodes = n
        self.ndof = 6 * n
        self.slices = {
            "xi1": slice(0, n),
            "xi2": slice(n, 3 * n),
            "xi3": slice(3 * n, 5 * n),
            "theta": slice(5 * n, 6 * n),
        }
        xq, wq = quad_points(mesh, n_gauss)
        self.xq = xq
        self.wq = wq
        # Dense operators from the full state to quadrature-point values.
        self.op_xi1p = self._embed("xi1", p1_eval_matrix(mesh, xq, 1))
        self.op_xi2pp = self._embed("xi2", hermite_eval_matrix(mesh, xq, 2))
        self.op_xi3 = self._embed("xi3", hermite_eval_matrix(mesh, xq, 0))
        self.op_xi3p = self._embed("xi3", hermite_eval_matrix(mesh, xq, 1))
        self.op_xi3pp = self._embed("xi3", hermite_eval_matrix(mesh, xq, 2))
        self.op_thp = self._embed("theta", p1_eval_matrix(mesh, xq, 1))
        if force is None:
            self.fq = np.zeros(xq.size)
        else:
            self.fq = np.asarray([force(x) for x in xq], dtype=float)

    def _embed(self, name, local):
        mat = np.zeros((local.shape[0], self.ndof))
        mat[:, self.slices[name]] = local
        return mat

    # -- state helpers ---------------------------------------------------

    def zero_state(self):
        return np.zeros(self.ndof)

    def check_state(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.ndof,):
            raise ShapeError(f"state must have shape ({self.ndof},), got {z.shape}")
        return z

    def interpolate(self, xi1=None, xi2=None, dxi2=None, xi3=None, dxi3=None,
                    theta=None):
        """Build a state by nodal interpolation of callables.

        Hermite fields need both the value and the derivative function;
        omitted fields are zero.
        """
        zero = lambda x: 0.0
        z = self.zero_state()
        z[self.slices["xi1"]] = p1_interpolate(self.mesh, xi1 or zero)
        z[self.slices["xi2"]] = hermite_interpolate(self.mesh, xi2 or zero,
                                                    dxi2 or zero)
        z[self.slices["xi3"]] = hermite_interpolate(self.mesh, xi3 or zero,
                                                    dxi3 or zero)
        z[self.slices["theta"]] = p1_interpolate(self.mesh, theta or zero)
        return z

    def field_matrix(self, name, x, deriv=0):
        """Operator from the full state to a field derivative at points x."""
        if name in ("xi1", "theta"):
            local = p1_eval_matrix(self.mesh, x, deriv)
        elif name in ("xi2", "xi3"):
            local = hermite_eval_matrix(self.mesh, x, deriv)
        else:
            raise ShapeError(f"unknown field {name!r}")
        return self._embed(name, local)

    def eval_field(self, z, name, x, deriv=0):
        z = self.check_state(z)
        return self.field_matrix(name, x, deriv) @ z

    def free_mask(self, clamped=True):
        """Boolean mask of unconstrained DOFs.

        Clamped ends fix xi1, theta, and both Hermite DOFs (value and
        scaled derivative) of xi2 and xi3 at the two boundary nodes.
        """
        free = np.ones(self.ndof, dtype=bool)
        if not clamped:
            return free
        n = self.n_nodes
        for name in ("xi1", "theta"):
            s = self.slices[name]
            free[s.start] = False
            free[s.start + n - 1] = False
        for name in ("xi2", "xi3"):
            s = self.slices[name]
            free[s.start:s.start + 2] = False
            free[s.start + 2 * n - 2:s.start + 2 * n] = False
        return free

    # -- quadratic functional assembler ---------------------------------

    def _membrane_strain(self, z):
        a = self.op_xi1p @ z
        b = self.op_xi3p @ z
        return a + 0.5 * self.r * b * b, b

    def _functional(self, z, coeffs, form, offsets, with_force, order):
        """Weighted functional shared by the energy and the metric.

        coeffs = (c_m, c_b, c_t); form supplies c0 and the 2x2 q1 block;
        offsets = (m0, b0, t0, s0) are quad-point arrays subtracted from
        the membrane strain, xi2'', xi3'', and theta'.
        """
        z = self.check_state(z)
        c_m, c_b, c_t = coeffs
        m0, b0, t0, s0 = offsets
        w = self.wq
        c0 = form.c0
        q1 = form.q1

        m, x3p = self._membrane_strain(z)
        dm = m - m0
        db = self.op_xi2pp @ z - b0
        dt = self.op_xi3pp @ z - t0
        ds = self.op_thp @ z - s0

        value = (
            c_m * c0 * np.dot(w, dm * dm)
            + c_b * c0 * np.dot(w, db * db)
            + c_t * np.dot(w, q1[0, 0] * dt * dt + 2 * q1[0, 1] * dt * ds
                           + q1[1, 1] * ds * ds)
        )
        if with_force:
            value -= np.dot(w, self.fq * (self.op_xi3 @ z))
        if order == 0:
            return value, None, None

        grad = 2 * c_m * c0 * (
            self.op_xi1p.T @ (w * dm)
            + self.r * self.op_xi3p.T @ (w * dm * x3p)
        )
        grad += 2 * c_b * c0 * self.op_xi2pp.T @ (w * db)
        grad += 2 * c_t * (
            self.op_xi3pp.T @ (w * (q1[0, 0] * dt + q1[0, 1] * ds))
            + self.op_thp.T @ (w * (q1[0, 1] * dt + q1[1, 1] * ds))
        )
        if with_force:
            grad -= self.op_xi3.T @ (w * self.fq)
        if order == 1:
            return value, grad, None

        jac = self.op_xi1p + self.r * x3p[:, None] * self.op_xi3p
        hess = 2 * c_m * c0 * (
            jac.T @ (w[:, None] * jac)
            + self.r * self.op_xi3p.T @ ((w * dm)[:, None] * self.op_xi3p)
        )
        hess += 2 * c_b * c0 * self.op_xi2pp.T @ (w[:, None] * self.op_xi2pp)
        hess += 2 * c_t * (
            q1[0, 0] * self.op_xi3pp.T @ (w[:, None] * self.op_xi3pp)
            + q1[0, 1] * (self.op_xi3pp.T @ (w[:, None] * self.op_thp)
                          + self.op_thp.T @ (w[:, None] * self.op_xi3pp))
            + q1[1, 1] * self.op_thp.T @ (w[:, None] * self.op_thp)
        )
        return value, grad, hess

    def _zero_offsets(self):
        nq = self.xq.size
        z = np.zeros(nq)
        return z, z, z, z

    # -- public functionals ----------------------------------------------

    def energy(self, z, order=0):
        """phi(z) with optional gradient and Hessian."""
        return self._functional(z, ENERGY_COEFFS, self.form_w,
                                self._zero_offsets(), True, order)

    def energy_parts(self, z):
        """(membrane, bending, torsion, force) contributions to phi(z)."""
        z = self.check_state(z)
        w = self.wq
        c0 = self.form_w.c0
        q1 = self.form_w.q1
        m, _ = self._membrane_strain(z)
        db = self.op_xi2pp @ z
        dt = self.op_xi3pp @ z
        ds = self.op_thp @ z
        membrane = 0.5 * c0 * np.dot(w, m * m)
        bending = (1.0 / 24.0) * c0 * np.dot(w, db * db)
        torsion = (1.0 / 24.0) * np.dot(
            w, q1[0, 0] * dt * dt + 2 * q1[0, 1] * dt * ds + q1[1, 1] * ds * ds)
        force = -np.dot(w, self.fq * (self.op_xi3 @ z))
        return membrane, bending, torsion, force

    def _offsets_from(self, a):
        a = self.check_state(a)
        m0, _ = self._membrane_strain(a)
        return (m0, self.op_xi2pp @ a, self.op_xi3pp @ a, self.op_thp @ a)

    def metric_sq(self, a, z, order=0):
        """Squared dissipation distance D^2(a, z), differentiated in z."""
        return self._functional(z, METRIC_COEFFS, self.form_r,
                                self._offsets_from(a), False, order)

    def metric(self, a, z):
        return float(np.sqrt(max(self.metric_sq(a, z)[0], 0.0)))

    def metric_tensor(self, z):
        """Matrix G(z) of the local metric g_z(w, w) = w^T G w.

        This is the second-order expansion of D^2(z, z + w) in w; the
        membrane block is state dependent through xi3'.
        """
        z = self.check_state(z)
        w = self.wq
        _, x3p = self._membrane_strain(z)
        jac = self.op_xi1p + self.r * x3p[:, None] * self.op_xi3p
        g = self.form_r.c0 * jac.T @ (w[:, None] * jac)
        g += (1.0 / 12.0) * self.form_r.c0 * (
            self.op_xi2pp.T @ (w[:, None] * self.op_xi2pp))
        q1 = self.form_r.q1
        g += (1.0 / 12.0) * (
            q1[0, 0] * self.op_xi3pp.T @ (w[:, None] * self.op_xi3pp)
            + q1[0, 1] * (self.op_xi3pp.T @ (w[:, None] * self.op_thp)
                          + self.op_thp.T @ (w[:, None] * self.op_xi3pp))
            + q1[1, 1] * self.op_thp.T @ (w[:, None] * self.op_thp)
        )
        return 0.5 * (g + g.T)

    def weak_residual(self, z, velocity, free=None):
        """Norm of g(velocity, .) + Dphi(z)[.] over the free test functions.

        A flow trajectory with velocity (Z^n - Z^{n-1})/tau keeps this
        small; it is the discrete weak form of the evolution system.
        """
        z = self.check_state(z)
        velocity = self.check_state(velocity)
        if free is None:
            free = np.ones(self.ndof, dtype=bool)
        _, grad, _ = self.energy(z, order=1)
        rho = self.metric_tensor(z) @ velocity + grad
        return float(np.linalg.norm(rho[free]))

    def generalized_convexity_check(self, a, b, C, M=None,
                                    s_values=np.arange(0.1, 0.95, 0.1)):
        """Check the interpolation inequalities along a_s = a + s (b - a).

        Metric inequality: D(a, a_s) <= s * Phi1(D(a, b)) with
        Phi1(t) = sqrt(t^2 + C t^3 + C t^4).
        Energy inequality: phi(a_s) <= (1-s) phi(a) + s phi(b)
        + s * Phi2_M(D(a, b)) with Phi2_M(t) = C sqrt(M) t^2 + C t^3 + C t^4.

        C has no canonical value; the check reports, it does not assert.
        Returns (ok_metric, ok_energy).
        """
        a = self.check_state(a)
        b = self.check_state(b)
        phi_a = self.energy(a)[0]
        phi_b = self.energy(b)[0]
        if M is None:
            M = max(phi_a, 0.0) + 1.0
        d = self.metric(a, b)
        phi1 = np.sqrt(d**2 + C * d**3 + C * d**4)
        phi2 = C * np.sqrt(M) * d**2 + C * d**3 + C * d**4
        ok_metric = ok_energy = True
        slack = 1e-12 * (1.0 + abs(phi_a) + abs(phi_b))
        for s in s_values:
            a_s = a + s * (b - a)
            if self.metric(a, a_s) > s * phi1 + slack:
                ok_metric = False
            if self.energy(a_s)[0] > (1 - s) * phi_a + s * phi_b + s * phi2 + slack:
                ok_energy = False
        return ok_metric, ok_energy
