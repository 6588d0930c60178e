"""1D finite element primitives on a uniform interval mesh.

Two conforming spaces: P1 hat functions (H^1 fields) and Hermite cubics
(H^2 fields). Hermite derivative DOFs are stored scaled by the element
size h, i.e. dof = h * xi'(node), which keeps the element matrices
uniformly conditioned under refinement.

Evaluation is organized around dense matrices mapping a field's DOF
vector to values (or derivatives) at arbitrary points; assembly and
post-processing both go through them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh of (-length/2, length/2)."""

    length: float
    n_elems: int
    nodes: np.ndarray
    h: float

    @property
    def n_nodes(self):
        return self.n_elems + 1


def make_mesh(length, n_elems):
    if length <= 0:
        raise ShapeError("mesh length must be positive")
    if n_elems < 4:
        raise ShapeError("need at least 4 elements")
    nodes = np.linspace(-0.5 * length, 0.5 * length, n_elems + 1)
    return Mesh1D(length=float(length), n_elems=int(n_elems), nodes=nodes,
                  h=float(length) / n_elems)


def locate(mesh, x):
    """Element index and reference coordinate t in [0, 1] for points x."""
    x = np.asarray(x, dtype=float)
    s = (x + 0.5 * mesh.length) / mesh.h
    elem = np.clip(np.floor(s).astype(int), 0, mesh.n_elems - 1)
    t = s - elem
    return elem, t


def gauss_rule(n=5):
    """Gauss-Legendre points and weights on the reference element [0, 1]."""
    pts, wts = np.polynomial.legendre.leggauss(n)
    return 0.5 * (pts + 1.0), 0.5 * wts


def p1_shape(t, deriv=0):
    """The two hat-function restrictions on [0, 1]; shape (..., 2)."""
    t = np.asarray(t, dtype=float)
    if deriv == 0:
        return np.stack([1.0 - t, t], axis=-1)
    if deriv == 1:
        return np.broadcast_to(np.array([-1.0, 1.0]), t.shape + (2,)).copy()
    return np.zeros(t.shape + (2,))


def hermite_shape(t, deriv=0):
    """Cubic Hermite basis on [0, 1] for DOFs (v0, h*d0, v1, h*d1).

    Returns the deriv-th t-derivative of the four shape functions,
    shape (..., 4). Physical x-derivatives need a further 1/h^deriv.
    """
    t = np.asarray(t, dtype=float)
    one = np.ones_like(t)
    if deriv == 0:
        return np.stack(
            [1 - 3 * t**2 + 2 * t**3, t - 2 * t**2 + t**3,
             3 * t**2 - 2 * t**3, -(t**2) + t**3],
            axis=-1,
        )
    if deriv == 1:
        return np.stack(
            [-6 * t + 6 * t**2, 1 - 4 * t + 3 * t**2,
             6 * t - 6 * t**2, -2 * t + 3 * t**2],
            axis=-1,
        )
    if deriv == 2:
        return np.stack(
            [-6 + 12 * t, -4 * one + 6 * t, 6 - 12 * t, -2 * one + 6 * t],
            axis=-1,
        )
    if deriv == 3:
        return np.stack([12 * one, 6 * one, -12 * one, 6 * one], axis=-1)
    return np.zeros(t.shape + (4,))


def p1_eval_matrix(mesh, x, deriv=0):
    """Dense (len(x), n_nodes) matrix: P1 DOFs -> deriv-th derivative at x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elem, t = locate(mesh, x)
    shp = p1_shape(t, deriv) / mesh.h**deriv
    mat = np.zeros((x.size, mesh.n_nodes))
    rows = np.arange(x.size)
    for a in range(2):
        np.add.at(mat, (rows, elem + a), shp[:, a])
    return mat


def hermite_eval_matrix(mesh, x, deriv=0):
    """Dense (len(x), 2*n_nodes) matrix for Hermite DOFs (v_i, h*d_i)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    elem, t = locate(mesh, x)
    shp = hermite_shape(t, deriv) / mesh.h**deriv
    mat = np.zeros((x.size, 2 * mesh.n_nodes))
    rows = np.arange(x.size)
    cols = [2 * elem, 2 * elem + 1, 2 * elem + 2, 2 * elem + 3]
    for a in range(4):
        np.add.at(mat, (rows, cols[a]), shp[:, a])
    return mat


def quad_points(mesh, n_gauss=5):
    """Global quadrature points and weights, flattened over elements."""
    tq, wq = gauss_rule(n_gauss)
    x = (mesh.nodes[:-1, None] + mesh.h * tq[None, :]).ravel()
    w = np.tile(mesh.h * wq, mesh.n_elems)
    return x, w


def p1_interpolate(mesh, fn):
    """Nodal interpolation into P1."""
    return np.asarray([fn(x) for x in mesh.nodes], dtype=float)


def hermite_interpolate(mesh, fn, dfn):
    """Nodal interpolation into Hermite cubics from (value, derivative)."""
    dofs = np.zeros(2 * mesh.n_nodes)
    dofs[0::2] = [fn(x) for x in mesh.nodes]
    dofs[1::2] = [mesh.h * dfn(x) for x in mesh.nodes]
    return dofs
