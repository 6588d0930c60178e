"""Effective quadratic forms at the identity and their cross-section
reduction.

Q3_W(A) = d^2 W(Id)[A, A] and Q3_R(A) = (1/2) d^2_{F1 F1} D^2(Id, Id)[A, A]
act on sym(3) (skew directions are in the kernel by frame indifference).
Relaxing over the cross-sectional strain components leaves a 2x2 form in
the axial stretch A11 and the shear A12; the bending/twisting constants
C0 and Cstar are read off from that reduced form.

All reductions are exact linear algebra (Schur complements); the brute
force coordinate-descent oracle lives in the test suite.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFormError
from .material import eval_W, hess_D2_F1F1
from .tensors import ID3, SQRT2, SYM_BASIS

# Positions of (a11, sqrt2*a12) in the orthonormal sym(3) coordinate order
# (a11, a22, a33, sqrt2*a12, sqrt2*a13, sqrt2*a23).
_KEPT = np.array([0, 3])
_RELAXED = np.array([1, 2, 4, 5])

H_TOL = 1e-10


def extract_Q3(model, which="W"):
    """6x6 matrix of Q3 in the orthonormal sym(3) basis.

    which = "W" uses the stored energy Hessian; "R" uses half the
    dissipation-distance Hessian (both at the identity).
    """
    if which == "W":
        _, _, hess = eval_W(model, ID3, order=2)
    elif which == "R":
        hess = 0.5 * hess_D2_F1F1(model, ID3)
    else:
        raise ValueError(f"which must be 'W' or 'R', got {which!r}")
    # M_ab = B[E_a, E_b] over the orthonormal sym(3) basis.
    m = np.einsum("aij,ijkl,bkl->ab", SYM_BASIS, hess, SYM_BASIS)
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class ReducedForm:
    """Cross-section relaxation of a 6x6 form down to (A11, A12).

    q1 is the 2x2 matrix of Q1(t, s) = q1[0,0] t^2 + 2 q1[0,1] t s +
    q1[1,1] s^2 in the *unscaled* variables t = A11, s = A12. c0 is the
    further relaxation over s, cstar the pure-shear coefficient, and
    h_residual measures coupling between kept and relaxed blocks: the
    form decouples (so Q1 is diagonal and Q0/Q1 split the membrane and
    torsion responses) iff h_residual is numerically zero.
    """

    q1: np.ndarray
    c0: float
    cstar: float
    h_residual: float
    holds: bool


def reduce_quadform(m, h_tol=H_TOL):
    """Relax a 6x6 sym(3) form over the cross-sectional components.

    Minimizes over (a22, a33, a13, a23) for fixed (a11, a12). Raises
    DegenerateFormError when the relaxed block is not positive definite.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (6, 6):
        raise DegenerateFormError(f"expected a 6x6 form, got shape {m.shape}")
    m = 0.5 * (m + m.T)
    mff = m[np.ix_(_RELAXED, _RELAXED)]
    mpf = m[np.ix_(_KEPT, _RELAXED)]
    mpp = m[np.ix_(_KEPT, _KEPT)]
    try:
        cf = np.linalg.cholesky(mff)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFormError(
            "relaxed cross-section block is not positive definite"
        ) from exc
    x = np.linalg.solve(cf, mpf.T)
    s = mpp - x.T @ x
    # Back to physical variables (A11, A12): the kept coordinates are
    # (a11, sqrt2 * a12).
    scale = np.diag([1.0, SQRT2])
    q1 = scale @ s @ scale
    q1 = 0.5 * (q1 + q1.T)
    if q1[1, 1] <= 0 or q1[0, 0] - q1[0, 1] ** 2 / q1[1, 1] <= 0:
        raise DegenerateFormError("reduced form is not positive definite")
    c0 = q1[0, 0] - q1[0, 1] ** 2 / q1[1, 1]
    cstar = q1[1, 1]
    h_residual = float(np.linalg.norm(mpf, 2) + abs(q1[0, 1]))
    return ReducedForm(
        q1=q1,
        c0=float(c0),
        cstar=float(cstar),
        h_residual=h_residual,
        holds=h_residual <= h_tol,
    )


def reduced_forms(model):
    """(energy, dissipation) reduced forms for a material model."""
    rw = reduce_quadform(extract_Q3(model, "W"))
    rr = reduce_quadform(extract_Q3(model, "R"))
    return rw, rr


def eval_Q0(form, t):
    """Fully reduced scalar form C0 * t^2, batched."""
    t = np.asarray(t, dtype=float)
    return form.c0 * t * t


def eval_Q1(form, t, s):
    """Reduced 2x2 form in (A11, A12), batched."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    q = form.q1
    return q[0, 0] * t * t + 2.0 * q[0, 1] * t * s + q[1, 1] * s * s
