"""3D constitutive laws: stored energy W, dissipation distance D,
second-gradient penalty P, and the induced viscous potential R.

All derivatives are closed-form. Finite differences appear only in the
test suite as oracles. Every density is a function of the Green strain
E = F^T F - Id, which the batched `*_from_strain` entry points exploit to
avoid cancellation when F is within O(eps) of a rigid motion.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .tensors import ID3, dist_so3, sym

W_KINDS = ("svk_zero_poisson", "orthotropic", "isotropic")
D_KINDS = ("cauchy_green_difference",)
P_KINDS = ("power",)

_P2 = np.diag([0.0, 1.0, 0.0])
_P3 = np.diag([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class MaterialModel:
    """The constitutive triple (W, D, P).

    kind_W selects the stored energy:
      * svk_zero_poisson:  W(F) = (mu/4) |E|^2
      * orthotropic:       W(F) = (1/8)(lambda2 E22 + lambda3 E33)^2 + (mu/8)|E|^2
      * isotropic:         W(F) = (lam/8)(tr E)^2 + (mu/4)|E|^2
    with E = F^T F - Id. The isotropic kind has nonzero axial Poisson
    coupling and is provided as the stock example that violates the
    block-decoupling hypothesis.

    kind_D is the Cauchy-Green difference |F1^T F1 - F2^T F2|, and the
    penalty is P(Z) = c1 |Z|^p with p > 3.
    """

    kind_W: str = "svk_zero_poisson"
    mu: float = 1.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lam: float = 0.0
    kind_D: str = "cauchy_green_difference"
    kind_P: str = "power"
    c1: float = 1.0
    p: float = 4.0
    near_so3_tol: float = 0.2

    def __post_init__(self):
        if self.kind_W not in W_KINDS:
            raise ConfigurationError(f"unknown W kind {self.kind_W!r}")
        if self.kind_D not in D_KINDS:
            raise ConfigurationError(f"unknown D kind {self.kind_D!r}")
        if self.kind_P not in P_KINDS:
            raise ConfigurationError(f"unknown P kind {self.kind_P!r}")
        if self.mu <= 0:
            raise ConfigurationError("mu must be positive")
        if self.kind_W == "orthotropic" and (self.lambda2 < 0 or self.lambda3 < 0):
            raise ConfigurationError("lambda2, lambda3 must be nonnegative")
        if self.kind_W == "isotropic" and self.lam < 0:
            raise ConfigurationError("lam must be nonnegative")
        if self.p <= 3:
            raise ConfigurationError("penalty exponent p must exceed 3")
        if self.c1 <= 0:
            raise ConfigurationError("penalty coefficient c1 must be positive")


# ---------------------------------------------------------------------------
# Stored energy W


def green_strain(f):
    f = np.asarray(f, dtype=float)
    return np.swapaxes(f, -1, -2) @ f - ID3


def W_from_strain(model, e):
    """W as a function of the Green strain E = F^T F - Id, batched."""
    e = np.asarray(e, dtype=float)
    nrm2 = np.sum(e * e, axis=(-1, -2))
    if model.kind_W == "svk_zero_poisson":
        return 0.25 * model.mu * nrm2
    if model.kind_W == "orthotropic":
        s = model.lambda2 * e[..., 1, 1] + model.lambda3 * e[..., 2, 2]
        return 0.125 * s * s + 0.125 * model.mu * nrm2
    # isotropic
    tr = np.trace(e, axis1=-2, axis2=-1)
    return 0.125 * model.lam * tr * tr + 0.25 * model.mu * nrm2


def _grad_W(model, f, e):
    fe = f @ e
    if model.kind_W == "svk_zero_poisson":
        return model.mu * fe
    if model.kind_W == "orthotropic":
        s = model.lambda2 * e[1, 1] + model.lambda3 * e[2, 2]
        return 0.5 * s * (model.lambda2 * f @ _P2 + model.lambda3 * f @ _P3) + 0.5 * model.mu * fe
    tr = np.trace(e)
    return 0.5 * model.lam * tr * f + model.mu * fe


def _hess_W_apply(model, f, e, g):
    """Directional derivative of grad W at f in direction g."""
    de = g.T @ f + f.T @ g
    if model.kind_W == "svk_zero_poisson":
        return model.mu * (g @ e + f @ de)
    if model.kind_W == "orthotropic":
        s = model.lambda2 * e[1, 1] + model.lambda3 * e[2, 2]
        ds = model.lambda2 * de[1, 1] + model.lambda3 * de[2, 2]
        lp = model.lambda2 * f @ _P2 + model.lambda3 * f @ _P3
        dlp = model.lambda2 * g @ _P2 + model.lambda3 * g @ _P3
        return 0.5 * ds * lp + 0.5 * s * dlp + 0.5 * model.mu * (g @ e + f @ de)
    tr = np.trace(e)
    dtr = np.trace(de)
    return 0.5 * model.lam * (dtr * f + tr * g) + model.mu * (g @ e + f @ de)


def eval_W(model, f, order=0):
    """Evaluate W and optionally its first/second derivatives at f.

    Returns (value, grad, hess); grad is None unless order >= 1 and hess
    is None unless order == 2 (hess is a (3,3,3,3) array acting on the
    direction in its last two indices).
    """
    if order not in (0, 1, 2):
        raise ConfigurationError(f"order must be 0, 1, or 2, got {order}")
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise DomainError("non-finite deformation gradient")
    e = green_strain(f)
    value = float(W_from_strain(model, e))
    grad = hess = None
    if order >= 1:
        grad = _grad_W(model, f, e)
    if order == 2:
        hess = np.zeros((3, 3, 3, 3))
        for k in range(3):
            for l in range(3):
                basis = np.zeros((3, 3))
                basis[k, l] = 1.0
                hess[:, :, k, l] = _hess_W_apply(model, f, e, basis)
    return value, grad, hess


def W_values(model, f):
    """Batched W over gradients of shape (..., 3, 3)."""
    return W_from_strain(model, green_strain(f))


# ---------------------------------------------------------------------------
# Dissipation distance D and potential R


def D_from_strains(model, e0, e1):
    """D(F0, F1) = |C0 - C1| expressed through Green strains, batched."""
    d = np.asarray(e0, dtype=float) - np.asarray(e1, dtype=float)
    return np.sqrt(np.sum(d * d, axis=(-1, -2)))


def eval_D(model, f1, f2):
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    if np.linalg.det(f1) <= 0 or np.linalg.det(f2) <= 0:
        raise DomainError("dissipation distance requires positive determinants")
    return float(D_from_strains(model, green_strain(f1), green_strain(f2)))


def _check_near_so3(model, f, what):
    d = dist_so3(f)
    if d > model.near_so3_tol:
        raise DomainError(
            f"{what}: dist(F, SO(3)) = {float(d):.3g} exceeds "
            f"trust region {model.near_so3_tol}"
        )


def eval_R(model, f, fdot):
    """Viscous potential R(F, Fdot) = (1/4) d^2_{F1 F1} D^2(F,F)[Fdot, Fdot].

    For the Cauchy-Green difference distance this is |Cdot|^2 / 2 with
    Cdot = Fdot^T F + F^T Fdot.
    """
    f = np.asarray(f, dtype=float)
    fdot = np.asarray(fdot, dtype=float)
    _check_near_so3(model, f, "eval_R")
    cdot = fdot.T @ f + f.T @ fdot
    return float(0.5 * np.sum(cdot * cdot))


def hess_D2_F1F1(model, f):
    """The fourth-order tensor (d^2/dF1^2) D^2 at (f, f).

    For the built-in distance the bilinear form is
    B[G, H] = 2 (G^T f + f^T G) : (H^T f + f^T H); its kernel is exactly
    f^{-T} skew(3).
    """
    f = np.asarray(f, dtype=float)
    _check_near_so3(model, f, "hess_D2_F1F1")
    # B[G, H] with G = e_ij, H = e_kl; d(e_ij) = e_ij^T f + f^T e_ij has
    # rows f_i* scattered, so assemble through the 9 basis images.
    imgs = np.zeros((3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            g = np.zeros((3, 3))
            g[i, j] = 1.0
            imgs[i, j] = g.T @ f + f.T @ g
    hess = 2.0 * np.einsum("ijab,klab->ijkl", imgs, imgs)
    return hess


# ---------------------------------------------------------------------------
# Second-gradient penalty P


def P_values(model, z):
    """Batched P over (..., 3, 3, 3) second gradients."""
    z = np.asarray(z, dtype=float)
    nrm = np.sqrt(np.sum(z * z, axis=(-1, -2, -3)))
    return model.c1 * nrm**model.p


def eval_P(model, z, order=0):
    """Evaluate P(Z) = c1 |Z|^p and optionally its gradient."""
    if order not in (0, 1):
        raise ConfigurationError(f"order must be 0 or 1, got {order}")
    z = np.asarray(z, dtype=float)
    nrm = float(np.sqrt(np.sum(z * z)))
    value = model.c1 * nrm**model.p
    grad = None
    if order == 1:
        if nrm == 0.0:
            grad = np.zeros((3, 3, 3))
        else:
            grad = model.c1 * model.p * nrm ** (model.p - 2.0) * z
    return value, grad
