"""Small 3x3 matrix and sym(3) coordinate helpers.

Matrices are plain numpy arrays; batched inputs of shape (..., 3, 3) are
supported wherever it matters for grid evaluation.
"""

import numpy as np

ID3 = np.eye(3)

SQRT2 = np.sqrt(2.0)


def sym(a):
    """Symmetric part, batched."""
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def skew(a):
    """Skew part, batched."""
    return 0.5 * (a - np.swapaxes(a, -1, -2))


def frob(a):
    """Frobenius norm, batched over leading axes."""
    return np.sqrt(np.sum(a * a, axis=(-1, -2)))


def is_rotation(q, tol=1e-12):
    q = np.asarray(q, dtype=float)
    return (
        np.allclose(q.T @ q, ID3, atol=tol)
        and abs(np.linalg.det(q) - 1.0) <= 10 * tol
    )


def det_positive(f):
    return np.linalg.det(f) > 0.0


def polar_factor(f):
    """Nearest rotation to f (det f > 0 assumed), batched.

    R = U diag(1, 1, det(U V^T)) V^T from the SVD f = U S V^T.
    """
    u, _, vt = np.linalg.svd(np.asarray(f, dtype=float))
    d = np.linalg.det(u @ vt)
    corr = np.ones(u.shape[:-2] + (3,))
    corr[..., 2] = d
    return (u * corr[..., None, :]) @ vt


def dist_so3(f):
    """Frobenius distance to SO(3), batched; valid for det f > 0."""
    s = np.linalg.svd(np.asarray(f, dtype=float), compute_uv=False)
    return np.sqrt(np.sum((s - 1.0) ** 2, axis=-1))


def random_rotation(rng):
    """Haar-ish rotation from the QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, [0, 1]] = q[:, [1, 0]]
    return q


def random_skew(rng, scale=1.0):
    a = rng.standard_normal((3, 3))
    return scale * skew(a) * 2.0


# Orthonormal basis of sym(3) in the coordinate order
# (a11, a22, a33, sqrt2*a12, sqrt2*a13, sqrt2*a23).
def _build_sym_basis():
    basis = np.zeros((6, 3, 3))
    for i, (a, b) in enumerate([(0, 0), (1, 1), (2, 2)]):
        basis[i, a, b] = 1.0
    for i, (a, b) in enumerate([(0, 1), (0, 2), (1, 2)]):
        basis[3 + i, a, b] = 1.0 / SQRT2
        basis[3 + i, b, a] = 1.0 / SQRT2
    return basis


SYM_BASIS = _build_sym_basis()


def sym_to_vec6(a):
    """Coordinates of sym(a) in the orthonormal sym(3) basis, batched."""
    s = sym(np.asarray(a, dtype=float))
    return np.stack(
        [
            s[..., 0, 0],
            s[..., 1, 1],
            s[..., 2, 2],
            SQRT2 * s[..., 0, 1],
            SQRT2 * s[..., 0, 2],
            SQRT2 * s[..., 1, 2],
        ],
        axis=-1,
    )


def vec6_to_sym(x):
    x = np.asarray(x, dtype=float)
    return np.einsum("...a,aij->...ij", x, SYM_BASIS)
