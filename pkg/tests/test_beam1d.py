import numpy as np
import pytest

from viscobeam.beam1d import Beam1D
from viscobeam.errors import ShapeError
from viscobeam.fem import make_mesh

from conftest import smooth_state


def test_zero_state_zero_energy(beam):
    assert beam.energy(beam.zero_state())[0] == 0.0


def test_membrane_energy_affine(beam):
    z = beam.interpolate(xi1=lambda x: 0.1 * x)
    # 1/2 * l * C0_W * s^2 with C0_W = 2, l = 1, s = 0.1
    assert beam.energy(z)[0] == pytest.approx(0.01, rel=1e-13)


def test_twist_energy_unit_rate(beam):
    z = beam.interpolate(theta=lambda x: x)  # theta' = 1, int over l=1
    # (1/24) * Cstar_W = 4/24 = 1/6
    assert beam.energy(z)[0] == pytest.approx(1.0 / 6.0, rel=1e-13)


def test_force_term(svk_forms):
    fw, fr = svk_forms
    beam = Beam1D(make_mesh(1.0, 16), fw, fr, force=lambda x: 1.0)
    z = beam.interpolate(xi3=lambda x: 1.0, dxi3=lambda x: 0.0)
    membrane, bending, torsion, force = beam.energy_parts(z)
    assert force == pytest.approx(-1.0, rel=1e-13)


def test_quadrature_exact_for_cubics(beam):
    # xi2 = x^3 has xi2'' = 6x, int (xi2'')^2 over (-1/2,1/2) = 36/12 = 3.
    z = beam.interpolate(xi2=lambda x: x**3, dxi2=lambda x: 3 * x * x)
    expected = (1.0 / 24.0) * beam.form_w.c0 * 3.0
    assert beam.energy(z)[0] == pytest.approx(expected, rel=1e-12)


def test_metric_zero_and_bump(beam):
    a = beam.zero_state()
    assert beam.metric_sq(a, a)[0] == 0.0
    b = beam.interpolate(xi2=lambda x: 0.5 * x * x, dxi2=lambda x: x)
    # int (d xi2'')^2 = 1 -> (1/12) * C0_R = 1/3
    assert beam.metric_sq(a, b)[0] == pytest.approx(1.0 / 3.0, rel=1e-13)


def test_metric_symmetry_random_pairs(beam_r1, rng):
    for _ in range(50):
        a = 0.1 * rng.standard_normal(beam_r1.ndof)
        b = 0.1 * rng.standard_normal(beam_r1.ndof)
        assert beam_r1.metric_sq(a, b)[0] == pytest.approx(
            beam_r1.metric_sq(b, a)[0], rel=1e-12, abs=1e-15)


def test_metric_positivity(svk_forms, rng):
    fw, fr = svk_forms
    for r in (0.0, 0.5, 1.0):
        beam = Beam1D(make_mesh(1.0, 8), fw, fr, r=r)
        for _ in range(30):
            a = 0.1 * rng.standard_normal(beam.ndof)
            b = a + 0.01 * rng.standard_normal(beam.ndof)
            assert beam.metric_sq(a, b)[0] > 0.0


def test_energy_gradient_fd(beam_r1, rng):
    z = 0.1 * rng.standard_normal(beam_r1.ndof)
    _, grad, hess = beam_r1.energy(z, order=2)
    d = rng.standard_normal(beam_r1.ndof)
    d /= np.linalg.norm(d)
    step = 1e-6
    fd = (beam_r1.energy(z + step * d)[0]
          - beam_r1.energy(z - step * d)[0]) / (2 * step)
    assert fd == pytest.approx(float(grad @ d), rel=1e-6)
    assert np.allclose(hess, hess.T)


def test_gradient_zero_at_minimizer(beam):
    _, grad, _ = beam.energy(beam.zero_state(), order=1)
    assert np.all(grad == 0.0)


def test_hessian_constant_for_r0(beam, rng):
    h1 = beam.energy(0.1 * rng.standard_normal(beam.ndof), order=2)[2]
    h2 = beam.energy(0.1 * rng.standard_normal(beam.ndof), order=2)[2]
    assert np.allclose(h1, h2, atol=1e-12)


def test_metric_gradient_fd(beam_r1, rng):
    a = 0.1 * rng.standard_normal(beam_r1.ndof)
    z = 0.1 * rng.standard_normal(beam_r1.ndof)
    _, grad, _ = beam_r1.metric_sq(a, z, order=1)
    d = rng.standard_normal(beam_r1.ndof)
    d /= np.linalg.norm(d)
    step = 1e-6
    fd = (beam_r1.metric_sq(a, z + step * d)[0]
          - beam_r1.metric_sq(a, z - step * d)[0]) / (2 * step)
    assert fd == pytest.approx(float(grad @ d), rel=1e-6)


def test_metric_tensor_r0_matches_exact_quadratic(beam, rng):
    # r=0: D^2(a, b) is exactly the quadratic form of b - a.
    g = beam.metric_tensor(beam.zero_state())
    a = 0.1 * rng.standard_normal(beam.ndof)
    b = 0.1 * rng.standard_normal(beam.ndof)
    w = b - a
    assert beam.metric_sq(a, b)[0] == pytest.approx(float(w @ g @ w),
                                                    rel=1e-12)


def test_metric_tensor_finite_eps_r1(beam_r1, rng):
    z = 0.1 * rng.standard_normal(beam_r1.ndof)
    g = beam_r1.metric_tensor(z)
    d = rng.standard_normal(beam_r1.ndof)
    d /= np.linalg.norm(d)
    eps = 1e-5
    d2 = beam_r1.metric_sq(z, z + eps * d)[0]
    assert d2 / eps**2 == pytest.approx(float(d @ g @ d), rel=1e-4)


def test_metric_tensor_positive(beam_r1, rng):
    g = beam_r1.metric_tensor(0.1 * rng.standard_normal(beam_r1.ndof))
    for _ in range(100):
        w = rng.standard_normal(beam_r1.ndof)
        assert w @ g @ w > 0.0


def test_weak_residual_critical_point(beam):
    z = beam.zero_state()
    assert beam.weak_residual(z, beam.zero_state()) == 0.0


def test_weak_residual_r0_linear_flow(beam):
    # velocity = -(C0_W/C0_R) * z satisfies G v + grad phi = 0 exactly
    # because energy and metric operators are proportional at r = 0.
    z = smooth_state(beam)
    lam = beam.form_w.c0 / beam.form_r.c0
    res = beam.weak_residual(z, -lam * z)
    assert res < 1e-10


def test_weak_residual_dense_reassembly(beam_r1, rng):
    z = 0.1 * rng.standard_normal(beam_r1.ndof)
    v = rng.standard_normal(beam_r1.ndof)
    res = beam_r1.weak_residual(z, v)
    rho = beam_r1.metric_tensor(z) @ v + beam_r1.energy(z, order=1)[1]
    assert res == pytest.approx(float(np.linalg.norm(rho)), rel=1e-12)


def test_boundary_mask(beam):
    free = beam.free_mask()
    n = beam.n_nodes
    assert not free[0] and not free[n - 1]  # xi1 ends
    assert free.sum() == beam.ndof - 12
    assert beam.free_mask(clamped=False).all()


def test_generalized_convexity(beam, beam_r1, rng):
    # r=0 quadratic case: holds with tiny C.
    a = smooth_state(beam)
    b = 0.5 * a
    ok_m, ok_e = beam.generalized_convexity_check(a, b, C=1e-8)
    assert ok_m and ok_e
    # r=1 random pair with large C.
    a = 0.1 * rng.standard_normal(beam_r1.ndof)
    b = 0.1 * rng.standard_normal(beam_r1.ndof)
    ok_m, ok_e = beam_r1.generalized_convexity_check(a, b, C=1e3)
    assert ok_m and ok_e
    # a = b trivially ok.
    ok_m, ok_e = beam_r1.generalized_convexity_check(a, a, C=1.0)
    assert ok_m and ok_e


def test_triangle_inequality_statistical(beam_r1, rng):
    for _ in range(30):
        a = 0.1 * rng.standard_normal(beam_r1.ndof)
        b = 0.1 * rng.standard_normal(beam_r1.ndof)
        c = 0.1 * rng.standard_normal(beam_r1.ndof)
        dab = beam_r1.metric(a, b)
        dbc = beam_r1.metric(b, c)
        dac = beam_r1.metric(a, c)
        assert dac <= dab + dbc + 1e-12


def test_mesh_refinement_fourth_order(svk_forms):
    fw, fr = svk_forms
    import math

    def exact_fields(b):
        return b.interpolate(
            xi3=lambda x: math.sin(math.pi * x) * math.cos(x),
            dxi3=lambda x: (math.pi * math.cos(math.pi * x) * math.cos(x)
                            - math.sin(math.pi * x) * math.sin(x)))

    vals = []
    for n in (8, 16, 32, 64):
        b = Beam1D(make_mesh(1.0, n), fw, fr)
        vals.append(b.energy(exact_fields(b))[0])
    errs = [abs(v - vals[-1]) for v in vals[:-1]]
    # Hermite interpolation converges at fourth order in the element size
    # for the bending energy (H^2 seminorm squared error is O(h^4)).
    assert errs[1] / errs[0] < 0.15
    assert errs[2] / errs[1] < 0.15


def test_shape_errors(beam):
    with pytest.raises(ShapeError):
        beam.energy(np.zeros(3))
    with pytest.raises(ShapeError):
        make_mesh(1.0, 2)
