import numpy as np
import pytest

from viscobeam.beam1d import Beam1D
from viscobeam.fem import make_mesh
from viscobeam.material import MaterialModel
from viscobeam.quadforms import reduced_forms


@pytest.fixture(scope="session")
def svk():
    return MaterialModel()


@pytest.fixture(scope="session")
def svk_forms(svk):
    return reduced_forms(svk)


@pytest.fixture
def beam(svk_forms):
    fw, fr = svk_forms
    return Beam1D(make_mesh(1.0, 16), fw, fr, r=0.0)


@pytest.fixture
def beam_r1(svk_forms):
    fw, fr = svk_forms
    return Beam1D(make_mesh(1.0, 16), fw, fr, r=1.0)


def smooth_state(beam, a1=0.05, a2=0.05, a3=0.1, a4=0.1):
    """Standard smooth datum: clamped-compatible bumps, theta with
    compact support away from the outermost two elements."""
    import math

    l = beam.mesh.length
    n = beam.mesh.n_elems
    s0, s1 = 2.0 / n, 1.0 - 2.0 / n
    norm = ((s1 - s0) ** 2 / 4.0) ** 2

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
        return a4 * ((s - s0) * (s1 - s)) ** 2 / norm

    return beam.interpolate(
        xi1=lambda x: a1 * math.sin(math.pi * (x / l + 0.5)),
        xi2=lambda x: a2 * bump(x), dxi2=lambda x: a2 * dbump(x),
        xi3=lambda x: a3 * bump(x), dxi3=lambda x: a3 * dbump(x),
        theta=theta)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
