import json

import numpy as np
import pytest

from ndwave import operators as O
from ndwave.fields import PacketParams, RayField, RayGrid, sample
from ndwave.wavepacket import default_points, make_packet


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.mark.parametrize("op", [O.p_op(2, 0.5, 1.0), O.p0_op(order="commuted"), O.boost_op(0),
                                O.bracket(O.rotation_op(0), O.rotation_op(1)), O.r(-1) @ O.SIGMA_INV @ O.r(1)])
def test_prefix_roundtrip(op):
    text = op.to_json()
    back = O.from_prefix(json.loads(text))
    assert back.to_json() == text
    assert O.from_prefix(text).to_json() == text


def test_prefix_rejects_unknown():
    with pytest.raises(ValueError):
        O.from_prefix(["frobnicate", 1])
    with pytest.raises(ValueError):
        O.Prim("grad", 5)


def test_composition_order(moving):
    # (r o d_r) f = r d_r f, not d_r (r f)
    psi = make_packet(moving)
    pts = default_points(moving, n=16)
    a = (O.r(1) @ O.D_R)(psi).evaluate(pts)
    b = psi.d_r().mul_r().evaluate(pts)
    np.testing.assert_allclose(a, b)


def test_momentum_eigenvalues(moving):
    psi = make_packet(moving)
    pts = default_points(moving, n=32)
    base = psi.evaluate(pts)
    for i, pi in enumerate(O.apply_p_tilde(psi)):
        assert np.linalg.norm(pi.evaluate(pts) - moving.p[i] * base) <= 1e-8 * np.linalg.norm(base) + 1e-14
    p0 = O.apply_p0_tilde(psi).evaluate(pts)
    assert rel(p0, moving.p0 * base) < 1e-8


def test_usual_momentum_is_not_diagonal(moving):
    # -i grad has no eigenvalue on the packet; only the integral operators do
    psi = make_packet(moving)
    pts = default_points(moving, n=32)
    pz = O.apply_pi(psi)[2].evaluate(pts)
    assert rel(pz, moving.p[2] * psi.evaluate(pts)) > 0.1


def test_rotation_bracket_closed_form(moving):
    psi = make_packet(PacketParams(1.0, 1.0, (0.2, -0.1, 0.3)))
    pts = default_points(moving, n=32)
    J = [O.rotation_op(i) for i in range(3)]
    lhs = O.bracket(J[0], J[1])(psi).evaluate(pts)
    rhs = 1j * J[2](psi).evaluate(pts)
    assert rel(lhs, rhs) < 1e-12


def test_rotation_annihilates_resting_packet(resting):
    psi = make_packet(resting)
    pts = default_points(resting, n=16)
    for Ji in O.apply_rotation(psi):
        assert np.max(np.abs(Ji.evaluate(pts))) < 1e-12


def test_ray_backend_rejects_angular_derivatives():
    g = RayGrid.spectral(16, 2, 2)
    f = RayField(g, np.ones((g.ndir, g.n_r)))
    with pytest.raises(TypeError):
        O.grad(0)(f)


def test_ray_backend_radial_maps(resting):
    g = RayGrid.spectral(512, 2, 2)
    psi = make_packet(resting)
    f = sample(psi, g)
    exact = O.SIGMA(psi).evaluate(g.points())
    core = g.radii < 10
    np.testing.assert_allclose(O.SIGMA(f).values[:, core], exact[:, core], atol=1e-6)
