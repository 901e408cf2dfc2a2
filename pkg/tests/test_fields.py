import json
import math

import numpy as np
import pytest

from ndwave.errors import DegreeCapExceeded, GridMismatch, OffCenterError
from ndwave.fields import (CartesianField, ClosedFormField, PacketParams, RayField, RayGrid, canonicalize,
                           export_csv, inner, l2_norm, reduce_monomial, sample)
from ndwave.wavepacket import make_packet


def test_packet_params_derived_quantities():
    P = PacketParams(2.0, 1.0, (0.0, 0.0, 0.6))
    assert P.speed == pytest.approx(0.6)
    assert P.p0 == pytest.approx(2.0 * math.hypot(1.0, 0.6))
    assert P.gamma == pytest.approx(1.25)
    np.testing.assert_allclose(P.p, [0, 0, 1.2])
    assert PacketParams.from_dict(P.to_dict()) == P


@pytest.mark.parametrize("bad", [dict(m=0, c=1), dict(m=1, c=-1), dict(m=1, c=1, v=(1, 2))])
def test_packet_params_rejects_invalid(bad):
    with pytest.raises(ValueError):
        PacketParams(**bad)


def test_gamma_needs_subluminal():
    with pytest.raises(ValueError):
        PacketParams(1.0, 0.5, (0.0, 0.0, 0.6)).gamma


def test_reduce_monomial_uses_unit_sphere():
    # z^2 -> 1 - x^2 - y^2
    red = dict(reduce_monomial((0, 0, 2)))
    assert red == {(0, 0, 0): 1.0, (2, 0, 0): -1.0, (0, 2, 0): -1.0}


def test_packet_at_rest_is_sinc(resting):
    psi = make_packet(resting)
    r = np.array([0.3, 1.0, 2.5, 7.0])
    pts = np.stack([r / math.sqrt(3)] * 3, axis=1)
    np.testing.assert_allclose(psi.evaluate(pts), np.sin(r) / r, rtol=1e-14)


def test_limit_at_center_removes_singularity(moving):
    psi = make_packet(moving)
    assert abs(psi.limit_at_center() - moving.p0) < 1e-12


def test_algebra_and_canonical_form(moving):
    psi = make_packet(moving)
    zero = psi - psi
    assert zero.is_zero()
    twice = canonicalize(psi + psi)
    assert twice == canonicalize(psi * 2)


def test_gradient_matches_finite_difference(moving, rng):
    psi = make_packet(moving)
    pts = rng.normal(size=(5, 3)) * 2
    h = 1e-5
    for i, g in enumerate(psi.grad()):
        e = np.zeros(3)
        e[i] = h
        fd = (psi.evaluate(pts + e) - psi.evaluate(pts - e)) / (2 * h)
        np.testing.assert_allclose(g.evaluate(pts), fd, rtol=1e-7, atol=1e-9)


def test_laplacian_is_helmholtz_for_packet_at_rest(resting):
    psi = make_packet(resting)
    pts = np.array([[0.4, 0.1, -0.7], [1.5, 2.0, 0.3]])
    np.testing.assert_allclose(psi.laplacian().evaluate(pts), -psi.evaluate(pts), rtol=1e-12)


def test_degree_cap_enforced(resting):
    f = make_packet(resting)
    with pytest.raises(DegreeCapExceeded):
        for i in range(8):
            f = f.mul_rhat(i % 2)


def test_radial_ops_require_origin(moving):
    shifted = make_packet(moving, t=1.0)
    with pytest.raises(OffCenterError):
        shifted.require_origin()


def test_roundtrip_dict(moving):
    psi = make_packet(moving, t=0.5)
    again = ClosedFormField.from_dict(json.loads(json.dumps(psi.to_dict())))
    pts = np.array([[0.2, 0.3, 0.4], [1.0, -1.0, 2.0]])
    np.testing.assert_allclose(again.evaluate(pts), psi.evaluate(pts))


def test_raygrid_quadrature_integrates_gaussian():
    g = RayGrid(n_theta=8, n_phi=16, n_r=256, R=12.0, radial="gauss")
    f = RayField(g, np.exp(-g.radii ** 2)[None, :] * np.ones((g.ndir, 1)))
    assert l2_norm(f) ** 2 == pytest.approx((math.pi / 2) ** 1.5, rel=1e-10)
    assert inner(f, f).real == pytest.approx(l2_norm(f) ** 2)


def test_spectral_grid_is_self_dual():
    g = RayGrid.spectral(64, 2, 2)
    assert g.is_self_dual
    assert g.h == pytest.approx(math.sqrt(math.pi / 64))
    np.testing.assert_allclose(g.directions[g.antipode], -g.directions, atol=1e-15)


def test_grid_mismatch():
    a = RayField(RayGrid.spectral(16, 2, 2), np.ones((4, 16)))
    b = RayField(RayGrid.spectral(32, 2, 2), np.ones((4, 32)))
    with pytest.raises(GridMismatch):
        a + b


def test_sample_and_export(tmp_path, resting):
    psi = make_packet(resting)
    g = RayGrid(n_theta=2, n_phi=2, n_r=8, R=4.0)
    f = sample(psi, g)
    path = tmp_path / "f.csv"
    export_csv(f, str(path))
    rows = path.read_text().splitlines()
    assert rows[0] == "dir_index,theta,phi,r,re,im"
    assert len(rows) == 1 + g.ndir * g.n_r
    _, _, _, r, re, im = map(float, rows[1].split(","))
    assert re == pytest.approx(math.sin(r) / r, rel=1e-14) and im == 0


def test_cartesian_export_roundtrip(tmp_path, resting):
    c = sample(make_packet(resting), (8.0, 8))
    assert isinstance(c, CartesianField)
    path = str(tmp_path / "box.c64")
    c.export(path)
    back = CartesianField.load(path)
    np.testing.assert_allclose(back.values, c.values, rtol=1e-6, atol=1e-7)
    assert back.L == 8.0 and back.N == 8


def test_moving_packet_frozen_value(moving):
    # m = c = 1, v = 0.3 z at r = z = 1: sin(sqrt(1.09)) exp(0.3 i)
    val = make_packet(moving).evaluate(np.array([[0.0, 0.0, 1.0]]))[0]
    assert abs(val) == pytest.approx(0.8644376134861928, rel=1e-14)
    assert np.angle(val) == pytest.approx(0.3, rel=1e-14)


def test_c_zero_packet(rng):
    # c = 0 leaves kappa = m |v|
    P = PacketParams(1.0, 0.0, (0.0, 0.0, 0.3))
    assert P.p0 == pytest.approx(0.3)
    pts = rng.normal(size=(4, 3))
    r = np.linalg.norm(pts, axis=1)
    np.testing.assert_allclose(np.abs(make_packet(P).evaluate(pts)), np.abs(np.sin(0.3 * r) / r), rtol=1e-13)
