import json
import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from ndwave import products as P
from ndwave import verify as V
from ndwave.errors import DivergentProduct
from ndwave.fields import PacketParams, RayField, RayGrid
from ndwave.wavepacket import make_packet

# pi^2 / |p - p'| for m = 1 and v, v' = +-0.3 z, and for +-0.25 z
PI2_OVER_06 = 16.449340668482265
PI2_OVER_05 = 19.739208802178716


def packet(*v, m=1.0, c=1.0):
    return make_packet(PacketParams(m, c, v))


def test_quadrature_rules():
    x, w = P.sphere_rule(8, 16)
    assert w.sum() == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.sum(w * x[:, 2] ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-13)
    r, wr = P.radial_rule(10.0, 3.0)
    assert np.sum(wr * r ** 5) == pytest.approx(1e6 / 6, rel=1e-13)


def test_reference_values():
    assert P.standard_reference((0, 0, 0.3), (0, 0, -0.3)) == pytest.approx(PI2_OVER_06, rel=1e-15)
    assert P.radial_reduction(1.0, 1.0, 0.6) == pytest.approx(PI2_OVER_06, rel=1e-15)
    assert P.tapered_volume(0.5) == pytest.approx(8 * math.pi)


def test_tapered_value_matches_sine_integral_chain():
    phi, psi = packet(0, 0, -0.3), packet(0, 0, 0.3)
    a, b = P.packet_signature(psi)[0], P.packet_signature(phi)[0]
    for eps in (0.2, 0.05):
        res = P.standard_product(phi, psi, eps=eps, extrapolate=False)
        assert res.value == pytest.approx(P.radial_reduction(a, b, 0.6, eps), rel=1e-10)


def test_standard_product_opposite_velocities():
    res = P.standard_product_packets(PacketParams(1, 1, (0, 0, 0.3)), PacketParams(1, 1, (0, 0, -0.3)))
    assert res.extrapolated and len(res.raw) == 4
    assert res.analytic_ref == pytest.approx(PI2_OVER_06)
    assert res.rel_error < 1e-2
    assert abs(res.value - res.analytic_ref) <= 3 * res.error


def test_standard_product_unequal_speeds():
    # |p - p'| = 0.5 with p0 != p0'
    res = P.standard_product(packet(0, 0, 0.2), packet(0.3, 0, 0.6))
    d = math.hypot(0.3, 0.4)
    assert d == pytest.approx(0.5)
    assert res.value.real == pytest.approx(PI2_OVER_05, rel=1e-2)


def test_standard_product_is_hermitian():
    a, b = packet(0, 0, 0.3), packet(0.2, 0, 0)
    ab, ba = P.standard_product(a, b).value, P.standard_product(b, a).value
    assert ab == pytest.approx(np.conj(ba), rel=1e-6)


def test_equal_velocities_diverge():
    with pytest.raises(DivergentProduct):
        P.standard_product(packet(0, 0, 0.3), packet(0, 0, 0.3))
    with pytest.raises(DivergentProduct):
        P.standard_reference((0, 0, 1), (0, 0, 1))


def test_packet_signature():
    sig = P.packet_signature(packet(0.1, 0, 0.2, m=2.0) * 3)
    assert sig[0] == pytest.approx(2 * math.sqrt(1.05))
    np.testing.assert_allclose(sig[1], [0.2, 0, 0.4])
    assert sig[2] == pytest.approx(3)
    assert P.packet_signature(packet(0, 0, 0).mul_r()) is None


def test_s_product_off_diagonal_matches_tapered_oracle():
    res = P.s_product(packet(0, 0, -0.3), packet(0, 0, 0.3))
    assert res.rel_error < 1e-8
    diag = P.s_product(packet(0, 0, 0.3), packet(0, 0, 0.3))
    assert abs(res.value) / abs(diag.value) < 1e-3


def test_s_delta_coefficient():
    P3 = PacketParams(1, 1, (0, 0, 0.3))
    res = P.s_delta_coefficient(make_packet(P3))
    assert res.analytic_ref == pytest.approx(P3.p0 / 2)
    assert res.rel_error < 1e-8


def test_s_integrand_reduces_to_plane_wave():
    # for opposite momenta the integrand is (p0 / 2) exp(2 i p.r)
    P3 = PacketParams(1, 1, (0, 0, 0.3))
    F = P.s_integrand(packet(0, 0, -0.3), make_packet(P3))
    pts = np.array([[0.3, 0.1, 2.0], [-1.0, 2.0, 0.5]])
    np.testing.assert_allclose(F.evaluate(pts), P3.p0 / 2 * np.exp(2j * 0.3 * pts[:, 2]), rtol=1e-12)


def _gapped(g, theta):
    # smooth along every line, with no spectral weight near zero radial frequency
    pts = jnp.asarray(g.points().reshape(-1, 3))
    vals = np.asarray(jax.vmap(lambda x: V.test_field(x, jnp.asarray(theta)))(pts))
    return RayField(g, vals.reshape(g.ndir, g.n_r))


def test_ray_s_product_is_hermitian_and_consistent():
    g = RayGrid.spectral(256, 4, 8)
    th = V.test_thetas()
    f, h = _gapped(g, th[0]), _gapped(g, th[1])
    fh, hf = P.s_product(f, h).value, P.s_product(h, f).value
    assert fh == pytest.approx(np.conj(hf), abs=1e-10)
    assert fh == pytest.approx(P.s_product_unsymmetrized(f, h), abs=1e-10)
    assert P.s_product(f, f).value.real > 0


def test_ray_standard_product():
    g = RayGrid(n_theta=8, n_phi=16, n_r=256, R=12.0, radial="gauss")
    f = RayField(g, np.tile(np.exp(-g.radii ** 2 / 2), (g.ndir, 1)))
    assert P.standard_product(f, f).value.real == pytest.approx(math.pi ** 1.5, rel=1e-10)


def test_product_result_serialization():
    with pytest.raises(ValueError):
        P.ProductResult(1.0, {}, extrapolated=True, raw=[(0.1, 1.0)])
    res = P.ProductResult(1 + 2j, {"taper": 0.1}, analytic_ref=1.0, raw=[(0.1, 1 + 2j)])
    d = json.loads(res.to_json())
    assert d["value"] == [1.0, 2.0] and d["rel_error"] == pytest.approx(2.0)
    assert res.to_json() == res.to_json()


def test_time_invariance_short():
    rep = P.product_time_invariance(PacketParams(1, 1, (0, 0, 0.3)), PacketParams(1, 1, (0, 0, -0.3)),
                                    times=(0.0, 1.0))
    assert rep.passed
