import math

import numpy as np
import pytest

from ndwave import wavepacket as W
from ndwave.errors import SuperluminalRelativistic
from ndwave.fields import PacketParams, RayGrid

DIAGONAL = PacketParams(0.5, 1.0, (0.5 / math.sqrt(2), 0.0, 0.5 / math.sqrt(2)))


def test_closed_form_matches_direct_formula(moving):
    pts = W.default_points(moving, t=1.5, n=16)
    f = W.packet_callable(moving)
    direct = np.array([complex(f(x, 1.5)) for x in pts])
    np.testing.assert_allclose(W.make_packet(moving, 1.5).evaluate(pts), direct, rtol=1e-12, atol=1e-12)


def test_time_derivative_against_central_difference(moving):
    pts = W.default_points(moving, t=0.7, n=8)
    h = 1e-5
    f = W.make_packet
    fd = (f(moving, 0.7 + h).evaluate(pts) - f(moving, 0.7 - h).evaluate(pts)) / (2 * h)
    np.testing.assert_allclose(W.time_derivative(moving, pts, 0.7), fd, rtol=1e-7)


@pytest.mark.parametrize("P", [PacketParams(1.0, 1.0, (0.0, 0.0, 0.3)), DIAGONAL, PacketParams(1.0, 0.0)])
def test_free_equation_and_transport(P):
    for t in (0.0, 2.0):
        assert W.schrodinger_residual(P, t=t).passed
        assert W.transport_residual(P, t=t).passed
        assert W.gauge_laplacian_residual(P, t=t).passed


def test_relativistic_constants():
    # (m g c, m g v) with v = 0.6 z, c = 1
    kappa, K, omega = W.packet_constants(PacketParams(1.0, 1.0, (0.0, 0.0, 0.6)), W.REL)
    assert kappa == pytest.approx(1.25, abs=1e-15)
    np.testing.assert_allclose(K, [0, 0, 0.75], atol=1e-15)
    assert omega == pytest.approx(0.4)


def test_relativistic_packet_is_not_free_solution():
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.6))
    rep = W.schrodinger_residual(P, kind=W.REL)
    assert rep.expect_fail and not rep.passed and rep.ok


def test_modified_evolution_needs_gamma(moving):
    assert W.modified_evolution_residual(moving).passed
    neg = W.modified_evolution_residual(moving, include_gamma=False)
    assert not neg.passed and neg.ok


def test_superluminal_relativistic_rejected():
    with pytest.raises(SuperluminalRelativistic):
        W.make_packet(PacketParams(1.0, 1.0, (0.0, 0.0, 1.5)), kind=W.REL)


def test_fd_laplacian_converges_at_fourth_order(moving):
    rep = W.schrodinger_fd_convergence(moving, grid=W.default_points(moving, n=32, radius=4.0))
    assert rep.convergence_order == pytest.approx(4.0, abs=0.5)
    assert rep.passed


def test_energy_expansion_remainder_tends_to_one():
    vals = [W.energy_expansion_remainder(PacketParams(1.0, 1.0, (0.0, 0.0, v))) for v in (0.1, 0.01)]
    assert abs(vals[1] - 1) < abs(vals[0] - 1) < 0.05


def test_residuals_on_ray_grid(moving):
    g = RayGrid(n_theta=4, n_phi=8, n_r=16, R=6.0)
    assert W.schrodinger_residual(moving, grid=g).passed
