"""Acceptance criteria 1-8, one pass/fail each, at their stated tolerances."""
import math
import time

import numpy as np
import pytest

from ndwave import products as Pr
from ndwave import propagate as Pg
from ndwave import verify as V
from ndwave import wavepacket as W
from ndwave.fields import PacketParams

# frozen oracle values
PI2_OVER_06 = 16.449340668482265       # pi^2 / |p - p'| for v = +-0.3 z, m = 1
GAUSS_RATIO_T5 = 1.6007810593582121    # sqrt(1 + (5 / (1 * 2^2))^2)


def timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


def assert_all_ok(reports):
    bad = [(r.check_id, r.residual, r.tolerance) for r in reports if not r.ok]
    assert not bad, bad


def test_1_identities():
    reps, dt = timed(V.identities_suite, tol=1e-10)
    assert dt < 10.0
    assert_all_ok(reps)
    positive = [r for r in reps if not r.expect_fail]
    assert all(r.residual < 1e-10 for r in positive)
    seen = {(r.params["params"]["m"], r.params["params"]["c"], tuple(r.params["params"]["v"])) for r in positive}
    speeds = {round(math.sqrt(sum(x * x for x in v)), 12) for _, _, v in seen}
    assert {m for m, _, _ in seen} == {0.5, 1.0} and {c for _, c, _ in seen} == {0.0, 1.0}
    assert speeds == {0.0, 0.3, 0.5}
    ids = {r.check_id for r in positive}
    assert {"schrodinger", "transport", "gauge_laplacian", "gauge_laplacian_rel", "transport_rel",
            "modified_evolution"} <= ids


def test_2_transform_oracles():
    reps, dt = timed(V.transform_suite)
    assert dt < 120.0
    closed = [r for r in reps if not r.check_id.endswith("_numeric")]
    numeric = [r for r in reps if r.check_id.endswith("_numeric")]
    assert len(closed) == 8 and len(numeric) == 5
    assert all(r.residual <= 1e-12 for r in closed)
    for r in numeric:
        assert r.residual <= r.tolerance, r.check_id
        assert r.convergence_order is not None and r.convergence_order >= 2.0 - 0.05, (r.check_id, r.convergence_order)


def test_3_eigenvalues():
    reps = V.eigen_suite(tol=1e-8)
    assert_all_ok(reps)
    closed = [r for r in reps if r.params.get("backend") == "closed-form" and not r.expect_fail]
    assert all(r.residual < 1e-8 for r in closed)
    rel = {r.check_id: r for r in closed if r.check_id.endswith("rel")}
    assert complex(rel["p0[as_written] v=0.6z rel"].params["eigenvalue"]) == pytest.approx(1.25, abs=1e-14)
    assert complex(rel["p3 v=0.6z rel"].params["eigenvalue"]) == pytest.approx(0.75, abs=1e-14)
    assert complex(rel["p1 v=0.6z rel"].params["eigenvalue"]) == 0


def test_4_lorentz_brackets():
    reps, dt = timed(V.lorentz_suite)
    assert dt < 600.0
    assert len(reps) == 13
    for r in reps:
        assert r.residual < r.tolerance, (r.check_id, r.residual, r.params["estimate"])
        assert r.tolerance == pytest.approx(10 * r.params["estimate"])
        assert "residuals" in r.params and len(r.params["residuals"]) == 2


def test_5_boost_action():
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    exact = [V.boost_action_check(P, e) for e in (0.0, 1e-2, 5e-3)]
    assert all(r.passed for r in exact)
    rich = V.boost_richardson_check(P, eps=(1e-2, 5e-3))
    assert abs(rich.params["ratio"] - 4.0) <= 0.5
    assert rich.passed


def test_6_positivity_and_adjointness():
    for kind in ("l0", "r_l0_r"):
        rep = V.positivity_spectrum(kind, n=256)
        assert rep.params["min_eig_rel"] >= -1e-8, kind
    adj = {r.check_id: r for r in V.adjoint_suite(n=256)}
    assert adj["adjoint_S_kernel"].residual < 1e-8
    assert adj["adjoint_H_pm_r"].residual < 1e-6
    assert adj["adjoint_unitary"].residual < 1e-6


@pytest.mark.parametrize("v1,v2", [
    ((0, 0, 0.05), (0, 0, -0.05)),      # |dp| = 0.1
    ((0, 0, 0.3), (0, 0, -0.3)),        # 0.6
    ((0, 0, 0.3), (0, 0, 0.0)),         # 0.3, unequal speeds
    ((0.2, 0, 0), (0, 0.3, 0.2)),       # non-collinear
    ((0, 0, 1.0), (0, 0, -1.0)),        # 2
])
def test_7a_standard_product_sweep(v1, v2):
    P1, P2 = PacketParams(1.0, 1.0, v1), PacketParams(1.0, 1.0, v2)
    dp = float(np.linalg.norm(P1.p - P2.p))
    assert 0.1 - 1e-12 <= dp <= 2 + 1e-12
    res = Pr.standard_product_packets(P1, P2)
    ref = math.pi ** 2 / dp
    assert res.analytic_ref == pytest.approx(ref, rel=1e-14)
    assert abs(res.value - ref) / ref < 0.01


def test_7b_s_products_and_time_invariance():
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    assert Pr.standard_reference(P.p, -P.p) == pytest.approx(PI2_OVER_06, rel=1e-15)
    psi, psi_m = W.make_packet(P), W.make_packet(PacketParams(1.0, 1.0, (0.0, 0.0, -0.3)))
    off = Pr.s_product(psi_m, psi, eps=0.04)
    diag = Pr.s_product(psi, psi, eps=0.04)
    assert abs(off.value) / abs(diag.value) < 1e-3
    coef = Pr.s_delta_coefficient(psi, eps=0.04)
    assert coef.analytic_ref == pytest.approx(P.p0 / 2)
    assert coef.rel_error < 0.01
    inv = Pr.product_time_invariance(P, PacketParams(1.0, 1.0, (0.0, 0.0, -0.3)), times=(0.0, 1.0, 2.5, 5.0))
    assert inv.residual < 0.01


@pytest.fixture(scope="module")
def default_runs():
    cfg = Pg.PropagationConfig()
    assert (cfg.L, cfg.N, cfg.params.v, cfg.t_final) == (80.0, 256, (0.0, 0.0, 0.3), 5.0)
    t0 = time.perf_counter()
    packet = Pg.propagate(cfg)
    contrast = Pg.dispersion_contrast(cfg, sigma=2.0, tol=0.02, packet_result=packet)
    return cfg, packet, contrast, time.perf_counter() - t0


def test_8_propagation(default_runs):
    cfg, packet, contrast, dt = default_runs
    assert dt < 900.0
    assert packet.times[-1] == pytest.approx(5.0)
    assert packet.max_shape_error < 1e-2
    vel = packet.centroid_velocity()
    assert abs(vel[2] - 0.3) <= 0.02 * 0.3 and np.linalg.norm(vel[:2]) <= 0.02 * 0.3
    assert packet.max_norm_drift < 1e-12
    ratio = contrast.params["gaussian_width_ratio"][-1]
    assert abs(ratio / GAUSS_RATIO_T5 - 1) < 0.02
    assert contrast.residual < 0.02
