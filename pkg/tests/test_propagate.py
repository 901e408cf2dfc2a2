import csv
import math

import numpy as np
import pytest

from ndwave.errors import ConfigError, CoreExitedBox, NyquistViolation
from ndwave.fields import CartesianField, PacketParams
from ndwave import propagate as Pg

SMALL = Pg.PropagationConfig(L=40.0, N=64, dt=0.1, steps=20, core_radius=5.0, snapshot_every=5)


@pytest.fixture(scope="module")
def small_run():
    return Pg.propagate(SMALL, keep_final=True)


def test_window_profile():
    x = np.array([-20.0, -17.0, -14.0, 0.0, 14.0, 20.0])
    w = Pg.window_1d(x, 40.0, 6.0)
    np.testing.assert_allclose(w, [0.0, 0.5, 1.0, 1.0, 1.0, 0.0], atol=1e-15)


def test_gaussian_reference_solves_free_equation():
    # Fourier evolution of the sampled Gaussian matches the analytic one on a large box
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    c = Pg.PropagationConfig(L=40.0, N=64, window=0.0, params=P)
    x = CartesianField.axis(c.L, c.N)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    pts = np.stack([X, Y, Z], -1)
    f = CartesianField(c.L, c.N, Pg.gaussian_packet(P, 2.0, pts, 0.0))
    g = Pg.free_step(f, 1.5, P.m)
    np.testing.assert_allclose(g.values, Pg.gaussian_packet(P, 2.0, pts, 1.5), atol=1e-10)
    assert g.t == 1.5


def test_width_ratio_formula():
    assert Pg.gaussian_width_ratio(5.0, 1.0, 2.0) == pytest.approx(1.6007810593582121, rel=1e-15)


def test_config_guards():
    with pytest.raises(ConfigError):
        Pg.PropagationConfig(N=100).validate()
    with pytest.raises(NyquistViolation):
        Pg.PropagationConfig(L=80.0, N=64).validate()
    with pytest.raises(CoreExitedBox):
        Pg.PropagationConfig(steps=2000).validate()
    with pytest.raises(ConfigError):
        Pg.PropagationConfig.from_dict({"L": 10.0, "dx": 0.1})


def test_config_roundtrip():
    assert Pg.PropagationConfig.from_dict(SMALL.to_dict()) == SMALL


def test_small_run_keeps_shape(small_run):
    assert small_run.times.tolist() == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    assert small_run.max_shape_error < 1e-3
    assert small_run.max_norm_drift < 1e-12
    np.testing.assert_allclose(small_run.centroid_velocity(), [0, 0, 0.3], atol=0.3 * 0.02)
    checks = Pg.nondispersion_checks(small_run)
    assert [c.check_id for c in checks] == ["shape_error", "centroid_velocity", "norm_conservation"]
    assert all(c.passed for c in checks)


def test_core_centroid_of_shifted_blob():
    L, N = 20.0, 32
    x = CartesianField.axis(L, N)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    vals = np.exp(-((X - 1.25) ** 2 + Y ** 2 + (Z + 2.5) ** 2))
    c = Pg.core_centroid(vals, L, N, (0.0, 0.0, 0.0), 6.0)
    np.testing.assert_allclose(c, [1.25, 0.0, -2.5], atol=1e-8)


def test_gaussian_contrast(small_run):
    rep = Pg.dispersion_contrast(SMALL, packet_result=small_run)
    assert rep.passed
    ratios = rep.params["gaussian_width_ratio"]
    assert ratios[-1] == pytest.approx(math.sqrt(1 + (2.0 / 4.0) ** 2), rel=1e-6)
    # the Gaussian changes shape while the packet does not
    assert rep.params["gaussian_shape_vs_initial"][-1] > 10 * max(rep.params["packet_shape_error"])


def test_csv_and_export(tmp_path, small_run):
    path = tmp_path / "m.csv"
    small_run.write_csv(str(path))
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == Pg.CSV_COLUMNS
    assert len(rows) == 1 + len(small_run.metrics)
    small_run.final.export(str(tmp_path / "final.c64"))
    back = CartesianField.load(str(tmp_path / "final.c64"))
    assert back.t == pytest.approx(2.0)
    d = small_run.to_dict()
    assert d["config"] == SMALL.to_dict() and "runtime" not in d
