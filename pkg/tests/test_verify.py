import json

import numpy as np
import pytest

from ndwave import operators as O
from ndwave import verify as V
from ndwave.report import CheckReport, observed_order, table


def test_report_semantics():
    r = CheckReport("x", 1e-3, 1e-2)
    assert r.passed and r.ok
    neg = CheckReport("y", 1.0, 1e-2, expect_fail=True)
    assert not neg.passed and neg.ok
    back = CheckReport.from_dict(json.loads(neg.to_json()))
    assert back.to_dict() == neg.to_dict()
    with pytest.raises(ValueError):
        CheckReport("z", 0.0, -1.0)
    text = table([r, neg])
    assert "fail (expected)" in text and "pass" in text


def test_observed_order():
    h = np.array([0.1, 0.05, 0.025])
    assert observed_order(3 * h ** 2, h) == pytest.approx(2.0)
    assert observed_order([0.0, 0.0], [1, 2]) is None


def test_run_suite_rejects_unknown():
    with pytest.raises(ValueError):
        V.run_suite("nope")


def test_closed_transform_checks_exact():
    reps = V.closed_transform_checks()
    assert len(reps) == 8
    assert all(r.residual == 0.0 or r.residual < 1e-14 for r in reps)


def test_rotation_bracket_on_line_backend():
    rep = V.bracket_check(O.rotation_op(0), O.rotation_op(1), 1j * O.rotation_op(2), check_id="J1_J2",
                          thetas=V.test_thetas(2))
    assert rep.passed
    assert rep.params["n_fields"] == 2


def test_wrong_bracket_fails():
    # [J1, J2] = i J3, so i J1 is not the commutator
    rep = V.bracket_check(O.rotation_op(0), O.rotation_op(1), 1j * O.rotation_op(0), thetas=V.test_thetas(2))
    assert not rep.passed


def test_bracket_table_covers_all_generators():
    ids = [b[0] for b in V.lorentz_brackets()]
    assert len(ids) == len(set(ids)) == 13


@pytest.mark.parametrize("kind", ["l0", "r_l0_r", "S_kernel"])
def test_positivity_small(kind):
    rep = V.positivity_spectrum(kind, n=64)
    assert rep.passed
    assert rep.params["min_eig_rel"] >= -1e-8


def test_adjointness_small():
    # the smooth-subspace checks need n >= 128 to resolve the Hermite basis
    assert all(r.passed for r in V.adjoint_suite(n=128))


def test_positivity_bad_kind():
    with pytest.raises(ValueError):
        V.positivity_spectrum("nope", n=16)


def test_eigen_suite_has_negative_test():
    reps = V.eigen_suite()
    neg = [r for r in reps if r.expect_fail]
    assert len(neg) == 1 and neg[0].ok
    assert all(r.ok for r in reps)


def test_boost_richardson_ratio():
    from ndwave.fields import PacketParams

    rep = V.boost_richardson_check(PacketParams(1.0, 1.0, (0.0, 0.0, 0.3)))
    assert rep.params["ratio"] == pytest.approx(4.0, abs=0.5)
    assert rep.convergence_order == pytest.approx(2.0, abs=0.1)
