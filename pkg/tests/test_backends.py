"""The pointwise and line backends against each other and against exact identities."""
import jax.numpy as jnp
import numpy as np
import pytest

from ndwave import line as L
from ndwave import operators as O
from ndwave import pointwise as pw
from ndwave import verify as V

TH = V.test_thetas(2)
PTS = V.test_points(1, per_field=4, seed=3)


def fn(x, th):
    return V.test_field(x, th)


def line_values(op, theta):
    f = L.leaf(fn)
    return L.evaluate([O.apply(op, f), f], PTS, jnp.asarray(np.tile(theta, (len(PTS), 1))))


def point_values(op, theta):
    f = pw.FieldFunction(fn)
    return pw.evaluate_many([O.apply(op, f), f], PTS, jnp.asarray(theta))


@pytest.mark.parametrize("op", [O.H_MINUS, O.H_PLUS @ O.r(1), O.SIGMA_INV, O.r(-1) @ O.SIGMA_INV @ O.r(1)],
                         ids=["H-", "H+r", "SigmaInv", "conj"])
def test_line_and_pointwise_agree(op):
    a, f = line_values(op, TH[0])
    b, g = point_values(op, TH[0])
    np.testing.assert_allclose(f, g, rtol=1e-13)
    assert np.max(np.abs(a - b)) < 1e-6 * np.max(np.abs(f))


def test_line_hilbert_pair_inverts():
    # H- H+ = -1 on the line
    a, f = line_values(O.H_MINUS @ O.H_PLUS, TH[1])
    assert np.max(np.abs(a + f)) < 1e-8 * np.max(np.abs(f))


def test_line_dilation_inverse():
    a, f = line_values(O.SIGMA @ O.SIGMA_INV, TH[0])
    assert np.max(np.abs(a - f)) < 1e-9 * np.max(np.abs(f))


def test_local_operators_are_exact_on_leaves():
    a, _ = line_values(O.LAP, TH[0])
    b, _ = point_values(O.LAP, TH[0])
    np.testing.assert_allclose(a, b, rtol=1e-12)
