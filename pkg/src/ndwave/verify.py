"""Verification engine: brackets, eigenvalue residuals, boost action, spectra.

Every check returns a :class:`CheckReport`. Tolerances come from error
estimates (two resolutions, leak bounds, rounding floors) unless a check is a
fixed-threshold acceptance bound, in which case the threshold is stated in the
report notes.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.linalg

import jax
import jax.numpy as jnp

from . import line as L
from . import operators as O
from . import pointwise as pw
from . import transforms as T
from . import wavepacket as W
from .errors import EigenSolverFailure
from .fields import ClosedFormField, PacketParams, RayField, RayGrid
from .report import CheckReport, observed_order, table

jax.config.update("jax_enable_x64", True)

# ---------------------------------------------------------------------------
# test fields

TEST_SIGMA = 2.7
BRACKET_GRIDS = (L.LineGrid(p=16), L.LineGrid(p=12))


def test_field(x, theta):
    """exp(-r^2 / 2 sigma^2) (1 + c.x) cos(alpha r) exp(i k.x), theta = (alpha, k, c).

    The radial frequency alpha exceeds |k|, so the phase along every line has a
    fixed sign away from the origin and the Hilbert operators act cleanly.
    """
    al, k, c = theta[0], theta[1:4], theta[4:7]
    r = jnp.sqrt(jnp.sum(x * x))
    return jnp.exp(-r ** 2 / (2 * TEST_SIGMA ** 2)) * (1 + c @ x) * jnp.cos(al * r) * jnp.exp(1j * (k @ x))


def test_thetas(n: int = 8, seed: int = 0) -> np.ndarray:
    """Fixed-seed parameters, shape (n, 7): alpha in [3, 4], |k_i| <= 0.17, |c_i| <= 0.3."""
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(3.0, 4.0, n), rng.uniform(-0.17, 0.17, (n, 3)),
                            rng.uniform(-0.3, 0.3, (n, 3))])


def test_points(n_fields: int, per_field: int = 3, seed: int = 0, spread: float = 1.5) -> np.ndarray:
    rng = np.random.default_rng(seed + 1)
    return rng.normal(size=(n_fields * per_field, 3)) * spread


# ---------------------------------------------------------------------------
# brackets


def _norms(vals: np.ndarray, n_fields: int) -> np.ndarray:
    """Per-field Euclidean norms over the sample points, shape (..., n_fields)."""
    v = vals.reshape(vals.shape[:-1] + (n_fields, -1))
    return np.linalg.norm(v, axis=-1)


def bracket_check(A: O.OperatorExpr, B: O.OperatorExpr, expected: O.OperatorExpr | None,
                  check_id: str | None = None, thetas=None, per_field: int = 3, seed: int = 0,
                  grids=BRACKET_GRIDS, factor: float = 10.0) -> CheckReport:
    """max over test fields of |[A, B] f - E f| / |f| on the line backend.

    The error estimate is the change between the two panel orders plus the leak
    bound plus a rounding floor; the check passes when the finest residual is
    below ``factor`` times that estimate.
    """
    th = test_thetas(seed=seed) if thetas is None else np.asarray(thetas, dtype=float)
    nf = th.shape[0]
    P = test_points(nf, per_field, seed)
    Th = jnp.asarray(np.repeat(th, per_field, axis=0))
    res, diffs, leaks, scales = [], [], [], []
    for g in grids:
        f = L.leaf(test_field, g)
        exprs = [O.apply(A @ B, f), O.apply(B @ A, f), f]
        if expected is not None:
            exprs.append(O.apply(expected, f))
        vals, leak = L.evaluate(exprs, P, Th, with_leak=True)
        d = vals[0] - vals[1] - (vals[3] if expected is not None else 0.0)
        nrm = _norms(vals[2], nf)
        diffs.append(d)
        res.append(float(np.max(_norms(d, nf) / nrm)))
        leaks.append(_norms(leak.sum(axis=0), nf) / nrm)
        scales.append(np.max(_norms(np.abs(vals[:2]).max(axis=0), nf) / nrm))
    nrm = _norms(vals[2], nf)  # last grid's f values agree with the first to rounding
    change = np.max(_norms(diffs[0] - diffs[1], nf) / nrm)
    est = float(change + np.max(leaks[0]) + 1e-13 * scales[0])
    order = observed_order(res[::-1], [1.0 / g.p for g in grids[::-1]])
    label = check_id or f"[{A!r}, {B!r}]"
    return CheckReport(label, res[0], factor * est,
                       {"A": A.prefix(), "B": B.prefix(), "expected": None if expected is None else expected.prefix(),
                        "n_fields": nf, "per_field": per_field, "seed": seed,
                        "grids": [g.to_dict() for g in grids], "residuals": res, "estimate": est},
                       convergence_order=order,
                       notes=f"tolerance = {factor:g} x (panel-order change + leak + rounding floor)")


def lorentz_brackets(m: float = 1.0, c: float = 1.0) -> list:
    """(id, A, B, expected) for the bracket table; expected None means zero."""
    p = [O.p_op(i, m, c) for i in range(3)]
    p0 = O.p0_op(m, c, order="commuted")
    K = [O.boost_op(i) for i in range(3)]
    J = [O.rotation_op(i) for i in range(3)]
    t4 = O.time_position_op()
    return [
        ("J3_p1", J[2], p[0], 1j * p[1]),
        ("J1_p1", J[0], p[0], None),
        ("K3_p0", K[2], p0, 1j * p[2]),
        ("K3_p3", K[2], p[2], 1j * p0),
        ("K1_p2", K[0], p[1], None),
        ("J1_J2", J[0], J[1], 1j * J[2]),
        ("J1_K2", J[0], K[1], 1j * K[2]),
        ("K1_K2", K[0], K[1], -1j * J[2]),
        ("K3_t4", K[2], t4, 1j * O.x(2)),
        ("K3_x3", K[2], O.x(2), 1j * t4),
        ("K1_x3", K[0], O.x(2), None),
        ("K3_a0part", K[2], O.a0_part_op(), 1j * O.a_part_op(2)),
        ("K3_SigmaInvConj", K[2], O.sigma_conj_op(), None),
    ]


def lorentz_suite(m: float = 1.0, c: float = 1.0, only=None, **kw) -> list:
    out = []
    for cid, A, B, E in lorentz_brackets(m, c):
        if only is None or cid in only:
            out.append(bracket_check(A, B, E, check_id=cid, **kw))
    return out


# ---------------------------------------------------------------------------
# eigenvalue residuals


def eigen_residual(op: O.OperatorExpr, f, eigenvalue: complex, points=None, check_id: str = "eigen",
                   tol: float = 1e-8, expect_fail: bool = False, params: dict | None = None) -> CheckReport:
    """|op f - lambda f| / |lambda f| at sample points (closed-form or pointwise backend)."""
    if points is None:
        points = W.default_points(PacketParams(1.0, 1.0, (0.0, 0.0, 0.0)))
    pts = np.asarray(points, dtype=float)
    lam = complex(eigenvalue)
    if isinstance(f, ClosedFormField):
        a = O.apply(op, f).evaluate(pts)
        b = f.evaluate(pts)
        backend = "closed-form"
    else:
        f = pw.FieldFunction.lift(f)
        a, b = pw.evaluate_many([O.apply(op, f), f], pts)
        backend = "pointwise"
    denom = np.linalg.norm(lam * b) if lam != 0 else np.linalg.norm(b)
    res = float(np.linalg.norm(a - lam * b) / denom)
    info = {"op": op.prefix(), "eigenvalue": lam, "backend": backend, **(params or {})}
    note = "relative to |f| since the eigenvalue is zero" if lam == 0 else ""
    return CheckReport(check_id, res, tol, info, notes=note, expect_fail=expect_fail)


def eigen_suite(tol: float = 1e-8) -> list:
    """Closed-form eigen checks, one pointwise check and the off-centre negative test."""
    out = []
    cases = [("v=0.3z", PacketParams(1.0, 1.0, (0.0, 0.0, 0.3)), W.NONREL),
             ("v=0", PacketParams(1.0, 1.0, (0.0, 0.0, 0.0)), W.NONREL),
             ("v=0.6z rel", PacketParams(1.0, 1.0, (0.0, 0.0, 0.6)), W.REL)]
    for label, P, kind in cases:
        psi = W.make_packet(P, 0.0, kind)
        kappa, K, _ = W.packet_constants(P, kind)
        meta = {"params": P.to_dict(), "kind": kind}
        for i in range(3):
            out.append(eigen_residual(O.p_op(i, P.m, P.c), psi, K[i], check_id=f"p{i + 1} {label}", tol=tol,
                                      params=meta))
        for order in ("as_written", "commuted"):
            out.append(eigen_residual(O.p0_op(P.m, P.c, order), psi, kappa, check_id=f"p0[{order}] {label}",
                                      tol=tol, params=meta))
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    psi = W.make_packet(P, 0.0)
    pts = W.default_points(P, n=32, radius=4.0)
    out.append(numeric_eigen_check(P, pts))
    # the packet at t = 2 is centred at 0.6 z; p3 then has no eigenvalue
    shifted = W.make_packet(P, 2.0)
    out.append(eigen_residual(O.p_op(2, P.m, P.c), pw.FieldFunction.lift(shifted), P.p[2],
                              points=pts + np.asarray(shifted.center), check_id="p3 off-centre", tol=tol,
                              expect_fail=True, params={"params": P.to_dict(), "center": shifted.center}))
    del psi
    return out


def numeric_eigen_check(params: PacketParams, points, i: int = 2) -> CheckReport:
    """p_i psi_v = m v_i psi_v with the pointwise backend; tolerance from a quadrature refinement."""
    psi = W.make_packet(params, 0.0)
    op = O.p_op(i, params.m, params.c)
    vals = []
    for s in (1.0, 1.5):
        f = pw.FieldFunction.lift(psi, pw.DEFAULT_QUADRATURE.scaled(s))
        a, b = pw.evaluate_many([O.apply(op, f), f], points)
        vals.append(a)
    lam = params.p[i]
    denom = np.linalg.norm(lam * b)
    res = float(np.linalg.norm(vals[0] - lam * b) / denom)
    est = float(np.linalg.norm(vals[0] - vals[1]) / denom) + 1e-14
    return CheckReport(f"p{i + 1} pointwise", res, max(10 * est, 1e-12),
                       {"params": params.to_dict(), "eigenvalue": lam, "refined_residual":
                        float(np.linalg.norm(vals[1] - lam * b) / denom)},
                       notes="tolerance = 10 x quadrature refinement change")


# ---------------------------------------------------------------------------
# boost action


def _boost_rhs(params: PacketParams, pts: np.ndarray, eps: float) -> np.ndarray:
    """[(1 + i eps p0 z) sin(p0 r)/r + eps p3 cos(p0 r)] exp(i p.r)."""
    p0, p = params.p0, params.p
    r = np.linalg.norm(pts, axis=1)
    z = pts[:, 2]
    return ((1 + 1j * eps * p0 * z) * np.sin(p0 * r) / r + eps * p[2] * np.cos(p0 * r)) * np.exp(1j * pts @ p)


def _substituted(params: PacketParams, pts: np.ndarray, eps: float) -> np.ndarray:
    """psi_v with p3 -> p3 + eps p0 and p0 -> p0 + eps p3."""
    p0, p = params.p0, params.p.copy()
    q0 = p0 + eps * p[2]
    p[2] = p[2] + eps * p0
    r = np.linalg.norm(pts, axis=1)
    return np.sin(q0 * r) / r * np.exp(1j * pts @ p)


def boost_action_check(params: PacketParams, epsilon: float = 1e-2, points=None,
                       tol: float = 1e-12) -> CheckReport:
    """(1 + i eps K3) psi_v (closed form) against the explicit first-order result."""
    pts = W.default_points(params) if points is None else np.asarray(points, dtype=float)
    psi = W.make_packet(params, 0.0)
    k3 = O.apply(O.boost_op(2), psi)
    lhs = psi.evaluate(pts) + 1j * epsilon * k3.evaluate(pts)
    rhs = _boost_rhs(params, pts, epsilon)
    res = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    sub = float(np.linalg.norm(_substituted(params, pts, epsilon) - rhs) / np.linalg.norm(rhs))
    return CheckReport("boost_action", res, tol, {"params": params.to_dict(), "epsilon": epsilon,
                                                  "substitution_mismatch": sub},
                       notes="closed-form K3 against the explicit first-order form")


def boost_richardson_check(params: PacketParams, eps=(1e-2, 5e-3), points=None, tol: float = 0.5) -> CheckReport:
    """The parameter substitution matches the boost to first order: mismatch ratio ~ (eps1/eps2)^2."""
    pts = W.default_points(params) if points is None else np.asarray(points, dtype=float)
    psi = W.make_packet(params, 0.0)
    k3 = O.apply(O.boost_op(2), psi).evaluate(pts)
    base = psi.evaluate(pts)
    mism = []
    for e in eps:
        lhs = base + 1j * e * k3
        mism.append(float(np.linalg.norm(_substituted(params, pts, e) - lhs) / np.linalg.norm(lhs)))
    ratio = mism[0] / mism[1]
    target = (eps[0] / eps[1]) ** 2
    order = math.log(ratio) / math.log(eps[0] / eps[1])
    return CheckReport("boost_richardson", abs(ratio - target), tol,
                       {"params": params.to_dict(), "epsilons": list(eps), "mismatch": mism, "ratio": ratio,
                        "target": target}, convergence_order=order,
                       notes="residual = |mismatch ratio - (eps1/eps2)^2|")


# ---------------------------------------------------------------------------
# matrix checks on one ray and its antipodal partner


def pair_grid(n: int) -> RayGrid:
    """Self-dual midpoint grid with the two directions +x and -x."""
    return RayGrid.spectral(n, n_theta=1, n_phi=2)


def _field_from_w(g: RayGrid, w: np.ndarray) -> RayField:
    """Ray pair field with axis samples w(s) = s G(s) at s = -(n-1/2)h .. (n-1/2)h."""
    n, r = g.n_r, g.radii
    return RayField(g, np.vstack([w[n:] / r, -w[:n][::-1] / r]).astype(complex))


def _w_from_field(f: RayField) -> np.ndarray:
    r = f.grid.radii
    v = f.values
    return np.concatenate([(-r * v[1])[::-1], r * v[0]])


def operator_matrix(op, n: int = 256) -> np.ndarray:
    """Matrix of a RayField map in the variable w = s G, where the weighted product is plain.

    With w the product int r^2 conj(f) g dr summed over the two rays is
    h * sum conj(w_f) w_g, so Hermiticity is that of the returned matrix.
    """
    g = pair_grid(n)
    N = 2 * n
    M = np.zeros((N, N), dtype=complex)
    for j in range(N):
        e = np.zeros(N)
        e[j] = 1.0
        M[:, j] = _w_from_field(op(_field_from_w(g, e)))
    return M


def _hermite_functions(K: int, s: np.ndarray) -> np.ndarray:
    out = np.zeros((K, s.size))
    out[0] = np.pi ** -0.25 * np.exp(-s * s / 2)
    if K > 1:
        out[1] = math.sqrt(2) * s * out[0]
    for k in range(2, K):
        out[k] = math.sqrt(2 / k) * s * out[k - 1] - math.sqrt((k - 1) / k) * out[k - 2]
    return out


def _hermite_taylor(K: int, J: int) -> np.ndarray:
    """Taylor coefficients at 0, orders 0..J-1, of the first K Hermite functions, shape (J, K)."""
    from numpy.polynomial import hermite, polynomial

    gauss = np.array([(-0.5) ** (j // 2) / math.factorial(j // 2) if j % 2 == 0 else 0.0 for j in range(J)])
    out = np.zeros((J, K))
    for k in range(K):
        c = np.zeros(k + 1)
        c[k] = 1.0
        poly = hermite.herm2poly(c)[:J] / math.sqrt(2.0 ** k * math.factorial(k) * math.sqrt(math.pi))
        q = polynomial.polymul(poly, gauss)[:J]
        out[:q.size, k] = q
    return out


@lru_cache(maxsize=8)
def smooth_subspace(n: int = 256, K: int = 64, moments: int = 8, origin_order: int = 8,
                    parity: str | None = None) -> np.ndarray:
    """Orthonormal columns (in h * sum) spanning Hermite functions of w with the first
    ``moments`` moments and the first ``origin_order`` Taylor coefficients at 0 removed.

    Vanishing moments keep Hilbert transforms decaying faster than the box; a
    high-order zero at the origin keeps r f smooth along the axis.
    """
    g = pair_grid(n)
    s = np.concatenate([-g.radii[::-1], g.radii])
    B = _hermite_functions(K, s).T
    if parity == "odd":
        B = B[:, 1::2]
    elif parity == "even":
        B = B[:, 0::2]
    k = B.shape[1]
    C = [np.array([(s ** j) @ B[:, i] for i in range(k)]) for j in range(moments)]
    if origin_order:
        tay = _hermite_taylor(K, origin_order)
        tay = tay[:, 1::2] if parity == "odd" else tay[:, 0::2] if parity == "even" else tay
        C.extend(list(tay))
    C = np.array(C) if C else np.zeros((0, k))
    N = scipy.linalg.null_space(C / np.maximum(np.abs(C).max(axis=1, keepdims=True), 1e-300)) if len(C) else np.eye(k)
    Q, _ = np.linalg.qr(B @ N * math.sqrt(g.h))
    return Q / math.sqrt(g.h)


def galerkin_matrix(op, n: int = 256, **kw) -> np.ndarray:
    """Q^H M Q for a RayField map on the smooth subspace."""
    g = pair_grid(n)
    Q = smooth_subspace(n, **kw)
    cols = [_w_from_field(op(_field_from_w(g, Q[:, j]))) for j in range(Q.shape[1])]
    return g.h * Q.conj().T @ np.array(cols).T


def _l0(f):
    return T.l0_op(f, "viaU")


def _r(f):
    return f.map_radial(lambda r: r)


def _inv_r(f):
    return f.map_radial(lambda r: 1.0 / r)


def _s_kernel(f):
    """-i Sigma H- r with the spectral pair operators."""
    return -1j * T.dilation(T.hilbert_pm_spectral(-1, _r(f)), "spectral")


def _m_plus(f):
    return _inv_r(T.hilbert_pm_spectral(1, _r(f)))


def _m_minus(f):
    return _inv_r(T.hilbert_pm_spectral(-1, _r(f)))


def _a0_r_radial(f: RayField) -> RayField:
    """a0 r f = -1/2 d_r^2 (r^2 f) for fields that are even along the axis."""
    g = f.grid
    r = g.radii
    X = r ** 2 * f.values
    v, w = X[0], X[1]
    d1 = T._pair_derivative_spectral(v, w, r)
    d1m = -T._pair_derivative_spectral(w, v, r)  # X'(-r)
    d2 = T._pair_derivative_spectral(d1, d1m, r)
    d2m = -T._pair_derivative_spectral(d1m, d1, r)  # X''(-r)
    return RayField(g, -0.5 * np.vstack([d2, d2m]))  # d_r^2 on the partner ray is X''(-r)


def _eigh(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError as e:  # pragma: no cover - LAPACK failure
        raise EigenSolverFailure(str(e)) from e


def positivity_spectrum(kind: str = "l0", n: int = 256, tol: float = 1e-8) -> CheckReport:
    """min eigenvalue of the Hermitian part >= -tol |M| (reported as a residual)."""
    if kind == "l0":
        M = operator_matrix(_l0, n)
    elif kind == "r_l0_r":
        M = operator_matrix(lambda f: _r(_l0(_r(f))), n)
    elif kind == "S_kernel":
        M = galerkin_matrix(_s_kernel, n)
    else:
        raise ValueError("kind must be l0, r_l0_r or S_kernel")
    nrm = np.linalg.norm(M, 2)
    Hp = 0.5 * (M + M.conj().T)
    ev = _eigh(Hp)
    anti = np.linalg.norm(M - M.conj().T, 2) / nrm
    lo = float(ev[0] / nrm)
    return CheckReport(f"positivity_{kind}", max(-lo, 0.0), tol,
                       {"kind": kind, "n": n, "min_eig_rel": lo, "max_eig_rel": float(ev[-1] / nrm),
                        "anti_hermitian_rel": anti, "norm": nrm, "size": M.shape[0]},
                       notes="residual = max(0, -min eig(Herm part) / |M|)"
                       + ("; Galerkin on the smooth subspace" if kind == "S_kernel" else ""))


def adjointness_check(kind: str = "H_pm_r", n: int = 256, tol: float | None = None) -> CheckReport:
    """Matrix-level adjoint identities under the weighted product."""
    notes = ""
    if kind == "H_pm_r":
        Mp, Mm = operator_matrix(_m_plus, n), operator_matrix(_m_minus, n)
        res = np.linalg.norm(Mp.conj().T + Mm, 2) / np.linalg.norm(Mp, 2)
        tol = 1e-6 if tol is None else tol
        notes = "|M+^H + M-| / |M+| with M+- = (1/r) H+- r"
    elif kind == "unitary":
        U = 1j * operator_matrix(_m_plus, n)
        res = np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0]), 2)
        tol = 1e-6 if tol is None else tol
        notes = "|U^H U - 1| with U = i (1/r) H+ r"
    elif kind == "S_kernel":
        M = galerkin_matrix(_s_kernel, n)
        res = np.linalg.norm(M - M.conj().T, 2) / np.linalg.norm(M, 2)
        tol = 1e-8 if tol is None else tol
        notes = "Galerkin on the smooth subspace"
    elif kind == "Sigma":
        A = galerkin_matrix(lambda f: T.dilation(f, "spectral"), n)
        B = galerkin_matrix(lambda f: _inv_r(T.dilation(_r(f), "spectral")), n)
        res = np.linalg.norm(A.conj().T - B, 2) / np.linalg.norm(A, 2)
        tol = 1e-8 if tol is None else tol
        notes = "|Sigma^H - (1/r) Sigma r| / |Sigma|, Galerkin on the smooth subspace"
    elif kind == "a_lambda_r":
        M = galerkin_matrix(_a0_r_radial, n, parity="odd")
        res = np.linalg.norm(M - M.conj().T, 2) / np.linalg.norm(M, 2)
        tol = 1e-8 if tol is None else tol
        notes = "a0 r on fields even along the axis (radially symmetric), Galerkin"
    else:
        raise ValueError("kind must be H_pm_r, unitary, S_kernel, Sigma or a_lambda_r")
    return CheckReport(f"adjoint_{kind}", float(res), tol, {"kind": kind, "n": n}, notes=notes)


def l0_square_check(n: int = 256, tol: float = 1e-8, origin_order: int = 16) -> CheckReport:
    """l0 l0 f = -(1/r) d_r^2 r f on the smooth subspace (columnwise).

    The intermediate (1/r) Sigma f inherits a kink of order ``origin_order`` at
    the origin, so this check needs a higher-order zero than the others.
    """
    g = pair_grid(n)
    Q = smooth_subspace(n, origin_order=origin_order)
    worst = 0.0
    for j in range(Q.shape[1]):
        f = _field_from_w(g, Q[:, j])
        a = _l0(_l0(f))
        # -(1/r) d_r^2 (r f) = (1/r) Sigma (1/r) Sigma f
        b = _inv_r(T.dilation(_inv_r(T.dilation(f, "spectral")), "spectral"))
        wa, wb = _w_from_field(a), _w_from_field(b)
        worst = max(worst, float(np.linalg.norm(wa - wb) / np.linalg.norm(wb)))
    return CheckReport("l0_squared", worst, tol, {"n": n, "basis": Q.shape[1], "origin_order": origin_order},
                       notes="worst basis function, smooth subspace")


def positivity_suite(n: int = 256) -> list:
    return [positivity_spectrum("l0", n), positivity_spectrum("r_l0_r", n), positivity_spectrum("S_kernel", n),
            l0_square_check(n)]


def adjoint_suite(n: int = 256) -> list:
    return [adjointness_check(k, n) for k in ("H_pm_r", "unitary", "S_kernel", "Sigma", "a_lambda_r")]


# ---------------------------------------------------------------------------
# identities


IDENTITY_SPEEDS = ((0.0, 0.0, 0.0), (0.0, 0.0, 0.3), tuple(0.5 * np.array([1.0, 0.0, 1.0]) / math.sqrt(2)))


def identities_suite(tol: float = 1e-10, t: float = 0.0) -> list:
    """Packet identities over the velocity/mass/c grid."""
    out = []
    for v in IDENTITY_SPEEDS:
        for m in (0.5, 1.0):
            for c in (0.0, 1.0):
                P = PacketParams(m, c, v)
                out.append(W.schrodinger_residual(P, t=t, tol=tol))
                out.append(W.transport_residual(P, t=t, tol=tol))
                out.append(W.gauge_laplacian_residual(P, t=t, tol=tol))
                if c > 0 and P.speed < c:
                    out.append(W.gauge_laplacian_residual(P, t=t, kind=W.REL, tol=tol))
                    out.append(W.transport_residual(P, t=t, kind=W.REL, tol=tol))
                    out.append(W.modified_evolution_residual(P, t=t, tol=tol))
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    out.append(W.modified_evolution_residual(P, t=t, tol=tol, include_gamma=False))
    return out


# ---------------------------------------------------------------------------
# transform oracles


def _sinusoid(alpha: float, kind: str, kvec=(0.0, 0.0, 0.0)) -> ClosedFormField:
    """cos(alpha r) or sin(alpha r), times exp(i k.r)."""
    a = ClosedFormField.radial_wave(alpha, 0, 0.5, kvec)
    b = ClosedFormField.radial_wave(-alpha, 0, 0.5, kvec)
    return a + b if kind == "cos" else (a - b) * -1j


def _closed_oracle(check_id: str, got: ClosedFormField, expected: ClosedFormField, pts, tol: float) -> CheckReport:
    a, b = got.evaluate(pts), expected.evaluate(pts)
    res = float(np.linalg.norm(a - b) / np.linalg.norm(b))
    return CheckReport(check_id, res, tol, {"backend": "closed-form", "npoints": len(pts)})


def closed_transform_checks(tol: float = 1e-12) -> list:
    """Exact sinusoid rules, their compositions and the packet transforms."""
    pts = W.default_points(PacketParams(1.0, 1.0, (0.0, 0.0, 0.0)), n=64)
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    k = tuple(P.p)
    cos2, sin2 = _sinusoid(2.0, "cos"), _sinusoid(2.0, "sin")
    cos1, sin1 = _sinusoid(1.0, "cos"), _sinusoid(1.0, "sin")
    cp, sp = _sinusoid(P.p0, "cos", k), _sinusoid(P.p0, "sin", k)
    return [
        _closed_oracle("Ho_sin", T.hilbert_odd(sin2), cos2, pts, tol),
        _closed_oracle("He_cos", T.hilbert_even(cos2), -sin2, pts, tol),
        _closed_oracle("He_Ho_sin", T.hilbert_even(T.hilbert_odd(sin1)), -sin1, pts, tol),
        _closed_oracle("Ho_He_cos", T.hilbert_odd(T.hilbert_even(cos1)), -cos1, pts, tol),
        _closed_oracle("Hplus_packet", T.hilbert_pm(1, cp), -sp, pts, tol),
        _closed_oracle("Hminus_packet", T.hilbert_pm(-1, sp), cp, pts, tol),
        _closed_oracle("Hplus_Hminus", T.hilbert_pm(1, T.hilbert_pm(-1, sp)), -sp, pts, tol),
        _closed_oracle("Hminus_Hplus", T.hilbert_pm(-1, T.hilbert_pm(1, cp)), -cp, pts, tol),
    ]


def _ray_data(g: RayGrid, fn, kvec=(0.0, 0.0, 0.0)) -> RayField:
    r = g.radii[None, :]
    return RayField(g, fn(r) * np.exp(1j * (g.directions @ np.asarray(kvec, dtype=float))[:, None] * r))


def _refined_check(check_id: str, op, expected, levels: int = 4, core: float = 20.0) -> CheckReport:
    """Max error in r < core against the oracle on halving (h, taper) levels.

    Passes when the finest error is inside the transform's own estimate; the
    observed order is the slope of log error against log h.
    """
    errs, hs, ests = [], [], []
    for l in range(levels):
        eps, h = 0.08 / 2 ** l, 0.1 / 2 ** l
        R = 6 / eps
        g = RayGrid(n_theta=2, n_phi=2, n_r=int(round(R / h)), R=R, taper=eps)
        est = op(g)
        sel = g.radii < core
        errs.append(float(np.max(np.abs(est.field.values - expected(g))[:, sel])))
        ests.append(float(np.max(est.error[:, sel])))
        hs.append(h)
    return CheckReport(check_id, errs[-1], ests[-1], {"backend": "numeric", "h": hs, "errors": errs,
                                                      "estimates": ests, "core_radius": core},
                       convergence_order=observed_order(errs, hs),
                       notes="tolerance is the transform's own error estimate")


def numeric_transform_checks(levels: int = 4) -> list:
    P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
    k, p0 = P.p, P.p0
    out = [
        _refined_check("Ho_sin_numeric", lambda g: T.hilbert_odd(_ray_data(g, lambda r: np.sin(2 * r)), return_error=True),
                       lambda g: np.cos(2 * g.radii)[None, :], levels),
        _refined_check("He_cos_numeric", lambda g: T.hilbert_even(_ray_data(g, lambda r: np.cos(2 * r)), return_error=True),
                       lambda g: -np.sin(2 * g.radii)[None, :], levels),
        _refined_check("Hplus_packet_numeric",
                       lambda g: T.hilbert_pm(1, _ray_data(g, lambda r: np.cos(p0 * r), k), return_error=True),
                       lambda g: -_ray_data(g, lambda r: np.sin(p0 * r), k).values, levels),
        _refined_check("Hminus_packet_numeric",
                       lambda g: T.hilbert_pm(-1, _ray_data(g, lambda r: np.sin(p0 * r), k), return_error=True),
                       lambda g: _ray_data(g, lambda r: np.cos(p0 * r), k).values, levels),
    ]
    errs, hs, ests = [], [], []
    for n in (256, 1024, 4096):
        g = RayGrid.spectral(n, 2, 2)
        est = T.fourier_cos(_ray_data(g, lambda r: np.exp(-r)), return_error=True)
        errs.append(float(np.max(np.abs(est.field.values - math.sqrt(2 / math.pi) / (1 + g.radii ** 2)))))
        ests.append(est.max_error)
        hs.append(g.h)
    out.append(CheckReport("Fc_exp_numeric", errs[-1], ests[-1], {"backend": "numeric", "h": hs, "errors": errs,
                                                                 "estimates": ests},
                           convergence_order=observed_order(errs, hs),
                           notes="tolerance is the transform's own error estimate"))
    return out


def transform_suite() -> list:
    return closed_transform_checks() + numeric_transform_checks()


SUITES = ("identities", "transforms", "eigen", "lorentz", "positivity", "adjoint", "boost")


def run_suite(name: str, m: float = 1.0, c: float = 1.0, seed: int = 0, n: int = 256) -> list:
    """Run one named suite (or "all"). ``m``, ``c`` and ``seed`` feed the bracket suite."""
    if name == "identities":
        return identities_suite()
    if name == "transforms":
        return transform_suite()
    if name == "eigen":
        return eigen_suite()
    if name == "lorentz":
        return lorentz_suite(m, c, seed=seed)
    if name == "positivity":
        return positivity_suite(n)
    if name == "adjoint":
        return adjoint_suite(n)
    if name == "boost":
        P = PacketParams(m, c, (0.0, 0.0, 0.3))
        return [boost_action_check(P, 0.0), boost_action_check(P, 1e-2), boost_richardson_check(P)]
    if name == "all":
        return [r for s in SUITES for r in run_suite(s, m, c, seed, n)]
    raise ValueError(f"unknown suite {name!r}")


__all__ = [
    "CheckReport", "table", "TEST_SIGMA", "BRACKET_GRIDS", "test_field", "test_thetas", "test_points", "bracket_check",
    "lorentz_brackets", "lorentz_suite", "eigen_residual", "eigen_suite", "numeric_eigen_check",
    "boost_action_check", "boost_richardson_check", "pair_grid", "operator_matrix", "smooth_subspace",
    "galerkin_matrix", "positivity_spectrum", "adjointness_check", "l0_square_check", "positivity_suite",
    "adjoint_suite", "identities_suite", "closed_transform_checks", "numeric_transform_checks", "transform_suite",
    "SUITES", "run_suite",
]
