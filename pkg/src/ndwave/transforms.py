"""Per-ray radial transforms: parity, Fourier sine/cosine, Hilbert pair, dilation.

Every function accepts a ``ClosedFormField`` (exact term algebra), a
``RayField`` (samples on a midpoint radial grid) or a ``FieldFunction``
(pointwise ray quadrature, see :mod:`ndwave.pointwise`).

Axis conventions. Along a ray d the function f(s d) for real s is the "axis
function" G(s). With H the standard Hilbert transform (symbol -i sgn(xi)):

    He f = -H[G(|s|)],   Ho f = -H[sgn(s) G(|s|)],
    H+ f = -sgn(s) H[G],  H- f = -H[sgn(s) G].

Numeric results on RayFields come with an error estimate: the difference of two
quadrature refinements plus the window (taper) sensitivity.
"""
from __future__ import annotations

import enum
import math
from typing import NamedTuple

import numpy as np
import scipy.fft
import scipy.signal

from .errors import (
    GridMismatch,
    NonIntegrableOrigin,
    NotClosedForm,
    QuadratureDivergence,
    SignIndefiniteTerm,
)
from .fields import ClosedFormField, ClosedFormTerm, RayField, RayGrid, _accumulate, reduce_monomial


class TransformKind(enum.Enum):
    Fc = "Fc"
    Fs = "Fs"
    He = "He"
    Ho = "Ho"
    Hplus = "Hplus"
    Hminus = "Hminus"
    Parity = "Parity"
    Sigma = "Sigma"
    SigmaInv = "SigmaInv"
    U = "U"
    Ustar = "Ustar"
    L0 = "L0"


class Estimate(NamedTuple):
    """A numeric transform result together with a pointwise error bound."""

    field: RayField
    error: np.ndarray

    @property
    def max_error(self) -> float:
        return float(np.max(self.error))


def _is_pointwise(f) -> bool:
    from .pointwise import FieldFunction

    return isinstance(f, FieldFunction)


# ---------------------------------------------------------------------------
# parity


def parity(f):
    """f(-r)."""
    if isinstance(f, ClosedFormField):
        f.require_origin("parity")
        terms = [ClosedFormTerm(t.coeff * (-1) ** t.degree, t.npow, t.dirmono, t.alpha, tuple(-k for k in t.kvec))
                 for t in f.terms]
        return ClosedFormField(terms, center=f.center, max_degree=f.max_degree)
    if isinstance(f, RayField):
        return RayField(f.grid, f.values[f.grid.antipode])
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.parity(f)
    raise TypeError(f"unsupported field type {type(f).__name__}")


# ---------------------------------------------------------------------------
# closed-form Hilbert rules


def _hilbert_closed(f: ClosedFormField, kind: str) -> ClosedFormField:
    """Exact action on sign-definite terms.

    Each admissible term is multiplied by i*sgn(alpha). Admissibility means the
    relevant axis function carries no sgn(s) factor; otherwise the result is not
    elementary and NotClosedForm is raised.
    """
    f.require_origin("Hilbert transform")
    if f.is_zero():
        return f
    for t in f.terms:
        if not t.sign_definite():
            raise SignIndefiniteTerm(
                f"term with alpha={t.alpha}, |k|={np.linalg.norm(t.kvec):.6g} is not sign-definite")
    coeffs = {t.key: t.coeff for t in f.terms}
    tol = 1e-11 * f.scale()
    seen = set()
    for t in f.terms:
        if t.key in seen:
            continue
        n, mono, al, k = t.key
        if kind in ("plus", "minus"):
            partner = (n, mono, -al, k)
            sigma = (n + sum(mono)) % 2
        else:
            partner = (n, mono, -al, tuple(0.0 if x == 0 else -x for x in k))
            sigma = n % 2 if kind == "even" else (n + 1) % 2
        seen.add(t.key)
        seen.add(partner)
        c1 = coeffs.get(t.key, 0j)
        c2 = coeffs.get(partner, 0j)
        # the sgn(s) carrying part: (c1 - c2) for sigma = 0, (c1 + c2) for sigma = 1
        sgn_part = c1 - c2 if sigma == 0 else c1 + c2
        smooth_part = c1 + c2 if sigma == 0 else c1 - c2
        bad = sgn_part if kind in ("plus", "even", "odd") else smooth_part
        if abs(bad) > tol:
            raise NotClosedForm(
                f"H_{kind} of the term group (n={n}, mono={mono}, |alpha|={abs(al)}) is not elementary")
    out = [t._replace(coeff=t.coeff * 1j * math.copysign(1.0, t.alpha)) for t in f.terms]
    return ClosedFormField(out, center=f.center, max_degree=f.max_degree)


# ---------------------------------------------------------------------------
# numeric per-ray machinery on the midpoint grid


def _require_midpoint(grid: RayGrid):
    if grid.radial != "midpoint":
        raise GridMismatch("numeric per-ray transforms need a midpoint radial grid")


def _require_self_dual(grid: RayGrid):
    _require_midpoint(grid)
    if not grid.is_self_dual:
        raise GridMismatch("spectral transforms need the self-dual grid h = sqrt(pi / n)")


def _axis(values: np.ndarray, partner: np.ndarray) -> np.ndarray:
    """Join ray and partner samples into axis samples at s = (j + 1/2) h, j = -n..n-1."""
    return np.concatenate([partner[..., ::-1], values], axis=-1)


def _hilbert_kernel(n2: int, h: float, step: int, eps: float) -> np.ndarray:
    """Discrete kernel of the odd-offset PV rule for H[G](s_k), offsets m = -(n2-1)..n2-1."""
    m = np.arange(-(n2 - 1), n2)
    ker = np.zeros(m.shape)
    sel = (np.abs(m) % (2 * step)) == step
    mm = m[sel]
    ker[sel] = 2.0 * step / (np.pi * mm)
    if eps > 0:
        ker *= np.exp(-(eps * m * h) ** 2)
    return ker


def _hilbert_axis(G: np.ndarray, h: float, eps: float, step: int = 1) -> np.ndarray:
    """Standard Hilbert transform of axis samples (last axis) by the odd-offset rule."""
    n2 = G.shape[-1]
    ker = _hilbert_kernel(n2, h, step, eps)
    full = scipy.signal.fftconvolve(G, ker[(None,) * (G.ndim - 1)], mode="full", axes=-1)
    return full[..., n2 - 1: 2 * n2 - 1]


def _tail_bound(G: np.ndarray, h: float, eps: float, s: np.ndarray) -> np.ndarray:
    """Bound on the part of the PV integral lost beyond the end of the axis grid."""
    n2 = G.shape[-1]
    edge = np.max(np.abs(G[..., : max(n2 // 64, 2)]), axis=-1, keepdims=True)
    edge = np.maximum(edge, np.max(np.abs(G[..., -max(n2 // 64, 2):]), axis=-1, keepdims=True))
    R = (n2 // 2) * h
    dist = np.maximum(R - np.abs(s), h)
    if eps > 0:
        win = np.exp(-(eps * dist) ** 2) / np.maximum((eps * dist) ** 2, 1e-300)
        return edge * np.minimum(win, np.log(2 * R / h)) / np.pi
    return edge * np.log(2 * R / h) / np.pi * np.ones_like(s)


def _axis_hilbert_estimate(G: np.ndarray, h: float, eps: float):
    """H[G] with an error estimate; Richardson over two window widths when eps > 0."""
    n2 = G.shape[-1]
    s = (np.arange(n2) - n2 // 2 + 0.5) * h
    if eps > 0:
        e1, e2 = eps, eps / math.sqrt(2.0)
        q1 = _hilbert_axis(G, h, e1)
        q2 = _hilbert_axis(G, h, e2)
        val = (e1 ** 2 * q2 - e2 ** 2 * q1) / (e1 ** 2 - e2 ** 2)
        coarse = _hilbert_axis(G, h, e1, step=2)
        err = np.abs(q1 - q2) + np.abs(coarse - q1) + _tail_bound(G, h, e2, s)
    else:
        val = _hilbert_axis(G, h, 0.0)
        coarse = _hilbert_axis(G, h, 0.0, step=2)
        err = np.abs(coarse - val) + _tail_bound(G, h, 0.0, s)
    return val, err


def _numeric_hilbert(f: RayField, kind: str, eps: float | None) -> Estimate:
    g = f.grid
    _require_midpoint(g)
    eps = g.taper if eps is None else eps
    v = f.values
    w = v[g.antipode]
    n = g.n_r
    if kind == "even":
        G = _axis(v, v)
        sgn = None
    elif kind == "odd":
        G = _axis(v, -v)
        sgn = None
    elif kind == "plus":
        G = _axis(v, w)
        sgn = "out"
    elif kind == "minus":
        G = _axis(v, -w)  # sgn(s) G
        sgn = None
    else:  # pragma: no cover
        raise ValueError(kind)
    val, err = _axis_hilbert_estimate(G, g.h, eps)
    if not np.all(np.isfinite(val)):
        raise QuadratureDivergence("non-finite Hilbert quadrature")
    # -H evaluated on the positive half-axis, i.e. on the ray itself
    out = -val[..., n:]
    err = err[..., n:]
    del sgn  # for H+ the sgn(s) factor is +1 on the ray
    return Estimate(RayField(g, out), err)


def hilbert_even(f, eps: float | None = None, return_error: bool = False):
    if isinstance(f, ClosedFormField):
        return _hilbert_closed(f, "even")
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.hilbert(f, "even")
    est = _numeric_hilbert(f, "even", eps)
    return est if return_error else est.field


def hilbert_odd(f, eps: float | None = None, return_error: bool = False):
    if isinstance(f, ClosedFormField):
        return _hilbert_closed(f, "odd")
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.hilbert(f, "odd")
    est = _numeric_hilbert(f, "odd", eps)
    return est if return_error else est.field


def hilbert_pm(sign: int, f, eps: float | None = None, return_error: bool = False):
    """H+ (sign = +1) or H- (sign = -1)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    kind = "plus" if sign > 0 else "minus"
    if isinstance(f, ClosedFormField):
        return _hilbert_closed(f, kind)
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.hilbert(f, kind)
    est = _numeric_hilbert(f, kind, eps)
    return est if return_error else est.field


def hilbert_pm_via_parity(sign: int, f: RayField, eps: float | None = None) -> RayField:
    """H+- assembled literally from He, Ho and P."""
    he, ho = hilbert_even(f, eps), hilbert_odd(f, eps)
    hep, hop = hilbert_even(parity(f), eps), hilbert_odd(parity(f), eps)
    return 0.5 * ((he + ho) + sign * (hep - hop))


# ---------------------------------------------------------------------------
# Fourier sine / cosine (spectral, self-dual grid)


def _dct4(x):
    return scipy.fft.dct(x, type=4, norm="ortho", axis=-1)


def _dst4(x):
    return scipy.fft.dst(x, type=4, norm="ortho", axis=-1)


def fourier_cos(f: RayField, return_error: bool = False):
    """sqrt(2/pi) int_0^inf f(t) cos(r t) dt by the midpoint rule (a DCT-IV)."""
    if not isinstance(f, RayField):
        raise TypeError("the Fourier transforms are provided for sampled ray data only")
    _require_self_dual(f.grid)
    out = RayField(f.grid, _dct4(f.values))
    if not return_error:
        return out
    return Estimate(out, _fourier_error(f, _dct4))


def fourier_sin(f: RayField, return_error: bool = False):
    if not isinstance(f, RayField):
        raise TypeError("the Fourier transforms are provided for sampled ray data only")
    _require_self_dual(f.grid)
    out = RayField(f.grid, _dst4(f.values))
    if not return_error:
        return out
    return Estimate(out, _fourier_error(f, _dst4))


def _origin_derivatives(f: RayField, npts: int = 10, deg: int = 6) -> np.ndarray:
    """Derivatives 0..3 of f at r = 0 from a polynomial fit to the innermost nodes, shape (4, ndir)."""
    t = f.grid.radii[:npts]
    V = np.vander(t, deg + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(V, f.values[:, :npts].T, rcond=None)
    return np.stack([coef[0], coef[1], 2 * coef[2], 6 * coef[3]])


def _fourier_error(f: RayField, op) -> np.ndarray:
    """Two leading Euler-Maclaurin endpoint terms of the midpoint rule at t = 0 (times 2),
    plus the truncation at R."""
    g = f.grid
    n = g.n_r
    h = g.h
    r = g.radii[None, :]
    f0, f1, f2, f3 = (d[:, None] for d in _origin_derivatives(f))
    if op is _dct4:
        d1, d3 = f1, f3 - 3 * r ** 2 * f1
    else:
        d1, d3 = r * f0, 3 * r * f2 - r ** 3 * f0
    em = math.sqrt(2 / math.pi) * (np.abs(d1) * h ** 2 / 24 + np.abs(d3) * 7 * h ** 4 / 5760)
    tail = np.max(np.abs(f.values[:, -max(n // 64, 2):]), axis=1, keepdims=True)
    return 2 * em + tail


# ---------------------------------------------------------------------------
# spectral Hilbert pair (exact algebra on the self-dual grid)


def hilbert_even_spectral(f: RayField) -> RayField:
    """He = -Fs Fc."""
    return -fourier_sin(fourier_cos(f))


def hilbert_odd_spectral(f: RayField) -> RayField:
    """Ho = Fc Fs."""
    return fourier_cos(fourier_sin(f))


def hilbert_pm_spectral(sign: int, f: RayField) -> RayField:
    pf = parity(f)
    return 0.5 * ((hilbert_even_spectral(f) + hilbert_odd_spectral(f))
                  + sign * (hilbert_even_spectral(pf) - hilbert_odd_spectral(pf)))


# ---------------------------------------------------------------------------
# radial derivative, dilation and its inverse


def _fd_weights(order: int, offset: int) -> np.ndarray:
    """First-derivative weights on stencil points (-offset .. order-offset), unit spacing."""
    pts = np.arange(order + 1) - offset
    V = np.vander(pts, increasing=True).T
    rhs = np.zeros(order + 1)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def _axis_derivative_fd(G: np.ndarray, h: float, order: int = 8) -> np.ndarray:
    n2 = G.shape[-1]
    half = order // 2
    out = np.zeros_like(G)
    wc = _fd_weights(order, half)
    for j, w in enumerate(wc):
        sl = slice(j, n2 - order + j)
        out[..., half:n2 - half] += w * G[..., sl]
    for k in list(range(half)) + list(range(n2 - half, n2)):
        start = min(max(k - half, 0), n2 - order - 1)
        w = _fd_weights(order, k - start)
        out[..., k] = G[..., start:start + order + 1] @ w
    return out / h


def _axis_derivative_spectral(f: RayField) -> np.ndarray:
    return _pair_derivative_spectral(f.values, f.values[f.grid.antipode], f.grid.radii)


def _pair_derivative_spectral(v: np.ndarray, w: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Derivative at s = r of the axis function X with X(r) = v, X(-r) = w."""
    E = 0.5 * (v + w)
    O = 0.5 * (v - w)
    dE = -_dst4(r * _dct4(E))
    dO = _dct4(r * _dst4(O))
    return dE + dO


def radial_derivative(f: RayField, method: str = "fd", order: int = 8) -> RayField:
    """d/dr along each ray, using the antipodal partner to continue through the origin."""
    g = f.grid
    _require_midpoint(g)
    if method == "spectral":
        _require_self_dual(g)
        return RayField(g, _axis_derivative_spectral(f))
    G = _axis(f.values, f.values[g.antipode])
    dG = _axis_derivative_fd(G, g.h, order)
    return RayField(g, dG[..., g.n_r:])


def dilation(f, method: str = "fd"):
    """Sigma f = -i d_r (r f)."""
    if isinstance(f, ClosedFormField):
        f.require_origin("dilation")
        return -1j * (f + f.euler())
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.dilation(f)
    # differentiate w(s) = s G(s), which is smooth through the origin; r f = |s| G has a kink
    g = f.grid
    _require_midpoint(g)
    r = g.radii
    v = r * f.values
    w = -r * f.values[g.antipode]
    if method == "spectral":
        _require_self_dual(g)
        return RayField(g, -1j * _pair_derivative_spectral(v, w, r))
    if method != "fd":
        raise ValueError("method must be 'fd' or 'spectral'")
    dW = _axis_derivative_fd(_axis(v, w), g.h)
    return RayField(g, -1j * dW[..., g.n_r:])


def _cell_weights(order: int = 8):
    """Weights integrating the degree-(order-1) interpolant over one unit cell [0, 1]
    for stencil offsets -(order/2 - 1) .. order/2 (relative to the cell's left node)."""
    pts = np.arange(order) - (order // 2 - 1)
    V = np.vander(pts, increasing=True).T
    mom = np.array([1.0 / (p + 1) for p in range(order)])
    return np.linalg.solve(V, mom), pts


def _cumulative_axis(G: np.ndarray, h: float, n: int, order: int = 8) -> np.ndarray:
    """int_0^{s_k} G ds for the positive axis nodes s_k = (k + 1/2) h, k = 0..n-1."""
    n2 = G.shape[-1]
    wcell, pts = _cell_weights(order)
    # first half cell [0, h/2]: interpolate on nodes symmetric about 0
    sp = (np.arange(order) - order // 2 + 0.5)
    V = np.vander(sp, increasing=True).T
    mom = np.array([0.5 ** (p + 1) / (p + 1) for p in range(order)])
    w0 = np.linalg.solve(V, mom)
    first = G[..., n - order // 2: n + order // 2] @ w0 * h
    cells = np.zeros(G.shape[:-1] + (n - 1,), dtype=G.dtype)
    for j in range(n - 1):
        left = n + j
        idx = left + pts
        if idx[-1] >= n2:
            shift = idx[-1] - (n2 - 1)
            idx = idx - shift
            p2 = pts - shift
            V2 = np.vander(p2, increasing=True).T
            w = np.linalg.solve(V2, np.array([1.0 / (p + 1) for p in range(order)]))
        else:
            w = wcell
        cells[..., j] = G[..., idx] @ w * h
    out = np.empty(G.shape[:-1] + (n,), dtype=complex)
    out[..., 0] = first
    out[..., 1:] = first[..., None] + np.cumsum(cells, axis=-1)
    return out


def dilation_inv(f, return_error: bool = False):
    """Sigma^-1 f = (i / r) int_0^r f(t) dt."""
    if isinstance(f, ClosedFormField):
        return _dilation_inv_closed(f)
    if _is_pointwise(f):
        from . import pointwise

        return pointwise.dilation_inv(f)
    g = f.grid
    _require_midpoint(g)
    G = _axis(f.values, f.values[g.antipode])
    cum = _cumulative_axis(G, g.h, g.n_r, 8)
    out = RayField(g, 1j * cum / g.radii[None, :])
    if not return_error:
        return out
    cum4 = _cumulative_axis(G, g.h, g.n_r, 4)
    return Estimate(out, np.abs(cum - cum4) / g.radii[None, :])


def _dilation_inv_closed(f: ClosedFormField) -> ClosedFormField:
    f.require_origin("inverse dilation")
    groups: dict = {}
    for t in f.terms:
        groups.setdefault((t.alpha, t.kvec), []).append(t)
    acc: dict = {}
    for (al, k), terms in groups.items():
        G = _antiderivative(terms, al, k)
        for (n, mono), c in G.items():
            _accumulate(acc, 1j * c, n - 1, mono, al, k)
            if n == 0:  # subtract the value at r = 0
                _accumulate(acc, -1j * c, -1, mono, 0.0, (0.0, 0.0, 0.0))
    return ClosedFormField._from_acc(acc, f)


def _canonical_monos(maxdeg: int) -> list:
    out = []
    for d in range(maxdeg + 1):
        for c in (0, 1):
            for a in range(d - c + 1):
                b = d - c - a
                if b >= 0:
                    out.append((a, b, c))
    return out


def _antiderivative(terms, al: float, k: tuple) -> dict:
    """Coefficients g[(n, mono)] with d_r sum g r^n mono e^{i(al r + k.x)} = given terms."""
    target = {(t.npow, t.dirmono): t.coeff for t in terms}
    if al == 0.0 and not any(k):
        out = {}
        for (n, mono), c in target.items():
            if n <= -1:
                raise NonIntegrableOrigin("radial integral diverges at the origin")
            out[(n + 1, mono)] = c / (n + 1)
        return out
    nmin = min(n for n, _ in target)
    nmax = max(n for n, _ in target)
    if nmin < 0:
        raise NotClosedForm("inverse dilation of a negative power times an oscillation is not elementary")
    maxdeg = max(sum(m) for _, m in target)
    basis = [(n, m) for n in range(0, nmax + 2) for m in _canonical_monos(maxdeg)]
    rows: dict = {}

    def row(key):
        if key not in rows:
            rows[key] = len(rows)
        return rows[key]

    for key in target:
        row(key)
    cols = []
    for n, mono in basis:
        col: dict = {}
        if n:
            col[(n - 1, mono)] = col.get((n - 1, mono), 0) + n
        col[(n, mono)] = col.get((n, mono), 0) + 1j * al
        for i in range(3):
            if k[i]:
                up = tuple(mono[j] + (1 if j == i else 0) for j in range(3))
                for m2, fac in reduce_monomial(up):
                    col[(n, m2)] = col.get((n, m2), 0) + 1j * k[i] * fac
        cols.append(col)
        for key in col:
            row(key)
    A = np.zeros((len(rows), len(basis)), dtype=complex)
    for j, col in enumerate(cols):
        for key, v in col.items():
            A[rows[key], j] = v
    b = np.zeros(len(rows), dtype=complex)
    for key, c in target.items():
        b[rows[key]] = c
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = np.linalg.norm(A @ sol - b)
    if resid > 1e-9 * np.linalg.norm(b):
        raise NotClosedForm("no elementary radial antiderivative inside the term algebra")
    big = np.max(np.abs(sol))
    return {basis[j]: sol[j] for j in range(len(basis)) if abs(sol[j]) > 1e-13 * big}


# ---------------------------------------------------------------------------
# U, U* and l0


def u_op(f: RayField) -> RayField:
    """U f = (1/2r)[(Fc - iFs) + (Fc + iFs) P] r f."""
    if not isinstance(f, RayField):
        raise TypeError("U is provided for sampled ray data only")
    rf = f.map_radial(lambda r: r)
    prf = parity(rf)
    out = (fourier_cos(rf) - 1j * fourier_sin(rf)) + (fourier_cos(prf) + 1j * fourier_sin(prf))
    return out.map_radial(lambda r: 0.5 / r)


def u_star(f: RayField) -> RayField:
    """Complex conjugate operator of U (its inverse)."""
    if not isinstance(f, RayField):
        raise TypeError("U* is provided for sampled ray data only")
    rf = f.map_radial(lambda r: r)
    prf = parity(rf)
    out = (fourier_cos(rf) + 1j * fourier_sin(rf)) + (fourier_cos(prf) - 1j * fourier_sin(prf))
    return out.map_radial(lambda r: 0.5 / r)


def l0_op(f: RayField, form: str = "viaU", eps: float | None = None) -> RayField:
    """l0 = U* r U, or its Hilbert forms -(1/r) d_r H+ r and -(1/r) H- d_r r."""
    if form == "viaU":
        return u_star(u_op(f).map_radial(lambda r: r))
    rf = f.map_radial(lambda r: r)
    if form == "viaHplus":
        out = radial_derivative(hilbert_pm(+1, rf, eps))
    elif form == "viaHminus":
        out = hilbert_pm(-1, radial_derivative(rf), eps)
    else:
        raise ValueError("form must be viaU, viaHplus or viaHminus")
    return out.map_radial(lambda r: -1.0 / r)


__all__ = [
    "TransformKind", "Estimate", "parity", "fourier_cos", "fourier_sin", "hilbert_even", "hilbert_odd",
    "hilbert_pm", "hilbert_pm_via_parity", "hilbert_even_spectral", "hilbert_odd_spectral",
    "hilbert_pm_spectral", "radial_derivative", "dilation", "dilation_inv", "u_op", "u_star", "l0_op",
]
