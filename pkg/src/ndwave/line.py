"""Line backend: fields restricted to the line through the origin.

Every radial operator in the library acts along rays, and the ray through x
together with its antipode is the line {s d : s real} with d = x/|x|. A
``LineField`` holds one such line: piecewise Chebyshev samples on [-S, S] plus
power tails sum_k c_k s^-k beyond +-S. On this representation

* the standard Hilbert transform is one dense matrix (built once per grid),
* Sigma^-1 is a cumulative spectral integral,
* d/ds is a block-diagonal differentiation matrix,

and derivatives transverse to the line come from forward-mode autodiff with
respect to the direction d. Composite operators such as K p0 therefore cost a
handful of N x N mat-vecs per evaluation point instead of nested quadratures.

Expressions are built from ``LineExpr`` nodes and evaluated with
:func:`evaluate`. Pure 3-D callables enter through :func:`leaf`; local operators
applied to a leaf stay leaves, so their derivatives are exact.
"""
from __future__ import annotations

import contextvars
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import legendre

import jax
import jax.numpy as jnp

jax.config.update("jax_enable_x64", True)


# ---------------------------------------------------------------------------
# grid and precomputed matrices (numpy)


def _cheb_nodes(p: int) -> np.ndarray:
    k = np.arange(p)
    return np.cos(np.pi * (2 * k + 1) / (2 * p))[::-1].copy()


def _bary_weights(p: int) -> np.ndarray:
    k = np.arange(p)
    return ((-1.0) ** k * np.sin(np.pi * (2 * k + 1) / (2 * p)))[::-1].copy()


def _lagrange(t, xc, wb) -> np.ndarray:
    """Values of the Lagrange basis on nodes xc at points t, shape (len(t), p)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = t[:, None] - xc[None, :]
    hit = np.abs(d) < 1e-15
    d = np.where(hit, 1.0, d)
    M = wb[None, :] / d
    M /= M.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    M[rows] = hit[rows].astype(float)
    return M


def _tail_integrals(y: np.ndarray, S: float, K: int) -> np.ndarray:
    """I_k(y) = int_S^inf u^-k / (y - u) du for |y| < S, k = 1..K; shape (len(y), K)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros((y.size, K))
    small = np.abs(y) < 0.5 * S
    ys = y[small]
    # power series in y/S (ratio <= 1/2)
    acc = np.zeros((ys.size, K))
    for j in range(80):
        term = ys ** j
        for k in range(1, K + 1):
            acc[:, k - 1] -= term * S ** (-k - j) / (k + j)
    out[small] = acc
    yb = y[~small]
    Ik = np.log1p(-yb / S) / yb
    out[~small, 0] = Ik
    for k in range(2, K + 1):
        Ik = (S ** (1 - k) / (k - 1) + Ik) / yb
        out[~small, k - 1] = Ik
    return out


@dataclass(frozen=True)
class LineGrid:
    """Panel layout on [-S, S]: geometric panels at the origin, unit panels out to ``inner``,
    wider ones out to ``outer``."""

    p: int = 16
    inner: float = 24.0
    outer: float = 50.0
    h_inner: float = 1.0
    h_outer: float = 2.0
    ntail: int = 6
    grade: int = 12  # geometric panels [2^-j-1, 2^-j] resolving singular behaviour at s = 0

    def to_dict(self) -> dict:
        return {"p": self.p, "inner": self.inner, "outer": self.outer, "h_inner": self.h_inner,
                "h_outer": self.h_outer, "ntail": self.ntail, "grade": self.grade}

    @property
    def S(self) -> float:
        return float(self.edges[-1])

    @property
    def edges(self) -> np.ndarray:
        return _grid_arrays(self)["edges"]

    @property
    def nodes(self) -> np.ndarray:
        return _grid_arrays(self)["s"]

    @property
    def size(self) -> int:
        return self.nodes.size

    def arrays(self) -> dict:
        return _grid_arrays(self)

    def jax_arrays(self) -> dict:
        active = _ACTIVE.get()
        if self in active:
            return active[self]
        return _jax_arrays(self)


@lru_cache(maxsize=8)
def _grid_arrays(g: LineGrid) -> dict:
    pos = np.concatenate([[0.0], 2.0 ** -np.arange(g.grade, 0, -1) * g.h_inner,
                          np.arange(0.0, g.inner, g.h_inner),
                          np.arange(g.inner, g.outer + 0.5 * g.h_outer, g.h_outer)])
    pos = np.unique(np.round(pos, 12))
    edges = np.concatenate([-pos[::-1], pos[1:]])
    a, b = edges[:-1], edges[1:]
    p = g.p
    xc = _cheb_nodes(p)
    wb = _bary_weights(p)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    s = (half[:, None] * xc[None, :] + mid[:, None]).ravel()
    npan = a.size
    N = s.size

    # reference matrices on [-1, 1]
    V = np.polynomial.chebyshev.chebvander(xc, p - 1)
    Vinv = np.linalg.inv(V)
    dcoef = np.zeros((p, p))
    for j in range(p):
        e = np.zeros(p)
        e[j] = 1.0
        dcoef[:, j] = np.concatenate([np.polynomial.chebyshev.chebder(e), [0.0]])
    Dref = V @ dcoef @ Vinv
    # cumulative integral from -1 to node, exact for degree p - 1 (integral has degree p)
    Iref = np.zeros((p, p))
    gx, gw = legendre.leggauss(p)
    for i, t in enumerate(xc):
        u = -1 + (t + 1) * (gx + 1) / 2
        Iref[i] = (t + 1) / 2 * gw @ _lagrange(u, xc, wb)
    wref = gw @ _lagrange(gx, xc, wb)

    # Hilbert matrix (1/pi) PV int G(u)/(s - u) du
    gx2, gw2 = legendre.leggauss(24)
    L1 = _lagrange(gx, xc, wb)
    L2 = _lagrange(gx2, xc, wb)
    H = np.zeros((N, N))
    for j in range(npan):
        aj, bj, hj, cj = a[j], b[j], half[j], mid[j]
        cols = slice(j * p, (j + 1) * p)
        far = np.minimum(np.abs(s - aj), np.abs(s - bj)) >= 2 * hj
        inside = (s > aj) & (s < bj)
        # far targets: plain Gauss-Legendre
        sq = cj + hj * gx2
        H[far, cols] = hj * (gw2[None, :] / (s[far, None] - sq[None, :])) @ L2
        for i in np.nonzero(inside)[0]:
            x = s[i]
            lx = _lagrange([(x - cj) / hj], xc, wb)[0]
            sq1 = cj + hj * gx
            num = (L1 - lx[None, :]) / (x - sq1)[:, None]
            H[i, cols] = hj * gw @ num + lx * np.log((x - aj) / (bj - x))
        for i in np.nonzero(~far & ~inside)[0]:
            x = s[i]
            dist = min(abs(x - aj), abs(x - bj))
            left = abs(x - aj) < abs(x - bj)
            row = np.zeros(p)
            pos0, seg = 0.0, dist
            while pos0 < 2 * hj:
                ln = min(seg, 2 * hj - pos0)
                u0, u1 = pos0, pos0 + ln
                s0, s1 = (aj + u0, aj + u1) if left else (bj - u1, bj - u0)
                sq2 = 0.5 * (s1 - s0) * gx2 + 0.5 * (s0 + s1)
                row += 0.5 * (s1 - s0) * gw2 @ (_lagrange((sq2 - cj) / hj, xc, wb) / (x - sq2)[:, None])
                pos0 += ln
                seg *= 2
            H[i, cols] = row
    H /= np.pi
    S = edges[-1]
    K = g.ntail
    # tails: G = sum_k cp_k s^-k (s > S), sum_k cm_k s^-k (s < -S)
    Tp = _tail_integrals(s, S, K) / np.pi
    Tm = np.empty_like(Tp)
    Im = _tail_integrals(-s, S, K)
    for k in range(1, K + 1):
        Tm[:, k - 1] = -((-1.0) ** k) * Im[:, k - 1] / np.pi
    weights = (half[:, None] * wref[None, :]).ravel()
    return {
        "edges": edges, "a": a, "b": b, "half": half, "mid": mid, "s": s, "xc": xc, "wb": wb,
        "Dref": Dref, "Iref": Iref, "wref": wref, "H": H, "Tp": Tp, "Tm": Tm, "weights": weights,
        "npan": npan, "N": N, "S": S,
    }


# arrays passed as jit arguments while an evaluation is being traced, so the large
# matrices do not end up as constants in the compiled program
_ACTIVE: contextvars.ContextVar[dict] = contextvars.ContextVar("line_arrays", default={})


def _array_args(g: LineGrid) -> dict:
    return {k: v for k, v in _jax_arrays(g).items() if not isinstance(v, (int, float))}


@lru_cache(maxsize=8)
def _jax_arrays(g: LineGrid) -> dict:
    A = _grid_arrays(g)
    with jax.ensure_compile_time_eval():
        out = {k: jnp.asarray(v) for k, v in A.items() if isinstance(v, np.ndarray)}
    out["npan"] = A["npan"]
    out["N"] = A["N"]
    out["S"] = A["S"]
    return out


# ---------------------------------------------------------------------------
# line samples


class LineField(NamedTuple):
    """Samples on the panel nodes, tail coefficients (2, K) for s > S and s < -S,
    ``leak``, a bound on value error from truncation, and ``tail_err``, a bound on the
    error of the tail representation at |s| = S (transforms of slowly decaying inputs
    have logarithmic tails that are only approximated)."""

    values: jnp.ndarray
    tails: jnp.ndarray
    leak: jnp.ndarray
    tail_err: jnp.ndarray | float = 0.0


def _lf(values, tails, leak, tail_err=0.0) -> LineField:
    return LineField(values, tails, leak, tail_err)


def _zero_tails(g: LineGrid):
    return jnp.zeros((2, g.ntail), dtype=complex)


def _shift_tails(tails, m: int, S: float, K: int):
    """Multiply tails by s^m. Terms that stop decaying are dropped into the leak."""
    if m == 0:
        return tails, 0.0
    new = jnp.zeros_like(tails)
    leak = 0.0
    for k in range(1, K + 1):
        k2 = k - m
        c = tails[:, k - 1]
        if 1 <= k2 <= K:
            new = new.at[:, k2 - 1].set(c)
        else:
            leak = leak + jnp.max(jnp.abs(c)) * S ** (-k2)
    return new, leak


def _panels(v, A):
    return v.reshape(A["npan"], -1)


def _d_ds(f: LineField, g: LineGrid) -> LineField:
    A = g.jax_arrays()
    vp = _panels(f.values, A)
    dv = (vp @ A["Dref"].T) / A["half"][:, None]
    K = g.ntail
    ks = jnp.arange(1, K + 1)
    # d/ds c_k s^-k = -k c_k s^-(k+1)
    t = jnp.zeros_like(f.tails)
    t = t.at[:, 1:].set(-(ks[:-1]) * f.tails[:, :-1])
    leak = f.leak + jnp.max(jnp.abs(f.tails[:, -1])) * K * A["S"] ** (-K - 1)
    return _lf(dv.ravel(), t, leak, f.tail_err)


def _mul_node(f: LineField, w, tail_pow: int, tail_sign_p, tail_sign_m, g: LineGrid) -> LineField:
    """Multiply by a node function w(s) whose tail behaves as sign * s^tail_pow."""
    A = g.jax_arrays()
    t, leak = _shift_tails(f.tails, tail_pow, A["S"], g.ntail)
    t = t * jnp.asarray([[tail_sign_p], [tail_sign_m]])
    return _lf(f.values * w, t, f.leak + leak, f.tail_err * A["S"] ** tail_pow)


# ---------------------------------------------------------------------------
# expressions


class LineExpr:
    """Node of an expression evaluated along the line through the origin."""

    grid: LineGrid

    def line(self, d, th) -> LineField:  # pragma: no cover - abstract
        raise NotImplementedError

    # leaves expose a pointwise function; composite nodes do not
    fn: Callable | None = None

    def __add__(self, other):
        return _Binary(self, other, 1.0)

    def __sub__(self, other):
        return _Binary(self, other, -1.0)

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return scale(self, c)
        return NotImplemented

    __rmul__ = __mul__

    def at(self, x, th=None):
        """Value at a single point x (traceable)."""
        r = jnp.sqrt(jnp.sum(x * x))
        d = x / r
        return interpolate(self.line(d, th), r, self.grid)


class _Leaf(LineExpr):
    def __init__(self, fn: Callable, grid: LineGrid):
        self.fn = fn
        self.grid = grid

    def line(self, d, th):
        A = self.grid.jax_arrays()
        vals = jax.vmap(lambda s: self.fn(s * d, th))(A["s"])
        vals = jnp.asarray(vals, dtype=complex)
        p = self.grid.p
        edge = jnp.maximum(jnp.max(jnp.abs(vals[:p])), jnp.max(jnp.abs(vals[-p:])))
        return _lf(vals, _zero_tails(self.grid), edge)

    def at(self, x, th=None):
        return self.fn(x, th)


def leaf(fn: Callable, grid: LineGrid | None = None) -> LineExpr:
    """Wrap a traceable fn(x, theta) -> complex. It must decay within the grid extent."""
    return _Leaf(fn, grid or DEFAULT_GRID)


class _Binary(LineExpr):
    def __init__(self, a: LineExpr, b: LineExpr, sign: float):
        self.a, self.b, self.sign = a, b, sign
        self.grid = a.grid
        if a.fn is not None and b.fn is not None:
            fa, fb = a.fn, b.fn
            self.fn = lambda x, th: fa(x, th) + sign * fb(x, th)

    def line(self, d, th):
        u, v = self.a.line(d, th), self.b.line(d, th)
        return _lf(u.values + self.sign * v.values, u.tails + self.sign * v.tails, u.leak + v.leak,
                   u.tail_err + v.tail_err)


class _Map(LineExpr):
    """Generic node given a line map and an optional pointwise map for leaves."""

    def __init__(self, child: LineExpr, linemap, pointmap=None):
        self.child = child
        self.linemap = linemap
        self.grid = child.grid
        if pointmap is not None and child.fn is not None:
            cf = child.fn
            self.fn = lambda x, th: pointmap(cf, x, th)

    def line(self, d, th):
        if self.fn is not None:
            return _Leaf(self.fn, self.grid).line(d, th)
        return self.linemap(self.child, d, th)


def _rad(x):
    return jnp.sqrt(jnp.sum(x * x))


def scale(f: LineExpr, c) -> LineExpr:
    c = complex(c)
    return _Map(f, lambda ch, d, th: _scale_lf(ch.line(d, th), c), lambda cf, x, th: c * cf(x, th))


def _scale_lf(u: LineField, c) -> LineField:
    return _lf(c * u.values, c * u.tails, abs(c) * u.leak, abs(c) * u.tail_err)


def mul_r(f: LineExpr, power: int = 1) -> LineExpr:
    g = f.grid

    def lm(ch, d, th):
        A = g.jax_arrays()
        s = A["s"]
        sm = (-1.0) ** power
        return _mul_node(ch.line(d, th), jnp.abs(s) ** power, power, 1.0, sm, g)

    return _Map(f, lm, lambda cf, x, th: _rad(x) ** power * cf(x, th))


def mul_coord(f: LineExpr, i: int) -> LineExpr:
    g = f.grid

    def lm(ch, d, th):
        s = g.jax_arrays()["s"]
        u = ch.line(d, th)
        out = _mul_node(u, s, 1, 1.0, 1.0, g)
        return _lf(out.values * d[i], out.tails * d[i], out.leak, out.tail_err)

    return _Map(f, lm, lambda cf, x, th: x[i] * cf(x, th))


def mul_rhat(f: LineExpr, i: int) -> LineExpr:
    g = f.grid

    def lm(ch, d, th):
        s = g.jax_arrays()["s"]
        u = ch.line(d, th)
        out = _mul_node(u, jnp.sign(s), 0, 1.0, -1.0, g)
        return _lf(out.values * d[i], out.tails * d[i], out.leak, out.tail_err)

    return _Map(f, lm, lambda cf, x, th: x[i] / _rad(x) * cf(x, th))


def mul_fn(f: LineExpr, w: Callable) -> LineExpr:
    """Multiply by a decaying-or-bounded traceable function w(x, theta) (leaf level only)."""
    if f.fn is None:
        raise ValueError("mul_fn needs a leaf operand")
    return _Map(f, None, lambda cf, x, th: w(x, th) * cf(x, th))


def parity(f: LineExpr) -> LineExpr:
    g = f.grid

    def lm(ch, d, th):
        u = ch.line(d, th)
        K = g.ntail
        sgn = jnp.asarray((-1.0) ** np.arange(1, K + 1))
        t = jnp.stack([u.tails[1] * sgn, u.tails[0] * sgn])
        return _lf(u.values[::-1], t, u.leak, u.tail_err)

    return _Map(f, lm, lambda cf, x, th: cf(-x, th))


def d_s(f: LineExpr) -> LineExpr:
    """Derivative along the line, d/ds (equals sgn(s) d_r)."""
    g = f.grid
    return _Map(f, lambda ch, d, th: _d_ds(ch.line(d, th), g))


def euler(f: LineExpr) -> LineExpr:
    """x . grad = s d/ds."""
    g = f.grid

    def pm(cf, x, th):
        return jax.jvp(lambda y: cf(y, th), (x,), (x,))[1]

    def lm(ch, d, th):
        u = _d_ds(ch.line(d, th), g)
        return _mul_node(u, g.jax_arrays()["s"], 1, 1.0, 1.0, g)

    return _Map(f, lm, pm)


def d_r(f: LineExpr) -> LineExpr:
    g = f.grid

    def lm(ch, d, th):
        u = _d_ds(ch.line(d, th), g)
        return _mul_node(u, jnp.sign(g.jax_arrays()["s"]), 0, 1.0, -1.0, g)

    def pm(cf, x, th):
        r = _rad(x)
        return jax.jvp(lambda y: cf(y, th), (x,), (x / r,))[1]

    return _Map(f, lm, pm)


def dilation(f: LineExpr) -> LineExpr:
    """Sigma = -i (1 + s d/ds)."""
    return scale(f + euler(f), -1j)


def _direction_jvp(ch: LineExpr, d, th, e):
    """Tangent of the line samples when the direction moves along e."""
    fun = lambda dd: ch.line(dd / jnp.sqrt(jnp.sum(dd * dd)), th)
    _, tan = jax.jvp(fun, (d,), (e,))
    return tan


def grad(f: LineExpr, i: int) -> LineExpr:
    g = f.grid
    e = jnp.zeros(3).at[i].set(1.0)

    def pm(cf, x, th):
        return jax.jvp(lambda y: cf(y, th), (x,), (e,))[1]

    def lm(ch, d, th):
        u = ch.line(d, th)
        du = _d_ds(u, g)
        tan = _direction_jvp(ch, d, th, e)
        s = g.jax_arrays()["s"]
        # the derivative of a leak bound means nothing; reuse the primal bounds
        ang = _mul_node(LineField(tan.values, tan.tails, u.leak, u.tail_err), 1.0 / s, -1, 1.0, 1.0, g)
        return _lf(d[i] * du.values + ang.values, d[i] * du.tails + ang.tails,
                   u.leak + du.leak + ang.leak, du.tail_err + ang.tail_err)

    return _Map(f, lm, pm)


def _tangent_frame(d):
    k = jnp.argmin(jnp.abs(d))
    e = jnp.zeros(3).at[k].set(1.0)
    t1 = e - jnp.dot(e, d) * d
    t1 = t1 / jnp.sqrt(jnp.sum(t1 * t1))
    t2 = jnp.cross(d, t1)
    return t1, t2


def laplacian(f: LineExpr) -> LineExpr:
    g = f.grid

    def pm(cf, x, th):
        def d2(e):
            inner = lambda y: jax.jvp(lambda z: cf(z, th), (y,), (e,))[1]
            return jax.jvp(inner, (x,), (e,))[1]

        return jnp.sum(jax.vmap(d2)(jnp.eye(3)))

    def lm(ch, d, th):
        u = ch.line(d, th)
        du = _d_ds(u, g)
        ddu = _d_ds(du, g)
        s = g.jax_arrays()["s"]
        t1, t2 = _tangent_frame(jax.lax.stop_gradient(d))
        # frame held fixed under outer differentiation; the angular Laplacian does not
        # depend on the choice of orthonormal tangent frame
        t1 = t1 + 0.0 * d
        t2 = t2 + 0.0 * d

        def circ(t):
            def along(a):
                return ch.line(jnp.cos(a) * d + jnp.sin(a) * t, th)

            inner = lambda a: jax.jvp(along, (a,), (1.0,))[1]
            return jax.jvp(inner, (0.0,), (1.0,))[1]

        c1, c2 = circ(t1), circ(t2)
        ang = LineField(c1.values + c2.values, c1.tails + c2.tails, 2 * u.leak, 2 * u.tail_err)
        ang = _mul_node(ang, 1.0 / s ** 2, -2, 1.0, 1.0, g)
        rad1 = _mul_node(du, 2.0 / s, -1, 2.0, 2.0, g)
        return _lf(ddu.values + rad1.values + ang.values, ddu.tails + rad1.tails + ang.tails,
                   u.leak + ddu.leak + rad1.leak + ang.leak,
                   ddu.tail_err + rad1.tail_err + ang.tail_err)

    return _Map(f, lm, pm)


# ---------------------------------------------------------------------------
# ray operators


def _hilbert_std(u: LineField, g: LineGrid) -> LineField:
    A = g.jax_arrays()
    vals = A["H"] @ u.values + A["Tp"] @ u.tails[0] + A["Tm"] @ u.tails[1]
    # output tails from the moments of the panel part
    K = g.ntail
    s, w = A["s"], A["weights"]
    mom = jnp.stack([jnp.sum(w * s ** k * u.values) for k in range(K)]) / jnp.pi
    tails = jnp.stack([mom, mom])
    # inputs with tails produce logarithmic output tails that are not represented
    S = A["S"]
    ks = jnp.arange(1, K + 1)
    tail_in = jnp.sum(jnp.max(jnp.abs(u.tails), axis=0) * S ** (-ks.astype(float)))
    tail_err = tail_in * math.log(S) / jnp.pi
    return _lf(vals, tails, u.leak + u.tail_err * math.log(S), tail_err)


def _sgn_lf(u: LineField, g: LineGrid) -> LineField:
    s = g.jax_arrays()["s"]
    return _lf(u.values * jnp.sign(s), jnp.stack([u.tails[0], -u.tails[1]]), u.leak, u.tail_err)


def hilbert(f: LineExpr, kind: str) -> LineExpr:
    """kind: 'plus' (-sgn H), 'minus' (-H sgn), 'even', 'odd'."""
    g = f.grid
    if kind in ("even", "odd"):
        hp, hm = hilbert(f, "plus"), hilbert(f, "minus")
        pp, pm_ = hilbert(parity(f), "plus"), hilbert(parity(f), "minus")
        sign = 1.0 if kind == "even" else -1.0
        return scale((hp + hm) + sign * (pp - pm_), 0.5)

    def lm(ch, d, th):
        u = ch.line(d, th)
        if kind == "plus":
            return _scale_lf(_sgn_lf(_hilbert_std(u, g), g), -1.0)
        if kind == "minus":
            return _scale_lf(_hilbert_std(_sgn_lf(u, g), g), -1.0)
        raise ValueError(kind)

    return _Map(f, lm)


def dilation_inv(f: LineExpr) -> LineExpr:
    """(i/s) int_0^s G."""
    g = f.grid

    def lm(ch, d, th):
        u = ch.line(d, th)
        A = g.jax_arrays()
        npan = A["npan"]
        vp = _panels(u.values, A)
        half = A["half"][:, None]
        loc = (vp @ A["Iref"].T) * half  # int from left panel edge to node
        tot = (vp @ A["wref"]) * A["half"]  # panel integrals
        m = npan // 2
        right_before = jnp.concatenate([jnp.zeros(1), jnp.cumsum(tot[m:])[:-1]])
        cum_r = right_before[:, None] + loc[m:]
        left_tot = tot[:m]
        # for a left panel j: int_0^{s} = -(tot_j - loc + sum of panels between b_j and 0)
        after = jnp.concatenate([jnp.cumsum(left_tot[::-1])[::-1][1:], jnp.zeros(1)])
        cum_l = -((left_tot[:, None] - loc[:m]) + after[:, None])
        cum = jnp.concatenate([cum_l.ravel(), cum_r.ravel()])
        s = A["s"]
        vals = 1j * cum / s
        S = A["S"]
        K = g.ntail
        I_p = jnp.sum(tot[m:])
        I_m = -jnp.sum(left_tot)
        tails = []
        for side, B, I_B in ((0, S, I_p), (1, -S, I_m)):
            c = u.tails[side]
            t = jnp.zeros(K, dtype=complex)
            head = I_B
            for k in range(2, K + 1):
                head = head - c[k - 1] * B ** (1 - k) / (1 - k)
                if k < K:
                    t = t.at[k - 1].add(1j * c[k - 1] / (1 - k))
            t = t.at[0].add(1j * head)
            tails.append(t)
        # a 1/s input tail integrates to a logarithm, which the tails cannot hold
        tail_err = u.tail_err * math.log(S) + jnp.max(jnp.abs(u.tails[:, 0])) * math.log(S) / S \
            + jnp.max(jnp.abs(u.tails[:, -1])) / S ** K
        return _lf(vals, jnp.stack(tails), u.leak, tail_err)

    return _Map(f, lm)


# ---------------------------------------------------------------------------
# evaluation


def interpolate(u: LineField, r, g: LineGrid):
    """Value of the line field at s = r (traceable)."""
    A = g.jax_arrays()
    edges = A["edges"]
    S = A["S"]
    j = jnp.clip(jnp.searchsorted(edges, r) - 1, 0, A["npan"] - 1)
    p = g.p
    a = edges[j]
    b = edges[j + 1]
    t = (2 * r - a - b) / (b - a)
    vals = jax.lax.dynamic_slice(u.values, (j * p,), (p,))
    dxn = t - A["xc"]
    dxn = jnp.where(jnp.abs(dxn) < 1e-15, 1e-15, dxn)
    q = A["wb"] / dxn
    inside = jnp.sum(q * vals) / jnp.sum(q)
    K = g.ntail
    pw = r ** (-jnp.arange(1, K + 1))
    tail = jnp.where(r > 0, jnp.sum(u.tails[0] * pw), jnp.sum(u.tails[1] * pw))
    return jnp.where(jnp.abs(r) <= S, inside, tail)


def evaluate(exprs, points, thetas=None, with_leak: bool = False):
    """Evaluate expressions at points; thetas is None or a pytree with leading axis n.

    Returns an array of shape (len(exprs), n) (and the per-point leak bound).
    """
    exprs = list(exprs)
    pts = jnp.asarray(np.atleast_2d(np.asarray(points, dtype=float)))

    def one(args):
        x, th = args
        r = _rad(x)
        d = x / r
        vals, leaks = [], []
        for e in exprs:
            if e.fn is not None:
                vals.append(jnp.asarray(e.fn(x, th), dtype=complex))
                leaks.append(jnp.asarray(0.0))
            else:
                u = e.line(d, th)
                vals.append(interpolate(u, r, e.grid))
                leaks.append(jnp.abs(u.leak) + jnp.where(r > e.grid.S, jnp.abs(u.tail_err), 0.0))
        return jnp.stack(vals), jnp.stack(leaks)

    n = pts.shape[0]
    th = thetas if thetas is not None else jnp.zeros(n)
    grids = list(dict.fromkeys(e.grid for e in exprs))

    def run(P, T, arrs):
        scope = {g: {**_jax_arrays(g), **a} for g, a in zip(grids, arrs)}
        token = _ACTIVE.set(scope)
        try:
            return jax.lax.map(one, (P, T))
        finally:
            _ACTIVE.reset(token)

    opts = COMPILER_OPTIONS or None
    out, leak = jax.jit(run, compiler_options=opts)(pts, th, [_array_args(g) for g in grids])
    out, leak = np.asarray(out).T, np.asarray(leak).T
    return (out, leak) if with_leak else out


DEFAULT_GRID = LineGrid()

# the composite programs are large and run only a handful of points, so compile
# time dominates; backend optimisation barely changes run time
COMPILER_OPTIONS: dict = {"xla_backend_optimization_level": 0}

__all__ = [
    "LineGrid", "LineField", "COMPILER_OPTIONS", "LineExpr", "DEFAULT_GRID", "leaf", "scale", "mul_r", "mul_coord", "mul_rhat",
    "mul_fn", "parity", "d_s", "d_r", "euler", "dilation", "grad", "laplacian", "hilbert", "dilation_inv",
    "interpolate", "evaluate",
]
