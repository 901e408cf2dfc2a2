"""The S-product and the standard inner product, with taper regularization.

Regularization. Both products of packets are oscillatory integrals over all
space that converge only conditionally (or not at all on the diagonal). The
integrand is weighted by exp(-2 eps |r - c|), i.e. each field carries a taper
exp(-eps |r - c|), and the box radius R is chosen so the weight is below
exp(-30) at the edge. The standard product is then extrapolated to eps -> 0
with a cubic in eps through four halving tapers. Diagonal S-products are only
reported as ratios to the tapered volume int exp(-2 eps r) d^3r = pi / eps^3.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import transforms as T
from .errors import DivergentProduct, GridMismatch
from .fields import ClosedFormField, PacketParams, RayField
from .report import CheckReport, _plain
from .wavepacket import make_packet

TAPER_DECADES = 15.0   # exp(-2 eps R) = exp(-30)
GL_ORDER = 16


@dataclass
class ProductResult:
    """A regularized product value.

    ``raw`` holds the (eps, value) pairs behind an extrapolated value, and
    ``error`` the spread between the two highest extrapolation orders.
    """

    value: complex
    regularization: dict
    extrapolated: bool = False
    analytic_ref: complex | None = None
    raw: list = field(default_factory=list)
    error: float | None = None

    def __post_init__(self):
        if self.extrapolated and len(self.raw) < 2:
            raise ValueError("an extrapolated result must carry the raw values it came from")

    @property
    def rel_error(self) -> float | None:
        """|value - analytic_ref| / |analytic_ref|, when a reference exists."""
        if self.analytic_ref is None:
            return None
        return abs(self.value - self.analytic_ref) / abs(self.analytic_ref)

    def to_dict(self) -> dict:
        return _plain({
            "value": complex(self.value),
            "regularization": self.regularization,
            "extrapolated": self.extrapolated,
            "analytic_ref": None if self.analytic_ref is None else complex(self.analytic_ref),
            "raw": [[e, complex(v)] for e, v in self.raw],
            "error": self.error,
            "rel_error": self.rel_error,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# quadrature


def radial_rule(R: float, kmax: float, order: int = GL_ORDER):
    """Composite Gauss-Legendre nodes and weights on [0, R] for frequencies up to kmax."""
    width = min(2.0, 8.0 / max(kmax, 1e-12))
    n = max(1, int(math.ceil(R / width)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, R, n + 1)
    a, b = edges[:-1, None], edges[1:, None]
    return ((a + b) / 2 + (b - a) / 2 * x).ravel(), ((b - a) / 2 * w * np.ones((n, 1))).ravel()


def _frame(axis) -> np.ndarray:
    """Orthonormal rows (e1, e2, axis)."""
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    t = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(u, t)
    e1 /= np.linalg.norm(e1)
    return np.array([e1, np.cross(u, e1), u])


def sphere_rule(n_theta: int, n_phi: int, axis=(0.0, 0.0, 1.0)):
    """Gauss-Legendre in cos(theta) about ``axis`` times the trapezoid rule in phi."""
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    st = np.sqrt(1 - ct ** 2)
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    local = np.stack([np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)), np.outer(ct, np.ones(n_phi))], -1)
    dirs = local.reshape(-1, 3) @ _frame(axis)
    return dirs, np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi)).ravel()


def _integrate_3d(fn, centre, eps: float, kmax: float, n_theta: int, n_phi: int, axis, chunk: int = 32):
    """int fn(x) exp(-2 eps |x - centre|) d^3x on a ball of radius TAPER_DECADES / eps."""
    R = TAPER_DECADES / eps
    r, wr = radial_rule(R, kmax)
    wrad = wr * r ** 2 * np.exp(-2 * eps * r)
    dirs, wd = sphere_rule(n_theta, n_phi, axis)
    c = np.asarray(centre, dtype=float)
    tot = 0j
    for i in range(0, len(dirs), chunk):
        pts = c + dirs[i:i + chunk, None, :] * r[None, :, None]
        tot += np.sum(wd[i:i + chunk, None] * wrad[None, :] * fn(pts))
    return complex(tot), R


def tapered_volume(eps: float) -> float:
    """int exp(-2 eps r) d^3r."""
    return math.pi / eps ** 3


def _extrapolate(eps, vals):
    """Value at eps = 0 of the cubic through four points, and its change from the quadratic."""
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(vals, dtype=complex)
    A = np.vander(eps, len(eps), increasing=True)
    v3 = np.linalg.solve(A, vals)[0]
    v2 = np.linalg.solve(np.vander(eps[1:], len(eps) - 1, increasing=True), vals[1:])[0]
    return complex(v3), float(abs(v3 - v2))


# ---------------------------------------------------------------------------
# term bookkeeping for closed-form arguments


def _kmax(*fields: ClosedFormField) -> float:
    return max(abs(t.alpha) + float(np.linalg.norm(t.kvec)) for f in fields for t in f.terms)


def _max_degree(*fields: ClosedFormField) -> int:
    return max(t.degree for f in fields for t in f.terms)


def _kvecs(*fields: ClosedFormField):
    return [np.asarray(t.kvec, dtype=float) for f in fields for t in f.terms]


def _common_axis(vectors):
    """A unit vector all the given vectors are parallel to, or None."""
    nz = [v for v in vectors if np.linalg.norm(v) > 1e-12]
    if not nz:
        return np.array([0.0, 0.0, 1.0])
    u = nz[0] / np.linalg.norm(nz[0])
    if all(np.linalg.norm(np.cross(u, v)) <= 1e-12 * np.linalg.norm(v) for v in nz):
        return u
    return None


def _angular_nodes(kspread: float, R: float, extra: float = 0.0) -> int:
    return int(0.7 * (kspread * R + extra)) + 40


def packet_signature(f: ClosedFormField):
    """(kappa, K, A) when f = A sin(kappa rho)/rho exp(i K.rho), else None."""
    if not isinstance(f, ClosedFormField) or len(f.terms) != 2:
        return None
    t1, t2 = sorted(f.terms, key=lambda t: t.alpha)
    if (t1.npow, t2.npow) != (-1, -1) or t1.degree or t2.degree or t1.kvec != t2.kvec or t1.alpha >= 0:
        return None
    if abs(t1.alpha + t2.alpha) > 1e-14 * abs(t1.alpha) or abs(t1.coeff + t2.coeff) > 1e-12 * abs(t1.coeff):
        return None
    return -t1.alpha, np.asarray(t1.kvec, dtype=float), complex(t1.coeff / 0.5j)


def _divergence_check(phi: ClosedFormField, psi: ClosedFormField):
    """A cross pair with equal (alpha, k) and no radial decay makes int conj(phi) psi d^3r diverge."""
    acc: dict = {}
    for a in phi.terms:
        for b in psi.terms:
            if a.alpha != b.alpha or np.linalg.norm(np.subtract(a.kvec, b.kvec)) > 1e-12:
                continue
            if a.npow + b.npow + 2 < -1:
                continue
            key = (a.alpha, a.kvec, a.npow + b.npow, a.dirmono, b.dirmono)
            acc[key] = acc.get(key, 0j) + np.conj(a.coeff) * b.coeff
    scale = max(abs(t.coeff) for t in phi.terms) * max(abs(t.coeff) for t in psi.terms)
    if any(abs(c) > 1e-12 * scale for c in acc.values()):
        raise DivergentProduct("the product diverges: the fields share a plane-wave component "
                               "(equal momenta), so it is finite only for distinct velocities")


# ---------------------------------------------------------------------------
# standard product


def radial_reduction(a: float, b: float, delta: float, eps: float | None = None) -> float:
    """Tapered standard product of coinciding packets from the sine-integral chain.

    <psi'|psi> = (4 pi / delta) int sin(a r) sin(b r) sin(delta r) / r exp(-2 eps r) dr
    with a, b the radial frequencies and delta = |K - K'|. Each of the four sine
    integrals is atan(k / 2 eps), tending to (pi / 2) sgn(k) as eps -> 0.
    """
    if delta <= 0:
        raise DivergentProduct("equal momenta: the product diverges")

    def si(k):
        if eps is None or eps == 0:
            return 0.5 * math.pi * np.sign(k)
        return math.atan(k / (2 * eps))

    return math.pi / delta * (si(delta + a - b) + si(delta - a + b) - si(delta + a + b) - si(delta - a - b))


def standard_reference(p, p_prime) -> float:
    """pi^2 / |p - p'|."""
    d = float(np.linalg.norm(np.subtract(p, p_prime)))
    if d == 0:
        raise DivergentProduct("equal momenta: the product diverges")
    return math.pi ** 2 / d


def _tapered_standard_coinciding(phi: ClosedFormField, psi: ClosedFormField, eps: float) -> complex:
    """Exact angular integral 4 pi sinc(|dk| r) term by term, then radial quadrature."""
    kmax = _kmax(phi, psi)
    R = TAPER_DECADES / eps
    r, wr = radial_rule(R, kmax)
    w = wr * np.exp(-2 * eps * r)
    tot = np.zeros_like(r, dtype=complex)
    for a in phi.terms:
        for b in psi.terms:
            dk = float(np.linalg.norm(np.subtract(b.kvec, a.kvec)))
            rad = np.conj(a.coeff) * b.coeff * r ** (a.npow + b.npow + 2) * np.exp(1j * (b.alpha - a.alpha) * r)
            tot += rad * 4 * np.pi * np.sinc(dk * r / np.pi)
    return complex(np.sum(w * tot))


def _tapered_standard_3d(phi: ClosedFormField, psi: ClosedFormField, eps: float, centre) -> complex:
    kv = _kvecs(phi, psi)
    offset = np.subtract(psi.center, phi.center)
    sep = float(np.linalg.norm(offset))
    dk = max(float(np.linalg.norm(a - b)) for a in kv for b in kv)
    kmax = _kmax(phi, psi)
    R = TAPER_DECADES / eps
    axis = _common_axis(kv + [offset])
    n_theta = _angular_nodes(dk, R, kmax * sep)
    if axis is not None and _max_degree(phi, psi) == 0:
        n_phi = 1
    else:
        axis = np.array([0.0, 0.0, 1.0]) if axis is None else axis
        n_phi = 2 * n_theta
    val, _ = _integrate_3d(lambda x: np.conj(phi.evaluate(x)) * psi.evaluate(x), centre, eps, kmax,
                           n_theta, n_phi, axis)
    return val


def _default_tapers(phi: ClosedFormField, psi: ClosedFormField, base: float = 0.3, levels: int = 4):
    """Halving tapers scaled to the smallest momentum difference and the centre separation."""
    dks = [float(np.linalg.norm(np.subtract(b.kvec, a.kvec))) for a in phi.terms for b in psi.terms]
    dks = [d for d in dks if d > 1e-12] or [1.0]
    d = min(dks)
    sep = float(np.linalg.norm(np.subtract(psi.center, phi.center)))
    e0 = base * d / (1 + d * sep)
    return tuple(e0 * 0.5 ** k for k in range(levels))


def standard_product(phi, psi, eps=None, extrapolate: bool = True) -> ProductResult:
    """<phi|psi> = int conj(phi) psi d^3r.

    Closed-form fields: coinciding centres use the exact angular sinc step and a
    radial quadrature; separated centres use a 3-D quadrature about the midpoint.
    Sampled fields use the grid's volume weights with the same taper. ``eps``
    is a taper or a sequence of them; with ``extrapolate`` and four or more
    tapers the result is the eps -> 0 cubic extrapolation.
    """
    if isinstance(phi, RayField) and isinstance(psi, RayField):
        return _standard_ray(phi, psi, eps)
    if not (isinstance(phi, ClosedFormField) and isinstance(psi, ClosedFormField)):
        raise TypeError("standard_product takes two ClosedFormFields or two RayFields")
    _divergence_check(phi, psi)
    tapers = _default_tapers(phi, psi) if eps is None else tuple(np.atleast_1d(np.asarray(eps, dtype=float)))
    if min(tapers) <= 0:
        raise ValueError("tapers must be positive")
    coinciding = np.allclose(phi.center, psi.center, rtol=0, atol=0) and _max_degree(phi, psi) == 0
    centre = 0.5 * (np.asarray(phi.center) + np.asarray(psi.center))
    if coinciding:
        phi0, psi0 = phi.shifted((0.0, 0.0, 0.0)), psi.shifted((0.0, 0.0, 0.0))
        vals = [_tapered_standard_coinciding(phi0, psi0, e) for e in tapers]
    else:
        vals = [_tapered_standard_3d(phi, psi, e, centre) for e in tapers]
    ref = None
    sa, sb = packet_signature(phi), packet_signature(psi)
    if sa is not None and sb is not None:
        ref = complex(np.conj(sa[2]) * sb[2] * standard_reference(sb[1], sa[1]))
    reg = {"taper": min(tapers), "tapers": list(tapers), "R": TAPER_DECADES / min(tapers),
           "weight": "exp(-2 eps |r - c|)", "centre": centre.tolist(),
           "angular": "exact sinc" if coinciding else "Gauss-Legendre"}
    raw = list(zip(tapers, vals))
    if extrapolate and len(tapers) >= 4:
        order = np.argsort(tapers)[::-1]
        v, err = _extrapolate(np.asarray(tapers)[order], np.asarray(vals)[order])
        return ProductResult(v, reg, True, ref, raw, err)
    i = int(np.argmin(tapers))
    return ProductResult(vals[i], reg, False, ref, raw)


def _standard_ray(phi: RayField, psi: RayField, eps) -> ProductResult:
    if phi.grid != psi.grid:
        raise GridMismatch("fields live on different grids")
    g = phi.grid
    e = 0.0 if eps is None else float(np.min(eps))
    w = g.weights() * np.exp(-2 * e * g.radii)[None, :]
    v = complex(np.sum(w * np.conj(phi.values) * psi.values))
    return ProductResult(v, {"taper": e, "R": g.R, "grid": g.to_dict()}, False, None, [(e, v)])


def standard_product_packets(params: PacketParams, params2: PacketParams, t: float = 0.0, eps=None) -> ProductResult:
    """<psi_v'(t)|psi_v(t)> with v from ``params`` and v' from ``params2``."""
    return standard_product(make_packet(params2, t), make_packet(params, t), eps)


def product_time_invariance(params: PacketParams, params2: PacketParams, times=(0.0, 1.0, 5.0),
                            tol: float = 0.01) -> CheckReport:
    """Max relative deviation of <psi_v'(t)|psi_v(t)> from its t = times[0] value."""
    times = tuple(float(t) for t in times)
    if len(times) < 2:
        raise ValueError("need at least two times")
    res = [standard_product_packets(params, params2, t) for t in times]
    base = res[0].value
    dev = max(abs(r.value - base) / abs(base) for r in res)
    ref = res[0].analytic_ref
    return CheckReport("product_time_invariance", dev, tol,
                       {"params": params.to_dict(), "params2": params2.to_dict(), "times": list(times),
                        "values": [r.value for r in res], "errors": [r.error for r in res],
                        "analytic_ref": ref},
                       notes="taper-extrapolated standard product at each time")


# ---------------------------------------------------------------------------
# S-product


def s_integrand(phi: ClosedFormField, psi: ClosedFormField) -> ClosedFormField:
    """1/2 [d_r(r conj phi) (H- r psi) - (r conj phi) d_r(H- r psi)] in closed form."""
    rphi = phi.conj().mul_r()
    g = T.hilbert_pm(-1, psi.mul_r())
    return (rphi.d_r().product(g) - rphi.product(g.d_r())) * 0.5


def _s_closed(phi: ClosedFormField, psi: ClosedFormField, eps: float, n_theta=None, n_phi=None):
    F = s_integrand(phi, psi)
    if F.is_zero():
        return 0j, {"R": TAPER_DECADES / eps}
    kv = _kvecs(F)
    R = TAPER_DECADES / eps
    axis = _common_axis(kv)
    spread = max(float(np.linalg.norm(k)) for k in kv)
    nt = _angular_nodes(spread, R) if n_theta is None else n_theta
    if n_phi is None:
        n_phi = 2 * _max_degree(F) + 2 if axis is not None else 2 * nt
    axis = np.array([0.0, 0.0, 1.0]) if axis is None else axis
    val, R = _integrate_3d(F.evaluate, (0.0, 0.0, 0.0), eps, _kmax(F), nt, n_phi, axis)
    return val, {"R": R, "n_theta": nt, "n_phi": n_phi}


def _s_pair_terms(phi: RayField, psi: RayField):
    """Per-node factors of the symmetrized integrand on a self-dual ray grid.

    Along each line w = s conj(phi) is smooth through the origin, so d_r(r conj phi)
    is its spectral derivative; H- r psi only involves smooth extensions.
    """
    g = phi.grid
    T._require_self_dual(g)
    r = g.radii
    rphi = r * np.conj(phi.values)
    d_rphi = T._pair_derivative_spectral(rphi, -rphi[g.antipode], r)
    h = T.hilbert_pm_spectral(-1, psi.map_radial(lambda x: x))
    dh = T.radial_derivative(h, "spectral").values
    return 0.5 * (d_rphi * h.values - rphi * dh)


def s_product(phi, psi, eps: float | None = None, n_theta: int | None = None,
              n_phi: int | None = None) -> ProductResult:
    """<phi|psi>_S = <phi|(-i Sigma H- r) psi> in its symmetrized form.

    Closed-form fields (centred at the origin) use the exact H- r psi and a
    tapered 3-D quadrature, default eps = 0.04. RayFields on a self-dual grid
    use spectral pair operators and the grid's weights; eps defaults to 0 there.
    For two packets with opposite momenta the tapered value is compared with
    (p0 / 2) int exp(2 i p.r - 2 eps r) d^3r = (p0 / 2) 16 pi eps / (4 eps^2 + 4 p^2)^2.
    """
    if isinstance(phi, RayField) and isinstance(psi, RayField):
        if phi.grid != psi.grid:
            raise GridMismatch("fields live on different grids")
        e = 0.0 if eps is None else float(eps)
        g = phi.grid
        w = g.weights() * np.exp(-2 * e * g.radii)[None, :]
        v = complex(np.sum(w * _s_pair_terms(phi, psi)))
        return ProductResult(v, {"taper": e, "R": g.R, "grid": g.to_dict()}, False, None, [(e, v)])
    if not (isinstance(phi, ClosedFormField) and isinstance(psi, ClosedFormField)):
        raise TypeError("s_product takes two ClosedFormFields or two RayFields")
    e = 0.04 if eps is None else float(eps)
    if not e > 0:
        raise ValueError("closed-form S-products need a positive taper")
    val, info = _s_closed(phi, psi, e, n_theta, n_phi)
    ref = None
    sa, sb = packet_signature(phi), packet_signature(psi)
    if sa is not None and sb is not None and abs(sa[0] - sb[0]) <= 1e-12 * sa[0]:
        K, Kp = sb[1], sa[1]
        ca, cb = sa[2], sb[2]
        dk = float(np.linalg.norm(K - Kp))
        if np.linalg.norm(K + Kp) <= 1e-12 * max(1.0, dk):
            ref = np.conj(ca) * cb * 0.5 * sa[0] * 16 * np.pi * e / (4 * e * e + dk * dk) ** 2
        elif dk <= 1e-12:
            ref = np.conj(ca) * cb * 0.5 * sa[0] * tapered_volume(e)
    reg = {"taper": e, "weight": "exp(-2 eps r)"}
    reg.update(info)
    return ProductResult(val, reg, False, None if ref is None else complex(ref), [(e, val)])


def s_delta_coefficient(psi: ClosedFormField, eps: float = 0.04) -> ProductResult:
    """<psi|psi>_S divided by the tapered volume: the coefficient of (2 pi)^3 delta(0)."""
    res = s_product(psi, psi, eps)
    sig = packet_signature(psi)
    ref = None
    if sig is not None:
        ref = complex(abs(sig[2]) ** 2 * 0.5 * sig[0])
    reg = dict(res.regularization)
    reg["volume"] = tapered_volume(eps)
    return ProductResult(res.value / tapered_volume(eps), reg, False, ref, res.raw)


def s_product_unsymmetrized(phi: RayField, psi: RayField) -> complex:
    """<phi|(-i Sigma H- r) psi> with the spectral pair operators, no integration by parts."""
    if phi.grid != psi.grid:
        raise GridMismatch("fields live on different grids")
    T._require_self_dual(phi.grid)
    h = T.hilbert_pm_spectral(-1, psi.map_radial(lambda x: x))
    s = -1j * T.dilation(h, "spectral")
    return complex(np.sum(phi.grid.weights() * np.conj(phi.values) * s.values))


__all__ = [
    "ProductResult", "radial_rule", "sphere_rule", "tapered_volume", "packet_signature", "radial_reduction",
    "standard_reference", "standard_product", "standard_product_packets", "product_time_invariance",
    "s_integrand", "s_product", "s_delta_coefficient", "s_product_unsymmetrized", "TAPER_DECADES",
]
