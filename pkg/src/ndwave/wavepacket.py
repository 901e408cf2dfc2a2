"""Non-dispersive packets and residuals of the identities they satisfy.

psi_v   = sin(m v0 |r - v t|) / |r - v t| * exp(i m v.(r - v t)) * exp(-i m c^2 t / 2)
Psi_v   = sin(m g c |r - v t|) / |r - v t| * exp(i m g v.(r - v t)) * exp(-i m c^2 t / 2g)

with v0 = sqrt(c^2 + |v|^2) and g the Lorentz factor. Spatial operators act
through the closed-form term algebra. Time derivatives come from forward-mode
autodiff of an independent direct formula, so the transport identity is a real
check rather than a restatement of the chain rule.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

import jax
import jax.numpy as jnp

from .errors import SuperluminalRelativistic
from .fields import ClosedFormField, ClosedFormTerm, PacketParams, RayGrid
from .report import CheckReport, observed_order

jax.config.update("jax_enable_x64", True)

NONREL = "nonrelativistic"
REL = "relativistic"


def _check_kind(params: PacketParams, kind: str):
    if kind not in (NONREL, REL):
        raise ValueError(f"kind must be {NONREL!r} or {REL!r}")
    if kind == REL and not params.speed < params.c:
        raise SuperluminalRelativistic(f"|v| = {params.speed} must be below c = {params.c}")


def packet_constants(params: PacketParams, kind: str = NONREL):
    """(kappa, K, omega): radial frequency, plane-wave vector and rest frequency."""
    _check_kind(params, kind)
    m, c = params.m, params.c
    v = np.asarray(params.v)
    if kind == NONREL:
        return params.p0, m * v, 0.5 * m * c * c
    g = params.gamma
    return m * g * c, m * g * v, 0.5 * m * c * c / g


def make_packet(params: PacketParams, t: float = 0.0, kind: str = NONREL) -> ClosedFormField:
    """The packet at time t as a two-term closed-form field centred at v t."""
    kappa, K, omega = packet_constants(params, kind)
    phase = complex(np.exp(-1j * omega * t))
    center = tuple(float(x) * t for x in params.v)
    k = tuple(float(x) for x in K)
    terms = [
        ClosedFormTerm(-0.5j * phase, -1, (0, 0, 0), float(kappa), k),
        ClosedFormTerm(0.5j * phase, -1, (0, 0, 0), -float(kappa), k),
    ]
    return ClosedFormField(terms, center=center)


def _psi(x, t, kappa, K, omega, v):
    y = x - v * t
    rho = jnp.sqrt(jnp.sum(y * y))
    safe = jnp.where(rho > 0, rho, 1.0)
    env = jnp.where(rho > 0, jnp.sin(kappa * safe) / safe, kappa)
    return env * jnp.exp(1j * jnp.dot(K, y)) * jnp.exp(-1j * omega * t)


def _consts(params: PacketParams, kind: str):
    kappa, K, omega = packet_constants(params, kind)
    return (jnp.asarray(float(kappa)), jnp.asarray(K, dtype=float), jnp.asarray(float(omega)),
            jnp.asarray(params.v, dtype=float))


def packet_callable(params: PacketParams, kind: str = NONREL) -> Callable:
    """Direct traceable formula psi(x, t), independent of the term algebra."""
    consts = _consts(params, kind)
    return lambda x, t: _psi(x, t, *consts)


@jax.jit
def _dt_batch(pts, t, kappa, K, omega, v):
    def one(x):
        return jax.jvp(lambda s: _psi(x, s, kappa, K, omega, v), (t,), (jnp.ones_like(t),))[1]

    return jax.vmap(one)(pts)


def time_derivative(params: PacketParams, points, t: float, kind: str = NONREL) -> np.ndarray:
    """Exact d/dt of the packet at the given points (forward-mode autodiff in t)."""
    pts = jnp.asarray(np.asarray(points, dtype=float).reshape(-1, 3))
    out = _dt_batch(pts, jnp.asarray(float(t)), *_consts(params, kind))
    return np.asarray(out).reshape(np.shape(points)[:-1])


def default_points(params: PacketParams, t: float = 0.0, n: int = 256, radius: float = 8.0,
                   seed: int = 0) -> np.ndarray:
    """Fixed-seed points in a ball around the packet centre (the centre itself excluded)."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = radius * rng.uniform(0.05, 1.0, size=n) ** (1 / 3)
    return np.asarray(params.v) * t + d * r[:, None]


def _points(grid, params: PacketParams, t: float) -> np.ndarray:
    if grid is None:
        return default_points(params, t)
    if isinstance(grid, RayGrid):
        return (grid.points() + np.asarray(params.v) * t).reshape(-1, 3)
    pts = np.asarray(grid, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must have shape (n, 3)")
    return pts


def _relative(res: np.ndarray, parts) -> tuple[float, str]:
    scale = max(float(np.linalg.norm(p)) for p in parts)
    if scale == 0.0:
        return float(np.linalg.norm(res)), "packet vanishes identically; absolute residual reported"
    return float(np.linalg.norm(res)) / scale, ""


def _report(check_id, res, parts, params, t, kind, tol, extra="", expect_fail=False, order=None):
    rel, note = _relative(res, parts)
    notes = "; ".join(s for s in (note, extra) if s)
    return CheckReport(check_id, rel, tol, {"params": params.to_dict(), "t": t, "kind": kind},
                       convergence_order=order, notes=notes, expect_fail=expect_fail)


def _grad_dot(f: ClosedFormField, v, pts) -> np.ndarray:
    g = f.grad()
    return sum(float(v[i]) * g[i].evaluate(pts) for i in range(3) if v[i] != 0.0) if any(v) else 0 * pts[:, 0]


def fd_laplacian(psi: Callable, pts: np.ndarray, t: float, h: float) -> np.ndarray:
    """Fourth-order central-difference Laplacian of psi(x, t)."""
    ev = jax.jit(jax.vmap(lambda x: psi(x, t)))
    pts = np.asarray(pts, dtype=float)
    out = -3 * 2.5 * np.asarray(ev(jnp.asarray(pts)))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        for k, w in ((1, 4 / 3), (2, -1 / 12)):
            out = out + w * (np.asarray(ev(jnp.asarray(pts + k * e))) + np.asarray(ev(jnp.asarray(pts - k * e))))
    return out / h ** 2


def schrodinger_residual(params: PacketParams, grid=None, t: float = 0.0, kind: str = NONREL,
                         tol: float = 1e-10) -> CheckReport:
    """(i d_t + lap / 2m) psi with the closed-form Laplacian."""
    psi = make_packet(params, t, kind)
    pts = _points(grid, params, t)
    a = 1j * time_derivative(params, pts, t, kind)
    b = psi.laplacian().evaluate(pts) / (2 * params.m)
    extra = "" if kind == NONREL or params.speed == 0 else "Psi_v is not a solution of the free equation when v != 0"
    return _report("schrodinger", a + b, (a, b), params, t, kind, tol, extra, expect_fail=kind == REL and params.speed > 0)


def schrodinger_fd_convergence(params: PacketParams, grid=None, t: float = 0.0,
                               steps=(0.2, 0.1, 0.05)) -> CheckReport:
    """Same residual with a finite-difference Laplacian; reports the observed order in h.

    The tolerance is the difference between the two finest resolutions, a
    conservative estimate of the finest residual for a convergent stencil.
    """
    f = packet_callable(params)
    pts = _points(grid, params, t)
    a = 1j * time_derivative(params, pts, t)
    scale = max(float(np.linalg.norm(a)), 1e-300)
    res = []
    for h in steps:
        b = fd_laplacian(f, pts, t, h) / (2 * params.m)
        res.append(float(np.linalg.norm(a + b)) / scale)
    order = observed_order(res, steps)
    return CheckReport("schrodinger_fd", res[-1], 2 * abs(res[-2] - res[-1]) + 1e-13,
                       {"params": params.to_dict(), "t": t, "steps": list(steps), "residuals": res},
                       convergence_order=order, notes="finite-difference Laplacian, fourth-order stencil")


def transport_residual(params: PacketParams, grid=None, t: float = 0.0, kind: str = NONREL,
                       tol: float = 1e-10) -> CheckReport:
    """(d_t + v.grad + i m c^2 / 2) psi, with c^2 / 2g for the relativistic packet."""
    _, _, omega = packet_constants(params, kind)
    psi = make_packet(params, t, kind)
    pts = _points(grid, params, t)
    a = time_derivative(params, pts, t, kind)
    b = _grad_dot(psi, params.v, pts)
    c = 1j * omega * psi.evaluate(pts)
    return _report("transport" if kind == NONREL else "transport_rel", a + b + c, (a, b, c), params, t, kind, tol)


def gauge_laplacian_residual(params: PacketParams, grid=None, t: float = 0.0, kind: str = NONREL,
                             tol: float = 1e-10) -> CheckReport:
    """(grad - i K)^2 psi + kappa^2 psi with (kappa, K) = (m v0, m v) or (m g c, m g v)."""
    kappa, K, _ = packet_constants(params, kind)
    psi = make_packet(params, t, kind)
    pts = _points(grid, params, t)
    lap = psi.laplacian().evaluate(pts)
    cross = -2j * _grad_dot(psi, K, pts)
    val = psi.evaluate(pts)
    rest = (kappa ** 2 - float(np.dot(K, K))) * val
    cid = "gauge_laplacian" if kind == NONREL else "gauge_laplacian_rel"
    return _report(cid, lap + cross + rest, (lap, cross, kappa ** 2 * val), params, t, kind, tol)


def modified_evolution_residual(params: PacketParams, grid=None, t: float = 0.0, tol: float = 1e-10,
                                include_gamma: bool = True) -> CheckReport:
    """(lap + 2 i m g d_t) Psi_v. Holds for this packet only; it is not a general evolution law.

    With ``include_gamma=False`` the free-equation operator (g -> 1) is applied
    instead; for v != 0 that is a negative test expected to fail.
    """
    psi = make_packet(params, t, REL)
    pts = _points(grid, params, t)
    g = params.gamma if include_gamma else 1.0
    a = psi.laplacian().evaluate(pts)
    b = 2j * params.m * g * time_derivative(params, pts, t, REL)
    note = "identity specific to Psi_v, not an evolution equation"
    if not include_gamma:
        note = "gamma omitted: free-equation operator applied to Psi_v"
    neg = (not include_gamma) and params.speed > 0
    cid = "modified_evolution" if include_gamma else "modified_evolution_no_gamma"
    return _report(cid, a + b, (a, b), params, t, REL, tol, note, expect_fail=neg)


def energy_expansion_remainder(params: PacketParams) -> float:
    """|m c v0 - (m c^2 + m v^2 / 2)| / (m v^4 / (8 c^2)); tends to 1 as v/c -> 0."""
    m, c, v = params.m, params.c, params.speed
    if c == 0 or v == 0:
        raise ValueError("needs c > 0 and v > 0")
    return abs(m * c * params.v0 - (m * c * c + 0.5 * m * v * v)) / (m * v ** 4 / (8 * c * c))


__all__ = [
    "NONREL", "REL", "packet_constants", "make_packet", "packet_callable", "time_derivative", "default_points",
    "fd_laplacian", "schrodinger_residual", "schrodinger_fd_convergence", "transport_residual",
    "gauge_laplacian_residual", "modified_evolution_residual", "energy_expansion_remainder",
]
