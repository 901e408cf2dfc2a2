"""Field representations.

Three backends live here:

* ``ClosedFormField``: an exact finite sum of terms
  ``coeff * r**npow * rhat**dirmono * exp(i*alpha*r) * exp(i*kvec.r)``
  in coordinates measured from ``center``.
* ``RayField``: samples on antipodally paired rays (``RayGrid``).
* ``CartesianField``: samples on a periodic cube, used by the propagator.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .errors import (
    DegreeCapExceeded,
    GridMismatch,
    NonRemovableSingularity,
    OffCenterError,
)

# Default cap on the r-hat monomial degree. Nested Lorentz generators need a
# little more than the quadratic factors that appear in single operators.
MAX_DEGREE = 6
CANCEL_RTOL = 1e-12


# ---------------------------------------------------------------------------
# packet parameters


@dataclass(frozen=True)
class PacketParams:
    """Mass ``m``, speed parameter ``c`` and velocity ``v`` (hbar = 1)."""

    m: float
    c: float
    v: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        v = tuple(float(x) for x in np.asarray(self.v, dtype=float).ravel())
        if len(v) != 3 or not all(math.isfinite(x) for x in v):
            raise ValueError("v must be a finite 3-vector")
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ValueError("m must be positive")
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise ValueError("c must be non-negative")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "c", float(self.c))

    @property
    def speed(self) -> float:
        return math.sqrt(sum(x * x for x in self.v))

    @property
    def v0(self) -> float:
        return math.hypot(self.c, self.speed)

    @property
    def p(self) -> np.ndarray:
        return self.m * np.asarray(self.v)

    @property
    def p0(self) -> float:
        return math.hypot(self.m * self.c, self.m * self.speed)

    @property
    def gamma(self) -> float:
        if not self.speed < self.c:
            raise ValueError("gamma needs |v| < c")
        return 1.0 / math.sqrt(1.0 - (self.speed / self.c) ** 2)

    def to_dict(self) -> dict:
        return {"m": self.m, "c": self.c, "v": list(self.v)}

    @classmethod
    def from_dict(cls, d: dict) -> "PacketParams":
        return cls(m=d["m"], c=d["c"], v=tuple(d.get("v", (0.0, 0.0, 0.0))))


# ---------------------------------------------------------------------------
# r-hat monomials, reduced modulo x^2 + y^2 + z^2 = 1 so that z appears at most
# linearly. Parity of the degree is preserved by the reduction.


@lru_cache(maxsize=None)
def reduce_monomial(mono: tuple) -> tuple:
    """Return ((mono, factor), ...) with every z power at most one."""
    a, b, c = mono
    if c <= 1:
        return ((mono, 1),)
    out: dict = {}
    for sub, fac in (((a, b, c - 2), 1), ((a + 2, b, c - 2), -1), ((a, b + 2, c - 2), -1)):
        for m2, f2 in reduce_monomial(sub):
            out[m2] = out.get(m2, 0) + fac * f2
    return tuple((m, f) for m, f in sorted(out.items()) if f != 0)


def _unit(i: int) -> tuple:
    return tuple(1 if j == i else 0 for j in range(3))


def _madd(m1: tuple, m2: tuple) -> tuple:
    return (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2])


def _kf(x: float) -> float:
    """Normalise a float used in a term key (drops -0.0 and last-bit noise)."""
    x = float(x)
    if x == 0.0:
        return 0.0
    return float(f"{x:.14g}")


class ClosedFormTerm(NamedTuple):
    coeff: complex
    npow: int
    dirmono: tuple
    alpha: float
    kvec: tuple

    @property
    def key(self) -> tuple:
        return (self.npow, self.dirmono, self.alpha, self.kvec)

    @property
    def degree(self) -> int:
        return sum(self.dirmono)

    def sign_definite(self) -> bool:
        return float(np.linalg.norm(self.kvec)) < abs(self.alpha)


def _accumulate(acc: dict, coeff, npow, mono, alpha, kvec):
    for m2, fac in reduce_monomial(tuple(int(x) for x in mono)):
        key = (int(npow), m2, _kf(alpha), tuple(_kf(k) for k in kvec))
        acc[key] = acc.get(key, 0j) + complex(coeff) * fac


class ClosedFormField:
    """Exact sum of closed-form terms (immutable)."""

    __slots__ = ("terms", "center", "max_degree")

    def __init__(self, terms: Iterable = (), center=(0.0, 0.0, 0.0), max_degree: int = MAX_DEGREE,
                 _canonical: bool = False):
        self.center = tuple(float(x) for x in center)
        self.max_degree = max_degree
        if _canonical:
            self.terms = tuple(terms)
        else:
            acc: dict = {}
            for t in terms:
                t = t if isinstance(t, ClosedFormTerm) else ClosedFormTerm(*t)
                _accumulate(acc, t.coeff, t.npow, t.dirmono, t.alpha, t.kvec)
            self.terms = _prune(acc)
        for t in self.terms:
            if t.degree > self.max_degree:
                raise DegreeCapExceeded(f"r-hat degree {t.degree} exceeds cap {self.max_degree}")

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_acc(cls, acc: dict, like: "ClosedFormField") -> "ClosedFormField":
        return cls(_prune(acc), center=like.center, max_degree=like.max_degree, _canonical=True)

    @classmethod
    def plane_wave(cls, kvec, coeff=1.0, center=(0.0, 0.0, 0.0)) -> "ClosedFormField":
        return cls([ClosedFormTerm(coeff, 0, (0, 0, 0), 0.0, tuple(kvec))], center=center)

    @classmethod
    def radial_wave(cls, alpha, npow=0, coeff=1.0, kvec=(0.0, 0.0, 0.0)) -> "ClosedFormField":
        return cls([ClosedFormTerm(coeff, npow, (0, 0, 0), alpha, tuple(kvec))])

    @classmethod
    def zero(cls, like: "ClosedFormField | None" = None) -> "ClosedFormField":
        if like is None:
            return cls(())
        return cls((), center=like.center, max_degree=like.max_degree)

    # -- algebra --------------------------------------------------------------
    def _acc(self) -> dict:
        return {t.key: t.coeff for t in self.terms}

    def _same_center(self, other: "ClosedFormField"):
        if not np.allclose(self.center, other.center, rtol=0, atol=1e-14):
            raise ValueError("fields have different centres")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = ClosedFormField([ClosedFormTerm(other, 0, (0, 0, 0), 0.0, (0.0, 0.0, 0.0))], center=self.center)
        self._same_center(other)
        acc = self._acc()
        for t in other.terms:
            acc[t.key] = acc.get(t.key, 0j) + t.coeff
        # coefficients that cancel to rounding level relative to the operands are zero
        ref = max([abs(t.coeff) for t in self.terms + other.terms] or [0.0])
        acc = {k: c for k, c in acc.items() if abs(c) > CANCEL_RTOL * ref}
        return ClosedFormField._from_acc(acc, self)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        if isinstance(s, ClosedFormField):
            return self.product(s)
        s = complex(s)
        return ClosedFormField([t._replace(coeff=t.coeff * s) for t in self.terms], center=self.center,
                               max_degree=self.max_degree, _canonical=s != 0)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / complex(s))

    def __eq__(self, other):
        if not isinstance(other, ClosedFormField):
            return NotImplemented
        return self.center == other.center and self.terms == other.terms

    def __hash__(self):
        return hash((self.center, self.terms))

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        body = " + ".join(
            f"({t.coeff:.6g})r^{t.npow}rhat^{t.dirmono}e^(i{t.alpha:.6g}r)e^(ik.{t.kvec})" for t in self.terms
        )
        return f"ClosedFormField[{body or '0'}]"

    def is_zero(self) -> bool:
        return not self.terms

    def scale(self) -> float:
        return max((abs(t.coeff) for t in self.terms), default=0.0)

    def product(self, other: "ClosedFormField") -> "ClosedFormField":
        self._same_center(other)
        acc: dict = {}
        for t in self.terms:
            for u in other.terms:
                _accumulate(acc, t.coeff * u.coeff, t.npow + u.npow, _madd(t.dirmono, u.dirmono),
                            t.alpha + u.alpha, np.add(t.kvec, u.kvec))
        return ClosedFormField._from_acc(acc, self)

    def conj(self) -> "ClosedFormField":
        return ClosedFormField(
            [ClosedFormTerm(np.conj(t.coeff), t.npow, t.dirmono, -t.alpha, tuple(-k for k in t.kvec)) for t in self.terms],
            center=self.center, max_degree=self.max_degree)

    def shifted(self, center) -> "ClosedFormField":
        """Same terms, measured from a new centre."""
        return ClosedFormField(self.terms, center=center, max_degree=self.max_degree, _canonical=True)

    # -- multiplications by coordinate functions ------------------------------
    def mul_r(self, power: int = 1) -> "ClosedFormField":
        self.require_origin("multiply by r")
        return self._mul_rpow(power)

    def _mul_rpow(self, power: int) -> "ClosedFormField":
        return ClosedFormField([t._replace(npow=t.npow + power) for t in self.terms], center=self.center,
                               max_degree=self.max_degree, _canonical=True)

    def mul_rhat(self, i: int) -> "ClosedFormField":
        self.require_origin("multiply by rhat")
        return self._mul_rhat(i)

    def _mul_rhat(self, i: int) -> "ClosedFormField":
        acc: dict = {}
        for t in self.terms:
            _accumulate(acc, t.coeff, t.npow, _madd(t.dirmono, _unit(i)), t.alpha, t.kvec)
        return ClosedFormField._from_acc(acc, self)

    def mul_coord(self, i: int) -> "ClosedFormField":
        """Multiply by the Cartesian coordinate x_i of the lab frame."""
        out = self._mul_rhat(i)._mul_rpow(1)
        if self.center[i] != 0.0:
            out = out + self * self.center[i]
        return out

    def require_origin(self, what: str = "radial operator"):
        if any(c != 0.0 for c in self.center):
            raise OffCenterError(f"{what} needs a field centred at the origin; centre is {self.center}")

    # -- derivatives ----------------------------------------------------------
    def grad(self) -> list:
        """Gradient components [d/dx, d/dy, d/dz]."""
        accs = [dict(), dict(), dict()]
        for t in self.terms:
            n, mono, al, k = t.npow, t.dirmono, t.alpha, t.kvec
            deg = sum(mono)
            for i in range(3):
                acc = accs[i]
                ei = _unit(i)
                # d/dx_i r^n = n r^(n-1) rhat_i ; d/dx_i e^{i alpha r} = i alpha rhat_i ...
                if n != 0:
                    _accumulate(acc, t.coeff * n, n - 1, _madd(mono, ei), al, k)
                if al != 0.0:
                    _accumulate(acc, t.coeff * 1j * al, n, _madd(mono, ei), al, k)
                if k[i] != 0.0:
                    _accumulate(acc, t.coeff * 1j * k[i], n, mono, al, k)
                # d/dx_i rhat^mu = (mu_i rhat^(mu - e_i) - |mu| rhat^(mu + e_i)) / r
                if mono[i] > 0:
                    down = tuple(m - (1 if j == i else 0) for j, m in enumerate(mono))
                    _accumulate(acc, t.coeff * mono[i], n - 1, down, al, k)
                if deg > 0:
                    _accumulate(acc, -t.coeff * deg, n - 1, _madd(mono, ei), al, k)
        return [ClosedFormField._from_acc(a, self) for a in accs]

    def grad_i(self, i: int) -> "ClosedFormField":
        return self.grad()[i]

    def laplacian(self) -> "ClosedFormField":
        g = self.grad()
        return g[0].grad()[0] + g[1].grad()[1] + g[2].grad()[2]

    def d_r(self) -> "ClosedFormField":
        """Radial derivative rhat . grad (about the field centre)."""
        acc: dict = {}
        for t in self.terms:
            n, mono, al, k = t.npow, t.dirmono, t.alpha, t.kvec
            if n != 0:
                _accumulate(acc, t.coeff * n, n - 1, mono, al, k)
            if al != 0.0:
                _accumulate(acc, t.coeff * 1j * al, n, mono, al, k)
            for i in range(3):
                if k[i] != 0.0:
                    _accumulate(acc, t.coeff * 1j * k[i], n, _madd(mono, _unit(i)), al, k)
        return ClosedFormField._from_acc(acc, self)

    def euler(self) -> "ClosedFormField":
        """x . grad about the centre, i.e. r d_r."""
        return self.d_r()._mul_rpow(1)

    # -- evaluation -----------------------------------------------------------
    def evaluate(self, points) -> np.ndarray:
        """Evaluate at points of shape (..., 3). Points at the centre use the analytic limit."""
        pts = np.asarray(points, dtype=float)
        x = pts - np.asarray(self.center)
        r = np.linalg.norm(x, axis=-1)
        at0 = r == 0
        rs = np.where(at0, 1.0, r)
        rhat = x / rs[..., None]
        out = np.zeros(r.shape, dtype=complex)
        for t in self.terms:
            a, b, c = t.dirmono
            val = t.coeff * rs ** t.npow
            if a:
                val = val * rhat[..., 0] ** a
            if b:
                val = val * rhat[..., 1] ** b
            if c:
                val = val * rhat[..., 2] ** c
            phase = t.alpha * rs + x @ np.asarray(t.kvec)
            out += val * np.exp(1j * phase)
        if np.any(at0):
            out[at0] = self.limit_at_center()
        return out

    __call__ = evaluate

    def limit_at_center(self, ndir: int = 7) -> complex:
        """Finite limit at the centre, or NonRemovableSingularity."""
        rng = np.random.default_rng(12345)
        dirs = rng.normal(size=(ndir, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        scale = max(self.scale(), 1e-300)
        vals = []
        for d in dirs:
            sing = 0j
            lim = 0j
            for t in self.terms:
                mval = np.prod(d ** np.asarray(t.dirmono))
                if t.npow < -1:
                    if abs(t.coeff) > 0:
                        sing += np.inf
                    continue
                if t.npow == -1:
                    sing += t.coeff * mval
                    lim += t.coeff * mval * 1j * (t.alpha + float(np.dot(t.kvec, d)))
                elif t.npow == 0:
                    lim += t.coeff * mval
            if not abs(sing) <= 1e-12 * scale:
                raise NonRemovableSingularity("field is singular at the centre")
            vals.append(lim)
        vals = np.asarray(vals)
        if np.max(np.abs(vals - vals[0])) > 1e-10 * max(scale, np.max(np.abs(vals))):
            raise NonRemovableSingularity("limit at the centre depends on direction")
        return complex(vals.mean())

    # -- serialisation ---------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "terms": [
                {"coeff": [t.coeff.real, t.coeff.imag], "npow": t.npow, "dirmono": list(t.dirmono),
                 "alpha": t.alpha, "kvec": list(t.kvec)}
                for t in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClosedFormField":
        terms = [ClosedFormTerm(complex(*t["coeff"]), t["npow"], tuple(t["dirmono"]), t["alpha"], tuple(t["kvec"]))
                 for t in d["terms"]]
        return cls(terms, center=d.get("center", (0, 0, 0)))


def _prune(acc: dict) -> tuple:
    if not acc:
        return ()
    big = max(abs(c) for c in acc.values())
    cut = 4 * np.finfo(float).eps * big
    terms = [ClosedFormTerm(complex(c), *key) for key, c in acc.items() if abs(c) > cut]
    terms.sort(key=lambda t: (t.alpha, t.kvec, t.npow, t.dirmono))
    return tuple(terms)


def canonicalize(f: ClosedFormField) -> ClosedFormField:
    """Merge equal keys, reduce monomials, drop zero terms and sort."""
    return ClosedFormField(f.terms, center=f.center, max_degree=f.max_degree)


# ---------------------------------------------------------------------------
# ray grids


@dataclass(frozen=True)
class RayGrid:
    """Gauss-Legendre(theta) x uniform(phi) directions times a radial rule.

    ``radial='midpoint'`` puts nodes at (j + 1/2) h with h = R / n_r; this is the
    rule the spectral per-ray transforms need (with R = sqrt(pi n_r)).
    ``radial='gauss'`` maps Gauss-Legendre nodes onto (0, R].
    """

    n_theta: int = 16
    n_phi: int = 32
    n_r: int = 2048
    R: float | None = None
    radial: str = "midpoint"
    taper: float = 0.0

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 2 or self.n_phi % 2:
            raise ValueError("need n_theta >= 1 and an even n_phi")
        if self.radial not in ("midpoint", "gauss"):
            raise ValueError("radial must be 'midpoint' or 'gauss'")
        if self.R is None:
            object.__setattr__(self, "R", math.sqrt(math.pi * self.n_r))
        if not self.R > 0:
            raise ValueError("R must be positive")

    @classmethod
    def spectral(cls, n_r: int, n_theta: int = 16, n_phi: int = 32) -> "RayGrid":
        """Self-dual midpoint grid: h = sqrt(pi / n_r)."""
        return cls(n_theta=n_theta, n_phi=n_phi, n_r=n_r, R=math.sqrt(math.pi * n_r), radial="midpoint")

    @cached_property
    def _theta(self):
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        return x[::-1].copy(), w[::-1].copy()  # cos(theta) decreasing -> theta increasing

    @property
    def cos_theta(self) -> np.ndarray:
        return self._theta[0]

    @property
    def theta(self) -> np.ndarray:
        return np.arccos(self._theta[0])

    @property
    def phi(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def ndir(self) -> int:
        return self.n_theta * self.n_phi

    @cached_property
    def directions(self) -> np.ndarray:
        ct = self.cos_theta
        st = np.sqrt(1 - ct ** 2)
        ph = self.phi
        d = np.stack(
            [np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)), np.outer(ct, np.ones_like(ph))], axis=-1
        )
        return d.reshape(-1, 3)

    @cached_property
    def dir_angles(self) -> np.ndarray:
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.stack([th.ravel(), ph.ravel()], axis=-1)

    @cached_property
    def dir_weights(self) -> np.ndarray:
        return np.outer(self._theta[1], np.full(self.n_phi, 2 * np.pi / self.n_phi)).ravel()

    @cached_property
    def antipode(self) -> np.ndarray:
        it, ip = np.divmod(np.arange(self.ndir), self.n_phi)
        return (self.n_theta - 1 - it) * self.n_phi + (ip + self.n_phi // 2) % self.n_phi

    @cached_property
    def _radial(self):
        if self.radial == "midpoint":
            h = self.R / self.n_r
            return (np.arange(self.n_r) + 0.5) * h, np.full(self.n_r, h)
        x, w = np.polynomial.legendre.leggauss(self.n_r)
        return self.R * (x + 1) / 2, self.R * w / 2

    @property
    def radii(self) -> np.ndarray:
        return self._radial[0]

    @property
    def radial_weights(self) -> np.ndarray:
        return self._radial[1]

    @property
    def h(self) -> float:
        return self.R / self.n_r

    @property
    def is_self_dual(self) -> bool:
        return self.radial == "midpoint" and abs(self.h ** 2 * self.n_r - math.pi) < 1e-12

    def points(self) -> np.ndarray:
        """Node coordinates, shape (ndir, n_r, 3)."""
        return self.directions[:, None, :] * self.radii[None, :, None]

    def weights(self) -> np.ndarray:
        """Volume quadrature weights (ndir, n_r) including r^2."""
        return self.dir_weights[:, None] * (self.radial_weights * self.radii ** 2)[None, :]

    def to_dict(self) -> dict:
        return {"n_theta": self.n_theta, "n_phi": self.n_phi, "n_r": self.n_r, "R": self.R,
                "radial": self.radial, "taper": self.taper}


@dataclass(frozen=True, eq=False)
class RayField:
    grid: RayGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.ndir, self.grid.n_r):
            raise GridMismatch(f"values shape {v.shape} does not match grid {(self.grid.ndir, self.grid.n_r)}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other: "RayField"):
        if self.grid != other.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, RayField):
            self._check(other)
            return RayField(self.grid, self.values + other.values)
        return RayField(self.grid, self.values + other)

    def __sub__(self, other):
        if isinstance(other, RayField):
            self._check(other)
            return RayField(self.grid, self.values - other.values)
        return RayField(self.grid, self.values - other)

    def __mul__(self, s):
        if isinstance(s, RayField):
            self._check(s)
            return RayField(self.grid, self.values * s.values)
        return RayField(self.grid, self.values * s)

    __rmul__ = __mul__

    def __neg__(self):
        return RayField(self.grid, -self.values)

    def map_radial(self, fn) -> "RayField":
        return RayField(self.grid, fn(self.grid.radii)[None, :] * self.values)


def l2_norm(f: RayField) -> float:
    return float(np.sqrt(np.sum(f.grid.weights() * np.abs(f.values) ** 2)))


def l2_diff(f: RayField, g: RayField) -> float:
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    return l2_norm(f - g)


def inner(f: RayField, g: RayField) -> complex:
    """<f|g> with the volume weights."""
    if f.grid != g.grid:
        raise GridMismatch("fields live on different grids")
    return complex(np.sum(f.grid.weights() * np.conj(f.values) * g.values))


# ---------------------------------------------------------------------------
# Cartesian boxes


@dataclass(frozen=True, eq=False)
class CartesianField:
    L: float
    N: int
    values: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two")
        v = np.asarray(self.values)
        if v.shape != (self.N,) * 3:
            raise GridMismatch("values must have shape (N, N, N)")

    @staticmethod
    def axis(L: float, N: int) -> np.ndarray:
        return -L / 2 + L * np.arange(N) / N

    @property
    def dx(self) -> float:
        return self.L / self.N

    def coords(self):
        x = self.axis(self.L, self.N)
        return np.meshgrid(x, x, x, indexing="ij", sparse=True)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.dx ** 3))

    def export(self, path: str):
        """Binary row-major complex64 samples plus a JSON sidecar."""
        np.ascontiguousarray(self.values, dtype=np.complex64).tofile(path)
        side = {"L": self.L, "N": self.N, "t": self.t, "dtype": "complex64", "order": "C"}
        side.update(self.meta)
        with open(path + ".json", "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "CartesianField":
        with open(path + ".json") as fh:
            side = json.load(fh)
        n = side["N"]
        vals = np.fromfile(path, dtype=np.complex64).reshape(n, n, n)
        meta = {k: v for k, v in side.items() if k not in ("L", "N", "t", "dtype", "order")}
        return cls(side["L"], n, vals.astype(complex), side["t"], meta)


def sample(f: ClosedFormField, geometry, t: float = 0.0):
    """Evaluate a closed-form field on a RayGrid or on a Cartesian box.

    ``geometry`` is a RayGrid, or a tuple (L, N) for a periodic box with the
    origin at its centre.
    """
    if isinstance(geometry, RayGrid):
        return RayField(geometry, f.evaluate(geometry.points()))
    L, N = geometry
    x = CartesianField.axis(L, N)
    vals = np.empty((N, N, N), dtype=complex)
    yy, zz = np.meshgrid(x, x, indexing="ij")
    for i, xi in enumerate(x):
        pts = np.stack([np.full_like(yy, xi), yy, zz], axis=-1)
        vals[i] = f.evaluate(pts)
    return CartesianField(L, N, vals, t)


def export_csv(f: RayField, path: str):
    """Columns: dir_index, theta, phi, r, re, im."""
    g = f.grid
    ang = g.dir_angles
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dir_index", "theta", "phi", "r", "re", "im"])
        for d in range(g.ndir):
            for j, r in enumerate(g.radii):
                v = f.values[d, j]
                w.writerow([d, repr(float(ang[d, 0])), repr(float(ang[d, 1])), repr(float(r)),
                            repr(float(v.real)), repr(float(v.imag))])


def random_ray_field(grid: RayGrid, seed: int = 0) -> RayField:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(grid.ndir, grid.n_r)) + 1j * rng.normal(size=(grid.ndir, grid.n_r))
    return RayField(grid, v)


__all__ = [
    "PacketParams", "ClosedFormTerm", "ClosedFormField", "RayGrid", "RayField", "CartesianField",
    "canonicalize", "sample", "l2_norm", "l2_diff", "inner", "export_csv", "reduce_monomial",
    "random_ray_field", "MAX_DEGREE",
]
