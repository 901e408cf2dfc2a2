"""Operator expressions and the momentum, boost and rotation operators.

Expressions are immutable trees over primitive maps. ``A @ B`` composes as
written (B acts first), ``A + B`` and ``c * A`` are linear combinations, and
``bracket(A, B)`` is A B - B A. Each tree serialises to a compact JSON prefix
form, e.g. ``["compose", ["r", -1], "SigmaInv", ["r", 1]]``.

An expression applies to any of the field backends:

* ``ClosedFormField``: exact term algebra (the oracle),
* ``pointwise.FieldFunction``: nested ray quadrature at single points,
* ``line.LineExpr``: whole-line panel quadrature, the fast numeric path,
* ``RayField``: ray samples, radial maps only (no angular derivatives).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import line as _line
from . import pointwise as _pw
from . import transforms as _tr
from .fields import ClosedFormField, RayField

PRIMITIVES = ("id", "r", "rhat", "x", "d_r", "grad", "lap", "Sigma", "SigmaInv", "H+", "H-", "He", "Ho", "P")
_INDEXED = ("rhat", "x", "grad")


class OperatorExpr:
    """Base class; use the constructors below rather than instantiating nodes."""

    def __matmul__(self, other: "OperatorExpr") -> "OperatorExpr":
        return Compose((self, other))

    def __add__(self, other: "OperatorExpr") -> "OperatorExpr":
        return Sum((self, other))

    def __sub__(self, other: "OperatorExpr") -> "OperatorExpr":
        return Sum((self, Scale(-1.0, other)))

    def __neg__(self) -> "OperatorExpr":
        return Scale(-1.0, self)

    def __rmul__(self, c) -> "OperatorExpr":
        if isinstance(c, (int, float, complex, np.number)):
            return Scale(complex(c), self)
        return NotImplemented

    __mul__ = __rmul__

    def __call__(self, f):
        return apply(self, f)

    def to_json(self) -> str:
        return json.dumps(self.prefix())

    def prefix(self):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Prim(OperatorExpr):
    name: str
    arg: int | None = None

    def __post_init__(self):
        if self.name not in PRIMITIVES:
            raise ValueError(f"unknown primitive {self.name!r}")
        if self.name in _INDEXED and self.arg not in (0, 1, 2):
            raise ValueError(f"{self.name} needs an index 0, 1 or 2")
        if self.name == "r" and not isinstance(self.arg, int):
            raise ValueError("r needs an integer power")

    def prefix(self):
        return self.name if self.arg is None else [self.name, self.arg]

    def __repr__(self):
        return self.name if self.arg is None else f"{self.name}[{self.arg}]"


@dataclass(frozen=True)
class Scale(OperatorExpr):
    c: complex
    op: OperatorExpr

    def prefix(self):
        c = complex(self.c)
        return ["scale", c.real if c.imag == 0 else [c.real, c.imag], self.op.prefix()]

    def __repr__(self):
        return f"({self.c}) {self.op!r}"


@dataclass(frozen=True)
class Compose(OperatorExpr):
    ops: tuple

    def prefix(self):
        return ["compose", *(o.prefix() for o in self.ops)]

    def __repr__(self):
        return " ".join(repr(o) for o in self.ops)


@dataclass(frozen=True)
class Sum(OperatorExpr):
    ops: tuple

    def prefix(self):
        return ["add", *(o.prefix() for o in self.ops)]

    def __repr__(self):
        return "(" + " + ".join(repr(o) for o in self.ops) + ")"


@dataclass(frozen=True)
class Named(OperatorExpr):
    """A named operator (p, K, ...) that keeps its name in the prefix form."""

    name: str
    args: tuple
    body: OperatorExpr

    def prefix(self):
        return [self.name, *self.args] if self.args else self.name

    def __repr__(self):
        return f"{self.name}{list(self.args) if self.args else ''}"


def bracket(A: OperatorExpr, B: OperatorExpr) -> OperatorExpr:
    """[A, B] = A B - B A."""
    return A @ B - B @ A


# ---------------------------------------------------------------------------
# primitive constructors

ID = Prim("id")
D_R = Prim("d_r")
LAP = Prim("lap")
SIGMA = Prim("Sigma")
SIGMA_INV = Prim("SigmaInv")
H_PLUS = Prim("H+")
H_MINUS = Prim("H-")
H_EVEN = Prim("He")
H_ODD = Prim("Ho")
PARITY = Prim("P")


def r(power: int = 1) -> Prim:
    return Prim("r", int(power))


def rhat(i: int) -> Prim:
    return Prim("rhat", int(i))


def x(i: int) -> Prim:
    return Prim("x", int(i))


def grad(i: int) -> Prim:
    return Prim("grad", int(i))


# ---------------------------------------------------------------------------
# named operators


def a0_op() -> OperatorExpr:
    """a0 = -1/2 r lap."""
    return Named("a0", (), -0.5 * (r(1) @ LAP))


def a_op(i: int) -> OperatorExpr:
    """a_i = -(d_r r) grad_i + 1/2 x_i lap."""
    return Named("a", (i,), -1.0 * (D_R @ r(1) @ grad(i)) + 0.5 * (x(i) @ LAP))


def p_op(i: int, m: float = 1.0, c: float = 1.0) -> OperatorExpr:
    """p_i = (1/r) SigmaInv (-1/2 m^2 c^2 x_i + a_i) r."""
    inner = -0.5 * m * m * c * c * x(i) + a_op(i)
    return Named("p", (i, m, c), r(-1) @ SIGMA_INV @ inner @ r(1))


def p0_op(m: float = 1.0, c: float = 1.0, order: str = "as_written") -> OperatorExpr:
    """p0 = -i (1/r) H+ SigmaInv (1/2 m^2 c^2 r + a0) r.

    ``order="commuted"`` places SigmaInv to the left of H+. The two agree on
    the packets; only the commuted form satisfies the boost brackets on
    generic fields.
    """
    inner = 0.5 * m * m * c * c * r(1) + a0_op()
    if order == "as_written":
        body = -1j * (r(-1) @ H_PLUS @ SIGMA_INV @ inner @ r(1))
    elif order == "commuted":
        body = -1j * (r(-1) @ SIGMA_INV @ H_PLUS @ inner @ r(1))
    else:
        raise ValueError("order must be 'as_written' or 'commuted'")
    return Named("p0", (m, c, order), body)


def boost_op(i: int) -> OperatorExpr:
    """K_i = -grad_i H- r."""
    return Named("K", (i,), -1.0 * (grad(i) @ H_MINUS @ r(1)))


def rotation_op(i: int) -> OperatorExpr:
    """J_i = -i (r x grad)_i."""
    j, k = (i + 1) % 3, (i + 2) % 3
    return Named("J", (i,), -1j * (x(j) @ grad(k) - x(k) @ grad(j)))


def pi_op(i: int) -> OperatorExpr:
    """The usual momentum -i grad_i."""
    return Named("pi", (i,), -1j * grad(i))


def time_position_op() -> OperatorExpr:
    """i H- r, the partner of the position vector under boosts."""
    return Named("t4", (), 1j * (H_MINUS @ r(1)))


def a0_part_op() -> OperatorExpr:
    """-(i/r) H+ a0 r, the mass-independent part of p0 with the outer (1/r) SigmaInv r removed."""
    return Named("a0part", (), -1j * (r(-1) @ H_PLUS @ a0_op() @ r(1)))


def a_part_op(i: int) -> OperatorExpr:
    """(1/r) a_i r."""
    return Named("apart", (i,), r(-1) @ a_op(i) @ r(1))


def sigma_conj_op() -> OperatorExpr:
    """(1/r) SigmaInv r, which commutes with the boosts."""
    return Named("SigmaInvConj", (), r(-1) @ SIGMA_INV @ r(1))


_NAMED: dict[str, Callable] = {
    "a0": a0_op, "a": a_op, "p": p_op, "p0": p0_op, "K": boost_op, "J": rotation_op, "pi": pi_op,
    "t4": time_position_op, "a0part": a0_part_op, "apart": a_part_op, "SigmaInvConj": sigma_conj_op,
}


def from_prefix(obj) -> OperatorExpr:
    """Inverse of ``OperatorExpr.prefix``; also accepts a JSON string."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError:
            pass
    if isinstance(obj, str):
        if obj in PRIMITIVES:
            return Prim(obj)
        if obj in _NAMED:
            return _NAMED[obj]()
        raise ValueError(f"unknown operator {obj!r}")
    if not isinstance(obj, list) or not obj:
        raise ValueError(f"malformed operator expression {obj!r}")
    head, rest = obj[0], obj[1:]
    if head == "compose":
        return Compose(tuple(from_prefix(o) for o in rest))
    if head == "add":
        return Sum(tuple(from_prefix(o) for o in rest))
    if head == "scale":
        c = rest[0]
        c = complex(*c) if isinstance(c, list) else complex(c)
        return Scale(c, from_prefix(rest[1]))
    if head in PRIMITIVES:
        return Prim(head, *rest)
    if head in _NAMED:
        return _NAMED[head](*rest)
    raise ValueError(f"unknown operator {head!r}")


# ---------------------------------------------------------------------------
# backends


def _closed_prim(p: Prim, f: ClosedFormField):
    n, a = p.name, p.arg
    if n == "id":
        return f
    if n == "r":
        return f.mul_r(a)
    if n == "rhat":
        return f.mul_rhat(a)
    if n == "x":
        return f.mul_coord(a)
    if n == "d_r":
        return f.d_r()
    if n == "grad":
        return f.grad_i(a)
    if n == "lap":
        return f.laplacian()
    return _radial_prim(p, f)


def _radial_prim(p: Prim, f):
    n = p.name
    if n == "Sigma":
        return _tr.dilation(f)
    if n == "SigmaInv":
        return _tr.dilation_inv(f)
    if n == "H+":
        return _tr.hilbert_pm(1, f)
    if n == "H-":
        return _tr.hilbert_pm(-1, f)
    if n == "He":
        return _tr.hilbert_even(f)
    if n == "Ho":
        return _tr.hilbert_odd(f)
    if n == "P":
        return _tr.parity(f)
    raise ValueError(n)


def _pointwise_prim(p: Prim, f):
    n, a = p.name, p.arg
    table = {
        "id": lambda: f, "r": lambda: _pw.mul_r(f, a), "rhat": lambda: _pw.mul_rhat(f, a),
        "x": lambda: _pw.mul_coord(f, a), "d_r": lambda: _pw.mul_r(_pw.euler(f), -1),
        "grad": lambda: _pw.grad(f, a), "lap": lambda: _pw.laplacian(f),
    }
    if n in table:
        return table[n]()
    return _radial_prim(p, f)


_LINE_HILBERT = {"H+": "plus", "H-": "minus", "He": "even", "Ho": "odd"}


def _line_prim(p: Prim, f):
    n, a = p.name, p.arg
    L = _line
    table = {
        "id": lambda: f, "r": lambda: L.mul_r(f, a), "rhat": lambda: L.mul_rhat(f, a),
        "x": lambda: L.mul_coord(f, a), "d_r": lambda: L.d_r(f), "grad": lambda: L.grad(f, a),
        "lap": lambda: L.laplacian(f), "Sigma": lambda: L.dilation(f), "SigmaInv": lambda: L.dilation_inv(f),
        "P": lambda: L.parity(f),
    }
    if n in table:
        return table[n]()
    return L.hilbert(f, _LINE_HILBERT[n])


def _ray_prim(p: Prim, f: RayField):
    n, a = p.name, p.arg
    if n == "id":
        return f
    if n == "r":
        return f.map_radial(lambda rr: rr ** a)
    if n in ("rhat", "x"):
        d = f.grid.directions[:, a][:, None]
        out = RayField(f.grid, f.values * d)
        return out if n == "rhat" else out.map_radial(lambda rr: rr)
    if n == "d_r":
        return _tr.radial_derivative(f)
    if n in ("grad", "lap"):
        raise TypeError("angular derivatives need the pointwise or line backend")
    return _radial_prim(p, f)


def _backend(f):
    if isinstance(f, ClosedFormField):
        return _closed_prim
    if isinstance(f, _line.LineExpr):
        return _line_prim
    if isinstance(f, _pw.FieldFunction):
        return _pointwise_prim
    if isinstance(f, RayField):
        return _ray_prim
    raise TypeError(f"unsupported field type {type(f).__name__}")


def apply(op: OperatorExpr, f):
    """Apply an expression; the backend follows the type of f."""
    prim = _backend(f)

    def go(o, g):
        if isinstance(o, Prim):
            return prim(o, g)
        if isinstance(o, Named):
            return go(o.body, g)
        if isinstance(o, Scale):
            c = complex(o.c)
            return go(o.op, g) if c == 1 else c * go(o.op, g)
        if isinstance(o, Compose):
            for inner in reversed(o.ops):
                g = go(inner, g)
            return g
        if isinstance(o, Sum):
            out = None
            for inner in o.ops:
                h = go(inner, g)
                out = h if out is None else out + h
            return out
        raise TypeError(f"not an operator expression: {o!r}")

    return go(op, f)


def apply_a0(f):
    return apply(a0_op(), f)


def apply_a(f) -> list:
    return [apply(a_op(i), f) for i in range(3)]


def apply_p_tilde(f, m: float = 1.0, c: float = 1.0) -> list:
    return [apply(p_op(i, m, c), f) for i in range(3)]


def apply_p0_tilde(f, m: float = 1.0, c: float = 1.0, order: str = "as_written"):
    return apply(p0_op(m, c, order), f)


def apply_boost(f) -> list:
    return [apply(boost_op(i), f) for i in range(3)]


def apply_rotation(f) -> list:
    return [apply(rotation_op(i), f) for i in range(3)]


def apply_pi(f) -> list:
    return [apply(pi_op(i), f) for i in range(3)]


__all__ = [
    "OperatorExpr", "Prim", "Scale", "Compose", "Sum", "Named", "PRIMITIVES", "bracket", "from_prefix", "apply",
    "ID", "D_R", "LAP", "SIGMA", "SIGMA_INV", "H_PLUS", "H_MINUS", "H_EVEN", "H_ODD", "PARITY",
    "r", "rhat", "x", "grad", "a0_op", "a_op", "p_op", "p0_op", "boost_op", "rotation_op", "pi_op",
    "time_position_op", "a0_part_op", "a_part_op", "sigma_conj_op",
    "apply_a0", "apply_a", "apply_p_tilde", "apply_p0_tilde", "apply_boost", "apply_rotation", "apply_pi",
]
