"""Structured residual records shared by the checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _plain(x: Any):
    """Convert numpy scalars/arrays and complex numbers to JSON-friendly values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


@dataclass
class CheckReport:
    """One residual check. ``passed`` is always ``residual <= tolerance``.

    ``expect_fail`` marks negative tests: they demonstrate that a tolerance is
    not vacuous, and they succeed when ``passed`` is False.
    """

    check_id: str
    residual: float
    tolerance: float
    params: dict = field(default_factory=dict)
    convergence_order: float | None = None
    notes: str = ""
    expect_fail: bool = False

    def __post_init__(self):
        self.residual = float(self.residual)
        self.tolerance = float(self.tolerance)
        if not self.tolerance >= 0:
            raise ValueError("tolerance must be non-negative")

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    @property
    def ok(self) -> bool:
        """True when the outcome is the expected one (negative tests must fail)."""
        return self.passed != self.expect_fail

    def to_dict(self) -> dict:
        return _plain({
            "check_id": self.check_id,
            "params": self.params,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "convergence_order": self.convergence_order,
            "pass": self.passed,
            "notes": self.notes,
            "negative_test": self.expect_fail,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(check_id=d["check_id"], residual=float(d["residual"]), tolerance=float(d["tolerance"]),
                   params=d.get("params", {}), convergence_order=d.get("convergence_order"),
                   notes=d.get("notes", ""), expect_fail=bool(d.get("negative_test", False)))


def observed_order(errors, steps) -> float | None:
    """Least-squares slope of log(error) against log(step)."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(steps, dtype=float)
    keep = (e > 0) & np.isfinite(e)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0])


def table(reports) -> str:
    """Fixed-width text table of reports."""
    rows = [("check", "residual", "tolerance", "order", "result")]
    for r in reports:
        order = "-" if r.convergence_order is None else f"{r.convergence_order:.2f}"
        if r.expect_fail:
            result = "fail (expected)" if not r.passed else "PASS (unexpected)"
        else:
            result = "pass" if r.passed else "FAIL"
        rows.append((r.check_id, f"{r.residual:.3e}", f"{r.tolerance:.3e}", order, result))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


__all__ = ["CheckReport", "observed_order", "table"]
