"""Check records and the machine-readable report assembled from them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def round_sig(x, digits: int = 3):
    """Round to ``digits`` significant digits so reports are stable across BLAS builds."""
    if x is None:
        return None
    x = float(x)
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits - 1}e}")


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    residual: float
    tolerance: float
    verdict: bool
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "anchor": self.anchor,
            "residual": round_sig(self.residual),
            "tolerance": self.tolerance,
            "verdict": "pass" if self.verdict else "fail",
        }
        if self.note:
            out["note"] = self.note
        return out


def check(name, anchor, residual, tolerance, verdict=None, note="") -> Check:
    """Build a record; the verdict defaults to ``residual <= tolerance``."""
    residual = float(residual)
    if verdict is None:
        verdict = residual <= tolerance
    return Check(name, anchor, residual, float(tolerance), bool(verdict), note)


def flag(name, anchor, ok, note="") -> Check:
    """A boolean record (residual 0 on pass, 1 on fail)."""
    return Check(name, anchor, 0.0 if ok else 1.0, 0.0, bool(ok), note)


@dataclass
class Report:
    command: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    timings: dict | None = None

    def extend(self, checks):
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(c.verdict for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.verdict]

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "pass": self.passed,
            "checks": [c.to_dict() for c in sorted(self.checks, key=lambda c: c.name)],
        }
        if self.data:
            out["data"] = self.data
        if self.timings is not None:
            out["timings"] = {k: round(v, 3) for k, v in sorted(self.timings.items())}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for c in sorted(self.checks, key=lambda c: c.name):
            mark = "ok  " if c.verdict else "FAIL"
            lines.append(f"  [{mark}] {c.name}  residual={round_sig(c.residual)}  tol={c.tolerance:g}  ({c.anchor})")
        for key, value in sorted(self.data.items()):
            lines.append(f"  {key}: {json.dumps(value, sort_keys=True)}")
        if self.timings is not None:
            for key, value in sorted(self.timings.items()):
                lines.append(f"  time {key}: {value:.3f}s")
        return "\n".join(lines) + "\n"
