"""Structured, deterministic results of studies and verification suites."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA = "capmod/report/1"


def _plain(x: Any) -> Any:
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


@dataclass
class Check:
    name: str
    expected: Any
    actual: Any
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {k: _plain(v) for k, v in self.__dict__.items()}


@dataclass
class Report:
    """Named checks plus the parameters that produced them.

    ``passed`` is true exactly when every check passed. ``runtime`` is kept
    out of serialised output unless asked for, so identical runs give
    identical bytes.
    """

    scenario: str
    anchor: str = ""
    parameters: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str, passed, expected=None, actual=None, tolerance: float = 0.0) -> bool:
        passed = bool(passed)
        self.checks.append(Check(name, expected, actual, float(tolerance), passed))
        return passed

    def close(self, name: str, actual: float, expected: float, tol: float) -> bool:
        return self.check(name, abs(actual - expected) <= tol, expected, actual, tol)

    def at_most(self, name: str, actual: float, bound: float, tol: float = 0.0) -> bool:
        return self.check(name, actual <= bound + tol, f"<= {_plain(bound)}", actual, tol)

    def extend(self, other: "Report", prefix: str | None = None) -> None:
        pre = f"{prefix or other.scenario}/"
        for c in other.checks:
            self.checks.append(Check(pre + c.name, c.expected, c.actual, c.tolerance, c.passed))

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self, timing: bool = False) -> dict:
        out = {
            "schema": SCHEMA,
            "scenario": self.scenario,
            "anchor": self.anchor,
            "parameters": _plain(self.parameters),
            "checks": [c.as_dict() for c in self.checks],
            "data": _plain(self.data),
            "passed": self.passed,
        }
        if timing:
            out["runtime"] = self.runtime
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.as_dict(timing), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "check", "expected", "actual", "tolerance", "passed"])
        for c in self.checks:
            d = c.as_dict()
            w.writerow([self.scenario, d["name"], json.dumps(d["expected"]), json.dumps(d["actual"]),
                        repr(d["tolerance"]), d["passed"]])
        return buf.getvalue()

    def summary(self) -> str:
        bad = self.failures()
        head = f"{self.scenario}: {'PASS' if self.passed else 'FAIL'} ({len(self.checks) - len(bad)}/{len(self.checks)})"
        return "\n".join([head] + [f"  failed {c.name}: expected {c.expected}, got {c.actual}" for c in bad])
