"""Structured verification reports with deterministic JSON serialization."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

__all__ = ["Check", "Report", "strip_volatile"]


@dataclass
class Check:
    """One verified quantity: computed value vs its target.

    `provenance` names the source of the target (closed form, oracle or
    mesh-extrapolation); `tol` is relative unless `absolute` is set.
    """

    name: str
    value: float
    target: float | None = None
    tol: float | None = None
    absolute: bool = False
    provenance: str = ""

    @property
    def error(self):
        if self.target is None:
            return None
        err = abs(self.value - self.target)
        if self.absolute:
            return err
        scale = max(abs(self.target), 1e-300)
        return err / scale

    @property
    def passed(self):
        if self.target is None or self.tol is None:
            return True
        return self.error <= self.tol

    def as_dict(self):
        out = {
            "name": self.name,
            "value": _num(self.value),
            "provenance": self.provenance,
        }
        if self.target is not None:
            out["target"] = _num(self.target)
            out["error"] = _num(self.error)
            out["tolerance"] = _num(self.tol)
            out["tolerance_kind"] = "absolute" if self.absolute else "relative"
            out["passed"] = bool(self.passed)
        return out


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class Report:
    command: str
    inputs: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)

    def add_check(self, *args, **kwargs):
        c = Check(*args, **kwargs)
        self.checks.append(c)
        return c

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            "command": self.command,
            "inputs": _jsonable(self.inputs),
            "values": _jsonable(self.values),
            "checks": [c.as_dict() for c in self.checks],
            "passed": bool(self.passed),
            "wall_time_s": round(time.perf_counter() - self.started, 3),
        }

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    return str(obj)


def strip_volatile(json_text):
    """Drop wall-time entries so byte-level report comparison tests only
    the deterministic payload."""
    data = json.loads(json_text)

    def scrub(node):
        if isinstance(node, dict):
            node.pop("wall_time_s", None)
            for v in node.values():
                scrub(v)
        elif isinstance(node, list):
            for v in node:
                scrub(v)

    scrub(data)
    return json.dumps(data, indent=2, sort_keys=True)
