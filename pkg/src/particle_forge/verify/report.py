"""Experiment reports: JSON records plus a plain-text summary table."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

__all__ = ["ExperimentReport", "format_table", "reports_to_json"]


def _clean(obj):
    # JSON has no inf/nan; keep them readable as strings
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return _clean(obj.item())
    return obj


@dataclass
class ExperimentReport:
    experiment: str
    passed: bool
    parameters: dict = field(default_factory=dict)
    measured: dict = field(default_factory=dict)
    targets: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    replicas: int | None = None
    runtime: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self, include_runtime: bool = True) -> dict:
        d = _clean(asdict(self))
        if not include_runtime:
            d.pop("runtime")
        return d

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.experiment}"


def reports_to_json(reports: Sequence[ExperimentReport], include_runtime: bool = True) -> str:
    return json.dumps([r.to_dict(include_runtime) for r in reports], indent=2, sort_keys=True) + "\n"


def format_table(reports: Sequence[ExperimentReport], include_runtime: bool = True) -> str:
    rows = [("experiment", "status", "replicas") + (("runtime_s",) if include_runtime else ())]
    for r in reports:
        row = (r.experiment, "PASS" if r.passed else "FAIL",
               "-" if r.replicas is None else str(r.replicas))
        rows.append(row + ((f"{r.runtime:.2f}",) if include_runtime else ()))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
