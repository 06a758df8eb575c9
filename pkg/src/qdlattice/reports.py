"""Structured experiment reports with reproducible serialization.

Reports serialize to canonical JSON: keys sorted, floats rounded to 12
significant digits before encoding, no volatile fields (wall time is
printed, never written), so identical configuration and seed give byte
identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    experiment: str
    group: str = "z2"
    lattice: str = ""
    tol: float = 1e-9
    seed: int = 0
    cap: int = 6
    out: Optional[str] = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class Check:
    name: str
    law: str  # the verified law, or "plumbing"
    status: str  # "pass" | "fail"
    max_error: float
    details: str = ""


@dataclass
class Report:
    experiment: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def add(self, name: str, law: str, passed: bool, max_error: float, details: str = ""):
        self.checks.append(
            Check(name, law, "pass" if passed else "fail", float(max_error), details)
        )

    @property
    def all_passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def to_dict(self) -> dict:
        config = {k: v for k, v in self.config.items() if k != "out"}
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "config": config,
            "checks": [asdict(c) for c in self.checks],
            "tables": self.tables,
            "passed": self.all_passed,
        }


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, complex):
        return {"re": float(f"{obj.real:.12g}"), "im": float(f"{obj.imag:.12g}")}
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def report_json(report: Report) -> str:
    return json.dumps(_round_floats(report.to_dict()), sort_keys=True, indent=1) + "\n"


def write_report(report: Report, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(report_json(report))
    base, _ = os.path.splitext(path)
    for name, table in report.tables.items():
        if isinstance(table, dict) and "rows" in table and "columns" in table:
            with open(f"{base}.{name}.csv", "w") as fh:
                fh.write(",".join(str(c) for c in table["columns"]) + "\n")
                for row in table["rows"]:
                    fh.write(",".join(str(_round_floats(v)) for v in row) + "\n")


def schema() -> dict:
    """The published report schema (shipped next to this module)."""
    path = os.path.join(os.path.dirname(__file__), "report_schema.json")
    with open(path) as fh:
        return json.load(fh)


def validate_report(data: dict) -> list[str]:
    """Schema conformance problems (empty list when valid)."""
    problems = []
    for key in ("schema_version", "experiment", "config", "checks", "tables", "passed"):
        if key not in data:
            problems.append(f"missing key {key!r}")
    if problems:
        return problems
    if not isinstance(data["experiment"], str):
        problems.append("experiment must be a string")
    if not isinstance(data["config"], dict):
        problems.append("config must be an object")
    if not isinstance(data["checks"], list):
        problems.append("checks must be a list")
    else:
        for i, c in enumerate(data["checks"]):
            for key in ("name", "law", "status", "max_error"):
                if key not in c:
                    problems.append(f"check {i} missing {key!r}")
            if c.get("status") not in ("pass", "fail"):
                problems.append(f"check {i} has bad status {c.get('status')!r}")
            if not c.get("law"):
                problems.append(f"check {i} must cite a law or 'plumbing'")
    if not isinstance(data["tables"], dict):
        problems.append("tables must be an object")
    return problems


def worker_count() -> int:
    """Worker cap from the QDL_THREADS environment variable (default 1)."""
    try:
        return max(1, int(os.environ.get("QDL_THREADS", "1")))
    except ValueError:
        return 1
