"""Machine-readable verification reports: versioned JSON plus CSV artifacts.

Numbers are serialized with 12 significant digits so that reruns with an
identical configuration produce byte-identical files (modulo the timestamp
field)."""

import csv
import json
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone

import numpy as np

SCHEMA_VERSION = 1


def sig_round(x: float, sig: int = 12) -> float:
    if not np.isfinite(x):
        return float(x)
    return float(f"{float(x):.{sig}g}")


def jsonable(obj):
    """Recursively convert numpy containers and round floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return sig_round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class CheckResult:
    module: str
    name: str
    passed: bool
    max_residual: float = None
    mean_residual: float = None
    tolerance: float = None
    worst_samples: list = dc_field(default_factory=list)
    detail: str = ""

    def to_dict(self) -> dict:
        out = {"module": self.module, "name": self.name,
               "pass": bool(self.passed)}
        for key in ("max_residual", "mean_residual", "tolerance"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.worst_samples:
            out["worst_samples"] = [int(s) for s in self.worst_samples]
        if self.detail:
            out["detail"] = self.detail
        return out


def worst_ids(values: np.ndarray, count: int = 5) -> list:
    order = np.argsort(values)[::-1][:count]
    return [int(i) for i in order]


def summarize(values: np.ndarray, module: str, name: str, tolerance: float,
              ids: bool = True) -> CheckResult:
    values = np.asarray(values, dtype=float)
    finite = values[np.isfinite(values)]
    worst = float(finite.max()) if len(finite) else 0.0
    mean = float(finite.mean()) if len(finite) else 0.0
    return CheckResult(
        module=module, name=name, passed=worst <= tolerance,
        max_residual=worst, mean_residual=mean, tolerance=tolerance,
        worst_samples=worst_ids(values, 5) if ids and worst > tolerance else [])


def build_report(example: str, config: dict, checks: list,
                 extra: dict = None) -> dict:
    report = {
        "schema": SCHEMA_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "example": example,
        "config": jsonable(config),
        "checks": [jsonable(c.to_dict()) for c in checks],
        "summary": {
            "n_checks": len(checks),
            "n_failed": sum(not c.passed for c in checks),
            "pass": all(c.passed for c in checks),
        },
    }
    if extra:
        report.update(jsonable(extra))
    return report


def write_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def write_csv(path, header: list, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating))
                             else v for v in row])
