"""Structured experiment reports with deterministic serialization.

Reports echo the configuration, carry every reference value with its
provenance tag, and serialize to JSON plus plot-ready CSV.  Files are
written atomically (temp + rename) and identically for identical
(config, seed) pairs.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from dataclasses import dataclass, field, asdict

import numpy as np


def package_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("interface-lab")
    except PackageNotFoundError:
        return "0.1.0+local"


def commit_id() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


@dataclass(frozen=True)
class Reference:
    """A reference value with its provenance tag."""

    value: float
    provenance: str  # 'paper' | 'trivial' | 'derived'
    note: str = ""

    def __post_init__(self):
        if self.provenance not in ("paper", "trivial", "derived"):
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    points: list = field(default_factory=list)       # list of row dicts
    references: dict = field(default_factory=dict)   # name -> Reference
    slopes: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)       # name -> bool
    wall_clock_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "points": self.points,
            "references": {k: asdict(v) for k, v in self.references.items()},
            "slopes": self.slopes,
            "checks": self.checks,
            "passed": self.passed,
            "wall_clock_s": round(self.wall_clock_s, 3),
            "version": package_version(),
            "commit": commit_id(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2,
                          default=_json_default) + "\n"

    def write_json(self, path):
        atomic_write(path, self.to_json())

    def write_csv(self, path, columns):
        lines = [",".join(columns)]
        for row in self.points:
            lines.append(",".join(_csv_cell(row.get(c)) for c in columns))
        atomic_write(path, "\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def atomic_write(path, text: str):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
