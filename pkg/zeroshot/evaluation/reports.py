"""
Report files: a JSON document and a flat per-split CSV.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from ..error_handler import FormatError
from .runner import ExperimentReport

REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"


def report_json(report: ExperimentReport, include_runtime: bool = False) -> str:
    return json.dumps(report.to_dict(include_runtime=include_runtime), indent=2, sort_keys=True)


def write_report(report: ExperimentReport, directory: str | Path,
                 include_runtime: bool = False) -> Dict[str, Path]:
    """Write report.json and report.csv into directory; returns their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    json_path = directory / REPORT_JSON
    csv_path = directory / REPORT_CSV
    json_path.write_text(report_json(report, include_runtime) + "\n", encoding="utf-8")
    frame = pd.DataFrame({
        "split_id": [r.split.split_id for r in report.per_split],
        "metric": [r.metric for r in report.per_split],
    })
    frame.to_csv(csv_path, index=False, float_format="%.17g")
    return {"json": json_path, "csv": csv_path}


def read_report(path: str | Path) -> Dict[str, Any]:
    """Load a report.json (or the report.json inside a directory)."""
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_JSON
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not a valid report: {e}") from e
    for key in ("config", "metric", "per_split", "mean", "std"):
        if key not in data:
            raise FormatError(f"{path}: report is missing {key!r}")
    return data
