"""
Hyperparameter sweeps with resumable cells.

Every grid cell is one full experiment; its report lives under
``cells/<hash>/report.json`` where the hash covers the resolved cell config,
so rerunning a sweep skips cells that already finished.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Sequence

import pandas as pd
import structlog

from .config import RunConfig, check_gamma_a, validate_run_config
from .error_handler import ConfigError, ParameterError
from .evaluation.reports import REPORT_JSON, read_report, write_report
from .evaluation.runner import ExperimentReport

logger = structlog.get_logger(__name__)

# grid name -> (config section, key, type)
SWEEP_PARAMETERS = {
    "gamma_a": ("model", "gamma_a", float),
    "gamma_i": ("model", "gamma_i", float),
    "graph_k": ("model", "graph_k", int),
    "self_train_k": ("inference", "self_train_k", int),
}


def parse_grid_spec(spec: str) -> tuple[str, List[float | int]]:
    """Parse ``name=v1,v2,...`` or, for integer parameters, ``name=start:stop[:step]`` (inclusive)."""
    name, sep, raw = spec.partition("=")
    name = name.strip()
    if not sep or name not in SWEEP_PARAMETERS:
        raise ConfigError(
            f"grid entry {spec!r} must look like name=values with name in {sorted(SWEEP_PARAMETERS)}"
        )
    kind = SWEEP_PARAMETERS[name][2]
    try:
        if ":" in raw:
            if kind is not int:
                raise ConfigError(f"range syntax is only allowed for integer parameters, not {name}")
            parts = [int(p) for p in raw.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            values = list(range(start, stop + 1, step))
        else:
            values = [kind(v) for v in raw.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"cannot parse grid values in {spec!r}: {e}") from e
    if not values:
        raise ConfigError(f"grid entry {spec!r} has no values")
    return name, values


def validate_grid(grid: Mapping[str, Sequence]) -> None:
    for name, values in grid.items():
        if name not in SWEEP_PARAMETERS:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        if name == "gamma_a":
            for value in values:
                check_gamma_a(value)


def expand_grid(grid: Mapping[str, Sequence]) -> List[Dict[str, float | int]]:
    """Cartesian product of the grid, parameters in sorted name order."""
    names = sorted(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def apply_cell(config: RunConfig, cell: Mapping[str, float | int]) -> RunConfig:
    model_changes, inference_changes = {}, {}
    for name, value in cell.items():
        section, key, kind = SWEEP_PARAMETERS[name]
        target = model_changes if section == "model" else inference_changes
        target[key] = kind(value)
    updated = replace(
        config,
        model=replace(config.model, **model_changes),
        inference=replace(config.inference, **inference_changes),
    )
    validate_run_config(updated)
    return updated


def cell_hash(config: RunConfig) -> str:
    """Content hash of everything that affects a cell's results."""
    payload = config.to_dict()
    payload.pop("output", None)
    payload.pop("runtime", None)
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


def run_sweep(
    base: RunConfig,
    grid: Mapping[str, Sequence],
    run_cell: Callable[[RunConfig], ExperimentReport],
    output_dir: str | Path,
) -> pd.DataFrame:
    """Run (or resume) every cell and write summary.csv; returns the summary table."""
    validate_grid(grid)
    if not grid:
        raise ParameterError("sweep grid is empty")
    output_dir = Path(output_dir)
    cells_dir = output_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    for cell in expand_grid(grid):
        config = apply_cell(base, cell)
        digest = cell_hash(config)
        cell_dir = cells_dir / digest
        if (cell_dir / REPORT_JSON).exists():
            logger.info("sweep_cell_skipped", cell=cell, hash=digest)
            data = read_report(cell_dir)
            mean, std = data["mean"], data["std"]
        else:
            logger.info("sweep_cell_started", cell=cell, hash=digest)
            report = run_cell(config)
            cell_dir.mkdir(parents=True, exist_ok=True)
            (cell_dir / "resolved_config.json").write_text(config.to_json() + "\n", encoding="utf-8")
            write_report(report, cell_dir, include_runtime=config.output.record_runtime)
            mean, std = report.mean, report.std
            logger.info("sweep_cell_finished", cell=cell, hash=digest, mean=mean)
        rows.append({**cell, "mean": mean, "std": std, "cell": digest})

    summary = pd.DataFrame(rows)
    summary.to_csv(output_dir / "summary.csv", index=False, float_format="%.17g")
    return summary
