"""
Run Configuration

Centralized defaults, run-configuration files and logging setup.

Precedence (highest first): CLI flag overrides, config-file values, environment
(ZSL_THREADS), DEFAULT_CONFIG.
"""
from __future__ import annotations

import copy
import json
import logging
import os
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import structlog

from .error_handler import ConfigError, ParameterError

logger = structlog.get_logger(__name__)

MIN_GAMMA_A = 1e-12

VARIANTS = ("ridge", "manifold")
MATCHERS = ("nn", "nrm", "gc")
METRICS = ("accuracy", "map", "auc")
EMBEDDING_MODES = ("word-vector", "attribute-file", "concatenated")
GRAPH_WEIGHTINGS = ("binary", "heat")

# Defaults reproduce the headline pipeline (gamma_A=1e-6, gamma_I=40, N^G_K=5, N^st_K=100).
DEFAULT_CONFIG: Dict[str, Dict[str, Any]] = {
    "data": {
        "features": None,
        "labels": None,
        "name": "target",
        "normalize_features": True,
        "aux": [],
    },
    "embedding": {
        "mode": "word-vector",
        "word_vectors": None,
        "attributes": None,
    },
    "model": {
        "variant": "manifold",
        "gamma_a": 1e-6,
        "gamma_i": 40.0,
        "graph_k": 5,
        "graph_weighting": "binary",
        "heat_bandwidth": 1.0,
    },
    "inference": {
        "matcher": "nn",
        "self_train": False,
        "self_train_k": 100,
        "renormalize_adapted": True,
    },
    "evaluation": {
        "metric": "accuracy",
        "n_splits": 50,
        "seed": 0,
        "distractors_per_class": 0,
        "subsample": {},
    },
    "output": {
        "directory": "runs/latest",
        "retain_predictions": False,
        "record_runtime": False,
    },
    "runtime": {
        "workers": 1,
    },
}

_PATH_KEYS = {("data", "features"), ("data", "labels"), ("embedding", "word_vectors"),
              ("embedding", "attributes"), ("output", "directory")}


@dataclass(frozen=True)
class AuxDatasetConfig:
    features: str
    labels: str
    name: str


@dataclass(frozen=True)
class DataConfig:
    features: Optional[str]
    labels: Optional[str]
    name: str
    normalize_features: bool
    aux: List[AuxDatasetConfig]


@dataclass(frozen=True)
class EmbeddingConfig:
    mode: str
    word_vectors: Optional[str]
    attributes: Optional[str]


@dataclass(frozen=True)
class ModelConfig:
    variant: str
    gamma_a: float
    gamma_i: float
    graph_k: int
    graph_weighting: str
    heat_bandwidth: float


@dataclass(frozen=True)
class InferenceConfig:
    matcher: str
    self_train: bool
    self_train_k: int
    renormalize_adapted: bool


@dataclass(frozen=True)
class EvaluationConfig:
    metric: str
    n_splits: int
    seed: int
    distractors_per_class: int
    subsample: Dict[str, float]


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    retain_predictions: bool
    record_runtime: bool


@dataclass(frozen=True)
class RuntimeConfig:
    workers: int


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, validated run configuration."""
    data: DataConfig
    embedding: EmbeddingConfig
    model: ModelConfig
    inference: InferenceConfig
    evaluation: EvaluationConfig
    output: OutputConfig
    runtime: RuntimeConfig = field(default_factory=lambda: RuntimeConfig(workers=1))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def get_default_config() -> Dict[str, Dict[str, Any]]:
    """Get a deep copy of the default configuration."""
    return copy.deepcopy(DEFAULT_CONFIG)


def default_workers() -> int:
    """Worker count from ZSL_THREADS, falling back to the default."""
    raw = os.getenv("ZSL_THREADS")
    if not raw:
        return DEFAULT_CONFIG["runtime"]["workers"]
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"ZSL_THREADS must be an integer, got {raw!r}") from e
    if value < 1:
        raise ConfigError(f"ZSL_THREADS must be >= 1, got {value}")
    return value


def read_config_file(path: str | Path) -> Dict[str, Any]:
    """Read a TOML or JSON run-configuration file into a raw dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", path=str(path))
    try:
        if path.suffix.lower() == ".json":
            return json.loads(path.read_text(encoding="utf-8"))
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}", path=str(path)) from e


def load_run_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve a run configuration from defaults, env, an optional file and overrides.

    Overrides use dotted keys (``"model.gamma_a"``) and win over everything else.
    """
    merged = get_default_config()
    merged["runtime"]["workers"] = default_workers()
    base_dir = Path.cwd()

    if path is not None:
        raw = read_config_file(path)
        base_dir = Path(path).resolve().parent
        _merge_sections(merged, raw, origin=str(path))

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        _merge_sections(merged, {section: {key: value}}, origin="override")

    return build_run_config(merged, base_dir)


def _merge_sections(target: Dict[str, Dict[str, Any]], raw: Mapping[str, Any], origin: str) -> None:
    for section, values in raw.items():
        if section not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown config section [{section}] in {origin}", section=section)
        if not isinstance(values, Mapping):
            raise ConfigError(f"config section [{section}] must be a table", section=section)
        for key, value in values.items():
            if key not in DEFAULT_CONFIG[section]:
                raise ConfigError(
                    f"unknown config key {section}.{key} in {origin}", section=section, key=key
                )
            target[section][key] = _check_type(section, key, value)


def _check_type(section: str, key: str, value: Any) -> Any:
    default = DEFAULT_CONFIG[section][key]
    name = f"{section}.{key}"
    if (section, key) in _PATH_KEYS:
        if value in (None, ""):
            return None
        if not isinstance(value, (str, Path)):
            raise ConfigError(f"{name} must be a path string", key=name)
        return str(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean, got {value!r}", key=name)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer, got {value!r}", key=name)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}", key=name)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}", key=name)
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{name} must be a list", key=name)
        return value
    if isinstance(default, dict):
        if not isinstance(value, Mapping):
            raise ConfigError(f"{name} must be a table", key=name)
        return dict(value)
    return value


def _resolve_path(value: Optional[str], base_dir: Path) -> Optional[str]:
    if value is None:
        return None
    p = Path(value)
    return str(p if p.is_absolute() else (base_dir / p))


def build_run_config(merged: Dict[str, Dict[str, Any]], base_dir: Path) -> RunConfig:
    """Validate merged sections and build the typed RunConfig."""
    d, e, m = merged["data"], merged["embedding"], merged["model"]
    i, ev, o, r = merged["inference"], merged["evaluation"], merged["output"], merged["runtime"]

    aux: List[AuxDatasetConfig] = []
    for idx, entry in enumerate(d["aux"]):
        if not isinstance(entry, Mapping):
            raise ConfigError(f"data.aux[{idx}] must be a table")
        unknown = set(entry) - {"features", "labels", "name"}
        if unknown:
            raise ConfigError(f"unknown keys in data.aux[{idx}]: {sorted(unknown)}")
        if not entry.get("features") or not entry.get("labels"):
            raise ConfigError(f"data.aux[{idx}] needs both features and labels")
        aux.append(AuxDatasetConfig(
            features=_resolve_path(str(entry["features"]), base_dir),
            labels=_resolve_path(str(entry["labels"]), base_dir),
            name=str(entry.get("name") or f"aux{idx}"),
        ))

    subsample: Dict[str, float] = {}
    for cls, pct in ev["subsample"].items():
        if isinstance(pct, bool) or not isinstance(pct, (int, float)):
            raise ConfigError(f"evaluation.subsample[{cls!r}] must be a number")
        subsample[str(cls)] = float(pct)

    config = RunConfig(
        data=DataConfig(
            features=_resolve_path(d["features"], base_dir),
            labels=_resolve_path(d["labels"], base_dir),
            name=d["name"],
            normalize_features=d["normalize_features"],
            aux=aux,
        ),
        embedding=EmbeddingConfig(
            mode=e["mode"],
            word_vectors=_resolve_path(e["word_vectors"], base_dir),
            attributes=_resolve_path(e["attributes"], base_dir),
        ),
        model=ModelConfig(**m),
        inference=InferenceConfig(**i),
        evaluation=EvaluationConfig(
            metric=ev["metric"],
            n_splits=ev["n_splits"],
            seed=ev["seed"],
            distractors_per_class=ev["distractors_per_class"],
            subsample=subsample,
        ),
        output=OutputConfig(
            directory=_resolve_path(o["directory"], base_dir),
            retain_predictions=o["retain_predictions"],
            record_runtime=o["record_runtime"],
        ),
        runtime=RuntimeConfig(workers=r["workers"]),
    )
    validate_run_config(config)
    return config


def validate_run_config(config: RunConfig) -> None:
    """Check value ranges and cross-field rules before any compute."""
    _choice("model.variant", config.model.variant, VARIANTS)
    _choice("inference.matcher", config.inference.matcher, MATCHERS)
    _choice("evaluation.metric", config.evaluation.metric, METRICS)
    _choice("embedding.mode", config.embedding.mode, EMBEDDING_MODES)
    _choice("model.graph_weighting", config.model.graph_weighting, GRAPH_WEIGHTINGS)

    check_gamma_a(config.model.gamma_a)
    if config.model.gamma_i < 0:
        raise ParameterError(f"model.gamma_i must be >= 0, got {config.model.gamma_i}")
    if config.model.graph_k < 1:
        raise ParameterError(f"model.graph_k must be >= 1, got {config.model.graph_k}")
    if config.model.heat_bandwidth <= 0:
        raise ParameterError("model.heat_bandwidth must be > 0")
    if config.inference.self_train_k < 1:
        raise ParameterError(f"inference.self_train_k must be >= 1, got {config.inference.self_train_k}")
    if config.evaluation.n_splits < 1:
        raise ParameterError("evaluation.n_splits must be >= 1")
    if config.evaluation.distractors_per_class < 0:
        raise ParameterError("evaluation.distractors_per_class must be >= 0")
    if config.evaluation.metric == "auc" and config.evaluation.distractors_per_class == 0:
        raise ConfigError("metric 'auc' needs evaluation.distractors_per_class > 0")
    for cls, pct in config.evaluation.subsample.items():
        if not 0 < pct <= 100:
            raise ParameterError(f"evaluation.subsample[{cls!r}] must be in (0, 100], got {pct}")
    if config.runtime.workers < 1:
        raise ParameterError("runtime.workers must be >= 1")

    mode = config.embedding.mode
    if mode in ("word-vector", "concatenated") and not config.embedding.word_vectors:
        raise ConfigError(f"embedding mode {mode!r} needs embedding.word_vectors")
    if mode in ("attribute-file", "concatenated") and not config.embedding.attributes:
        raise ConfigError(f"embedding mode {mode!r} needs embedding.attributes")


def check_gamma_a(gamma_a: float) -> None:
    """Reject ridge weights below the floor; zero regularization gives near-random accuracy."""
    if gamma_a < MIN_GAMMA_A:
        raise ParameterError(
            f"gamma_a={gamma_a} is below the minimum {MIN_GAMMA_A}: without ridge "
            "regularization the kernel system is numerically singular and zero-shot "
            "accuracy drops to near-random",
            gamma_a=gamma_a,
        )


def _choice(name: str, value: str, allowed: tuple) -> None:
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {list(allowed)}, got {value!r}", key=name)


# --- logging ---

def configure_logging(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """Configure structlog for the process (level/format default from ZSL_LOG_*)."""
    level_name = (level or os.getenv("ZSL_LOG_LEVEL", "INFO")).upper()
    fmt = (fmt or os.getenv("ZSL_LOG_FORMAT", "console")).lower()
    numeric = logging.getLevelName(level_name)
    if not isinstance(numeric, int):
        raise ConfigError(f"unknown log level {level_name!r}")
    renderer = (
        structlog.processors.JSONRenderer()
        if fmt == "json"
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
