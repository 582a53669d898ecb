"""
Feature and label file readers/writers.

Binary feature file: magic ``ZSLF``, u32 LE version (1), u64 LE N, u64 LE d_x, then
N*d_x little-endian float32 values, row-major. CSV alternative: header
``id,f0,...,f{d-1}``. Label file: UTF-8 text, one class name per line.
"""
from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from ..error_handler import DataError, FormatError
from .base import Dataset

logger = structlog.get_logger(__name__)

FEATURE_MAGIC = b"ZSLF"
FEATURE_VERSION = 1
FEATURE_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u8"), ("d", "<u8")])
FEATURE_DTYPE = np.dtype("<f4")


def write_feature_file(path: str | Path, X: np.ndarray) -> None:
    """Write X in the binary feature format (values stored as float32)."""
    X = np.ascontiguousarray(X, dtype=FEATURE_DTYPE)
    if X.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
    header = np.array([(FEATURE_MAGIC, FEATURE_VERSION, X.shape[0], X.shape[1])], dtype=FEATURE_HEADER)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(X.tobytes(order="C"))


def write_feature_csv(path: str | Path, X: np.ndarray) -> None:
    """Write X as CSV with header ``id,f0,...``; float32 values printed round-trip exact."""
    X = np.asarray(X, dtype=FEATURE_DTYPE)
    frame = pd.DataFrame(X.astype(np.float64), columns=[f"f{j}" for j in range(X.shape[1])])
    frame.insert(0, "id", np.arange(X.shape[0]))
    frame.to_csv(path, index=False, float_format="%.9g")


def read_feature_file(path: str | Path) -> np.ndarray:
    """Read a binary or CSV feature file (format sniffed from the magic bytes)."""
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(len(FEATURE_MAGIC))
    if head == FEATURE_MAGIC:
        return _read_binary(path)
    return _read_csv(path)


def _read_binary(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if len(raw) < FEATURE_HEADER.itemsize:
        raise FormatError(f"{path}: truncated feature header")
    header = np.frombuffer(raw, dtype=FEATURE_HEADER, count=1)[0]
    if int(header["version"]) != FEATURE_VERSION:
        raise FormatError(f"{path}: unsupported feature file version {int(header['version'])}")
    n, d = int(header["n"]), int(header["d"])
    expected = FEATURE_HEADER.itemsize + n * d * FEATURE_DTYPE.itemsize
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {n}x{d} features, found {len(raw)}")
    values = np.frombuffer(raw, dtype=FEATURE_DTYPE, count=n * d, offset=FEATURE_HEADER.itemsize)
    return values.reshape(n, d).copy()


def _read_csv(path: Path) -> np.ndarray:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"{path}: not a binary feature file and not a readable CSV: {e}") from e
    expected = ["id"] + [f"f{j}" for j in range(frame.shape[1] - 1)]
    if list(frame.columns) != expected:
        raise FormatError(f"{path}: CSV header must be 'id,f0,...,f{{d-1}}'")
    frame = frame.sort_values("id", kind="stable")
    return frame.iloc[:, 1:].to_numpy(dtype=FEATURE_DTYPE)


def read_labels(path: str | Path) -> List[str]:
    """Read one class name per line (blank trailing lines ignored)."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.rstrip("\r\n") for line in f]
    while lines and not lines[-1].strip():
        lines.pop()
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            raise FormatError(f"{path}: empty class name on line {number}", line_number=number)
    return [line.strip() for line in lines]


def write_labels(path: str | Path, names: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for name in names:
            f.write(f"{name}\n")


def encode_labels(names: Sequence[str]) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """Integer ids with classes numbered in first-occurrence order."""
    table: dict[str, int] = {}
    y = np.empty(len(names), dtype=np.int64)
    for i, name in enumerate(names):
        y[i] = table.setdefault(name, len(table))
    return y, tuple(table)


def normalize_rows(X: np.ndarray) -> np.ndarray:
    """Per-row L2 normalization; all-zero rows stay zero."""
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    zero = norms[:, 0] == 0
    if np.any(zero):
        logger.warning("zero_feature_rows", count=int(zero.sum()))
    return X / np.where(norms == 0, 1.0, norms)


def load_dataset(
    feature_path: str | Path,
    label_path: str | Path,
    normalize: bool = True,
    name: Optional[str] = None,
) -> Dataset:
    """Load features and labels into a Dataset (optionally L2-normalizing rows)."""
    X = read_feature_file(feature_path).astype(np.float64)
    names = read_labels(label_path)
    if len(names) != X.shape[0]:
        raise FormatError(
            f"{label_path}: {len(names)} labels for {X.shape[0]} feature rows",
            labels=len(names), rows=X.shape[0],
        )
    if not np.all(np.isfinite(X)):
        raise DataError(f"{feature_path}: features contain NaN or Inf")
    if normalize:
        X = normalize_rows(X)
    y, class_names = encode_labels(names)
    dataset = Dataset(name=name or Path(feature_path).stem, X=X, y=y, class_names=class_names)
    logger.info("dataset_loaded", name=dataset.name, n=dataset.n_instances,
                d_x=dataset.d_x, classes=dataset.n_classes)
    return dataset


def write_dataset(dataset: Dataset, feature_path: str | Path, label_path: str | Path) -> None:
    write_feature_file(feature_path, dataset.X)
    write_labels(label_path, [dataset.class_names[c] for c in dataset.y])
