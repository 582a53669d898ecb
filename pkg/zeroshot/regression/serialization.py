"""
Model dump/restore.

Layout: one little-endian header record (magic ``ZSLA``, version, variant and
weighting codes, dimensions, hyperparameters), then A (d_z x n) and the basis
rows (n x d_x) as float64, row-major.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..error_handler import FormatError
from ..graph import GraphWeighting
from .base import EmbeddingModel, HyperParams, Variant

MODEL_MAGIC = b"ZSLA"
MODEL_VERSION = 1
MODEL_HEADER = np.dtype([
    ("magic", "S4"),
    ("version", "<u4"),
    ("variant", "<u4"),
    ("weighting", "<u4"),
    ("d_z", "<u8"),
    ("n", "<u8"),
    ("d_x", "<u8"),
    ("n_labeled", "<u8"),
    ("graph_k", "<u8"),
    ("self_train_k", "<u8"),
    ("gamma_a", "<f8"),
    ("gamma_i", "<f8"),
    ("heat_bandwidth", "<f8"),
])
VALUE_DTYPE = np.dtype("<f8")

_VARIANTS = list(Variant)
_WEIGHTINGS = list(GraphWeighting)


def dump_model(model: EmbeddingModel, path: str | Path) -> None:
    hp = model.hyperparams
    header = np.array([(
        MODEL_MAGIC, MODEL_VERSION, _VARIANTS.index(model.variant),
        _WEIGHTINGS.index(hp.graph_weighting), model.d_z, model.basis.shape[0], model.d_x,
        model.n_labeled, hp.graph_k, hp.self_train_k, hp.gamma_a, hp.gamma_i, hp.heat_bandwidth,
    )], dtype=MODEL_HEADER)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(model.A, dtype=VALUE_DTYPE).tobytes())
        f.write(np.ascontiguousarray(model.basis, dtype=VALUE_DTYPE).tobytes())


def load_model(path: str | Path) -> EmbeddingModel:
    raw = Path(path).read_bytes()
    if len(raw) < MODEL_HEADER.itemsize:
        raise FormatError(f"{path}: truncated model header")
    header = np.frombuffer(raw, dtype=MODEL_HEADER, count=1)[0]
    if bytes(header["magic"]) != MODEL_MAGIC:
        raise FormatError(f"{path}: not a model file (bad magic)")
    if int(header["version"]) != MODEL_VERSION:
        raise FormatError(f"{path}: unsupported model version {int(header['version'])}")
    d_z, n, d_x = int(header["d_z"]), int(header["n"]), int(header["d_x"])
    expected = MODEL_HEADER.itemsize + (d_z * n + n * d_x) * VALUE_DTYPE.itemsize
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    try:
        variant = _VARIANTS[int(header["variant"])]
        weighting = _WEIGHTINGS[int(header["weighting"])]
    except IndexError as e:
        raise FormatError(f"{path}: unknown variant or weighting code") from e

    offset = MODEL_HEADER.itemsize
    A = np.frombuffer(raw, dtype=VALUE_DTYPE, count=d_z * n, offset=offset).reshape(d_z, n).copy()
    offset += d_z * n * VALUE_DTYPE.itemsize
    basis = np.frombuffer(raw, dtype=VALUE_DTYPE, count=n * d_x, offset=offset).reshape(n, d_x).copy()
    hyperparams = HyperParams(
        gamma_a=float(header["gamma_a"]),
        gamma_i=float(header["gamma_i"]),
        graph_k=int(header["graph_k"]),
        self_train_k=int(header["self_train_k"]),
        graph_weighting=weighting,
        heat_bandwidth=float(header["heat_bandwidth"]),
    )
    return EmbeddingModel(A=A, basis=basis, hyperparams=hyperparams, variant=variant,
                          n_labeled=int(header["n_labeled"]))
