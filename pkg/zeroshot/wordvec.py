"""
Word Vectors and Class Prototypes

Loads pre-trained word vectors, composes class-name prototypes by averaging the
vectors of their constituent words, and assembles the class embedding matrix Z
(one unit-norm column per class) from word vectors, an attribute table, or both.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from .error_handler import (
    ConfigError,
    DegenerateEmbeddingError,
    FormatError,
    ParseError,
    VocabularyLookupError,
)

logger = structlog.get_logger(__name__)

# camelCase boundaries: "IceSkating" -> "Ice Skating", "HTMLParser" -> "HTML Parser"
_CAMEL_LOWER_UPPER = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")
_CAMEL_ACRONYM = re.compile(r"(?<=[A-Z])(?=[A-Z][a-z])")
_SEPARATORS = re.compile(r"[\s_\-]+")

ClassMatrixBuilder = Callable[[Sequence[str]], np.ndarray]


class EmbeddingMode(Enum):
    """Where class prototypes come from."""
    WORD_VECTOR = "word-vector"
    ATTRIBUTE = "attribute-file"
    CONCATENATED = "concatenated"


@dataclass(frozen=True)
class WordVectorStore:
    """Immutable token -> vector dictionary; realizes g(.)."""
    dim: int
    vectors: Mapping[str, np.ndarray] = field(repr=False)

    @property
    def token_count(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def get(self, token: str) -> Optional[np.ndarray]:
        return self.vectors.get(token)


@dataclass(frozen=True)
class ClassEmbedding:
    """Prototype of one class name."""
    class_name: str
    vector: np.ndarray
    normalized: bool = True
    tokens: Tuple[str, ...] = ()
    missing_tokens: Tuple[str, ...] = ()


@dataclass(frozen=True)
class EmbeddingSource:
    """Prototype source: word vectors, an attribute table, or their concatenation."""
    mode: EmbeddingMode
    store: Optional[WordVectorStore] = None
    attribute_path: Optional[str] = None
    attributes: Optional[Mapping[str, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        needs_store = self.mode in (EmbeddingMode.WORD_VECTOR, EmbeddingMode.CONCATENATED)
        needs_attrs = self.mode in (EmbeddingMode.ATTRIBUTE, EmbeddingMode.CONCATENATED)
        if needs_store and self.store is None:
            raise ConfigError(f"embedding mode {self.mode.value!r} needs a word-vector store")
        if needs_attrs and self.attributes is None:
            if self.attribute_path is None:
                raise ConfigError(f"embedding mode {self.mode.value!r} needs an attribute file")
            object.__setattr__(self, "attributes", load_attribute_table(self.attribute_path))

    def builder(self) -> ClassMatrixBuilder:
        """Callable mapping class names to the Z matrix for this source."""
        return partial(build_class_matrix, self)


def tokenize_class_name(class_name: str) -> List[str]:
    """Split on whitespace, underscore, hyphen and camelCase; lower-case everything."""
    spaced = _CAMEL_ACRONYM.sub(" ", _CAMEL_LOWER_UPPER.sub(" ", class_name))
    return [t.lower() for t in _SEPARATORS.split(spaced) if t]


def class_key(class_name: str) -> str:
    """Canonical name used for exact-name matching across datasets."""
    return " ".join(tokenize_class_name(class_name))


def l2_normalize(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise DegenerateEmbeddingError("cannot normalize a zero vector")
    return vector / norm


def _read_header(path: Path, entries: List[Tuple[int, List[str]]]) -> Optional[Tuple[int, int]]:
    """(count, dim) when the first entry is a header, else None.

    Two integer fields form a header only if the next entry has dim values and
    the count matches the remaining entries; otherwise the line is a vector
    (a 1-D entry keyed by a numeric token).
    """
    first = entries[0][1]
    if len(first) != 2 or not all(p.isdigit() for p in first):
        return None
    count, dim = int(first[0]), int(first[1])
    rest = entries[1:]
    if not rest:
        if dim < 1:
            raise FormatError(f"{path}: header declares dimension {dim}", line_number=1)
        return count, dim
    if len(rest[0][1]) != dim + 1:
        return None
    if count != len(rest):
        if dim == 1:
            return None
        raise FormatError(f"{path}: header declares {count} vectors, file has {len(rest)}",
                          line_number=1)
    if dim < 1:
        raise FormatError(f"{path}: header declares dimension {dim}", line_number=1)
    return count, dim


def load_word_vectors(path: str | Path) -> WordVectorStore:
    """Load a text word-vector file.

    Optional ``"<count> <dim>"`` header, then ``"<token> <f_1> ... <f_d>"`` per line.
    Without a header the dimension is inferred from the first entry.
    """
    path = Path(path)
    vectors: Dict[str, np.ndarray] = {}
    dim: Optional[int] = None

    with open(path, "r", encoding="utf-8") as f:
        entries = [(n, parts) for n, parts in
                   ((n, line.split()) for n, line in enumerate(f, start=1)) if parts]
    if entries:
        header = _read_header(path, entries)
        if header is not None:
            dim = header[1]
            entries = entries[1:]

    for line_number, parts in entries:
        token, values = parts[0].lower(), parts[1:]
        if dim is None:
            dim = len(values)
            if dim < 1:
                raise FormatError(f"{path}: line {line_number} has no vector values",
                                  line_number=line_number)
        if len(values) != dim:
            raise ParseError(
                f"{path}: line {line_number} has {len(values)} values, expected {dim}",
                line_number=line_number,
            )
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as e:
            raise ParseError(f"{path}: line {line_number}: {e}", line_number=line_number) from e
        if token in vectors:
            raise FormatError(f"{path}: duplicate token {token!r} on line {line_number}",
                              line_number=line_number, token=token)
        vectors[token] = vector

    if dim is None or not vectors:
        raise FormatError(f"{path}: no word vectors found")

    logger.info("word_vectors_loaded", path=str(path), tokens=len(vectors), dim=dim)
    return WordVectorStore(dim=dim, vectors=vectors)


def write_word_vectors(path: str | Path, tokens: Sequence[str], matrix: np.ndarray,
                       header: bool = True) -> None:
    """Write vectors (one row per token) in the text format load_word_vectors reads."""
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as f:
        if header:
            f.write(f"{len(tokens)} {matrix.shape[1]}\n")
        for token, row in zip(tokens, matrix):
            f.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")


def compose_class_vector(store: WordVectorStore, class_name: str) -> ClassEmbedding:
    """Average the vectors of a class name's tokens, then L2-normalize."""
    tokens = tokenize_class_name(class_name)
    if not tokens:
        raise VocabularyLookupError(f"class name {class_name!r} has no tokens", missing=[])

    found = [t for t in tokens if t in store]
    missing = [t for t in tokens if t not in store]
    if not found:
        raise VocabularyLookupError(
            f"no token of class name {class_name!r} is in the vocabulary: {missing}",
            missing=missing,
        )
    if missing:
        logger.warning("tokens_missing", class_name=class_name, missing=missing)

    mean = np.mean(np.stack([store.vectors[t] for t in found]), axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise DegenerateEmbeddingError(
            f"class name {class_name!r} composes to a zero vector", class_name=class_name
        )
    return ClassEmbedding(
        class_name=class_name,
        vector=mean / norm,
        normalized=True,
        tokens=tuple(found),
        missing_tokens=tuple(missing),
    )


def load_attribute_table(path: str | Path) -> Dict[str, np.ndarray]:
    """Read a per-class attribute CSV with header ``class,a_1,...,a_m``."""
    frame = pd.read_csv(path)
    if frame.columns[0] != "class" or frame.shape[1] < 2:
        raise FormatError(f"{path}: attribute file must start with a 'class' column")
    values = frame.iloc[:, 1:].to_numpy(dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: attribute values must be finite")
    table: Dict[str, np.ndarray] = {}
    for name, row in zip(frame["class"].astype(str), values):
        key = class_key(name)
        if key in table:
            raise FormatError(f"{path}: duplicate attribute row for class {name!r}")
        table[key] = row
    return table


def _attribute_vector(attributes: Mapping[str, np.ndarray], class_name: str) -> np.ndarray:
    key = class_key(class_name)
    if key not in attributes:
        raise VocabularyLookupError(
            f"class {class_name!r} is missing from the attribute file", missing=[class_name]
        )
    vector = attributes[key]
    if not np.any(vector):
        raise DegenerateEmbeddingError(f"class {class_name!r} has an all-zero attribute row")
    return l2_normalize(vector)


def build_class_matrix(source: EmbeddingSource, class_names: Sequence[str]) -> np.ndarray:
    """Assemble Z (d x C) with unit-norm columns, one per class name.

    Concatenated mode normalizes the word-vector and attribute blocks separately,
    stacks them, and normalizes the stacked column.
    """
    columns = []
    for name in class_names:
        if source.mode is EmbeddingMode.WORD_VECTOR:
            column = compose_class_vector(source.store, name).vector
        elif source.mode is EmbeddingMode.ATTRIBUTE:
            column = _attribute_vector(source.attributes, name)
        elif source.mode is EmbeddingMode.CONCATENATED:
            word_part = compose_class_vector(source.store, name).vector
            attr_part = _attribute_vector(source.attributes, name)
            column = l2_normalize(np.concatenate([word_part, attr_part]))
        else:
            raise ConfigError(f"unknown embedding mode: {source.mode}")
        columns.append(column)

    if not columns:
        width = _source_dim(source)
        return np.zeros((width, 0))
    return np.stack(columns, axis=1)


def _source_dim(source: EmbeddingSource) -> int:
    dim = 0
    if source.store is not None and source.mode is not EmbeddingMode.ATTRIBUTE:
        dim += source.store.dim
    if source.attributes and source.mode is not EmbeddingMode.WORD_VECTOR:
        dim += len(next(iter(source.attributes.values())))
    return dim


def make_embedding_source(mode: str, word_vectors: Optional[str] = None,
                          attributes: Optional[str] = None) -> EmbeddingSource:
    """Build an EmbeddingSource from configuration values."""
    try:
        embedding_mode = EmbeddingMode(mode)
    except ValueError as e:
        raise ConfigError(f"unknown embedding mode {mode!r}") from e
    store = None
    if word_vectors and embedding_mode is not EmbeddingMode.ATTRIBUTE:
        store = load_word_vectors(word_vectors)
    return EmbeddingSource(mode=embedding_mode, store=store, attribute_path=attributes)
