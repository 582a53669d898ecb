"""Small builders shared by the test modules."""
import numpy as np

from zeroshot.dataio.base import Dataset
from zeroshot.wordvec import class_key


def make_builder(vectors: dict):
    """Class-matrix builder over an in-memory name -> vector table."""
    def build(names):
        columns = [np.asarray(vectors[class_key(n)], dtype=np.float64) for n in names]
        return np.stack([c / np.linalg.norm(c) for c in columns], axis=1)
    return build


def random_unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    X = rng.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def labelled_dataset(rng: np.random.Generator, names, per_class: int, d_x: int,
                     name: str = "toy") -> Dataset:
    X = random_unit_rows(rng, per_class * len(names), d_x)
    y = np.repeat(np.arange(len(names)), per_class)
    return Dataset(name=name, X=X, y=y, class_names=tuple(names))
