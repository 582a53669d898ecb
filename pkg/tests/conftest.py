from pathlib import Path

import numpy as np
import pytest
import structlog
from dotenv import load_dotenv

from zeroshot.dataio.base import SyntheticSpec
from zeroshot.dataio.synthetic import generate_synthetic

# Load .env so ZSL_* settings used during development apply to tests too
load_dotenv(dotenv_path=Path(__file__).resolve().parents[1] / ".env")


@pytest.fixture(autouse=True)
def reset_logging(monkeypatch):
    """CLI tests configure structlog against the captured stderr; undo that after each test."""
    monkeypatch.delenv("ZSL_THREADS", raising=False)
    yield
    structlog.reset_defaults()


@pytest.fixture
def word_vector_file(tmp_path):
    path = tmp_path / "vectors.txt"
    path.write_text(
        "6 3\n"
        "brush 1.0 0.0 0.0\n"
        "hair 0.0 1.0 0.0\n"
        "ice 0.0 0.0 2.0\n"
        "skating 0.0 3.0 0.0\n"
        "ride 1.0 1.0 1.0\n"
        "horse -1.0 0.0 1.0\n",
        encoding="utf-8",
    )
    return path


@pytest.fixture
def planted():
    """Noiseless planted-map data: 6 train + 4 test classes, 30 instances each."""
    return generate_synthetic(SyntheticSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
