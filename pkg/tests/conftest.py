from pathlib import Path

import numpy as np
import pytest

from entcert.ingest import load_record

DATA = Path(__file__).resolve().parents[1] / "src" / "entcert" / "data" / "synthetic_run.json"


@pytest.fixture(scope="session")
def bundled_path():
    return DATA


@pytest.fixture(scope="session")
def bundled():
    return load_record(DATA)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
