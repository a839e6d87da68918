import os

import numpy as np
import pytest

from loopgas.datastore import generate_dataset
from loopgas.lattice import build_lattice
from loopgas.plgc import VQEConfig

RUN_EXTENDED = os.environ.get("LOOPGAS_EXTENDED", "") == "1"

extended = pytest.mark.skipif(
    not RUN_EXTENDED,
    reason="extended suite only (set LOOPGAS_EXTENDED=1)")


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "extended: long-running checks on the larger lattices")


_DATASET_CACHE = {}


@pytest.fixture(scope="session")
def full_dataset():
    """Full 300-sample dataset per lattice, generated once per session."""
    def _get(rows, cols):
        key = (rows, cols)
        if key not in _DATASET_CACHE:
            geometry = build_lattice(rows, cols)
            _DATASET_CACHE[key] = generate_dataset(geometry, VQEConfig())
        return _DATASET_CACHE[key]
    return _get


@pytest.fixture(scope="session")
def tiny_dataset():
    """Small, quick 2x2 dataset for persistence / CLI / baseline plumbing."""
    geometry = build_lattice(2, 2)
    config = VQEConfig(iterations=120, trials=2)
    return generate_dataset(geometry, config, per_phase=6)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
