"""
Test Configuration and Fixtures
"""
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from shapca.classifiers.forest import fit_forest
from shapca.classifiers.models import ForestConfig
from shapca.spectra.synth import make_synthetic


# Small generator settings shared by the pipeline-level tests
SMALL_SYNTH = {
    "n_samples": 120,
    "n_points": 100,
    "n_blocks": 8,
    "block_width": 8,
    "noise": 0.01,
    "seed": 3,
}

SPECTRA_CSV = """# measured on the bench rig
sample_id,group_id,label,400,500,600,700
s1,p1,tumour,0.1,0.2,0.3,0.4
s2,p1,tumour,0.2,0.3,0.4,0.5
s3,p2,healthy,0.5,0.4,0.3,0.2
s4,p2,healthy,0.6,0.5,0.4,0.3
"""


@pytest.fixture(scope="session")
def synthetic():
    """Small grouped synthetic dataset with known informative bands"""
    return make_synthetic(**SMALL_SYNTH)


@pytest.fixture(scope="session")
def dataset(synthetic):
    return synthetic.dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def spectra_csv():
    return SPECTRA_CSV


@pytest.fixture
def random_forest():
    """Factory: a small forest trained on random labelled data in [0, 1]^k"""
    def build(seed: int, n_features: int = 4, n_trees: int = 3, max_depth: int = 3, n_classes: int = 2, n: int = 60):
        gen = np.random.default_rng(seed)
        x = gen.uniform(size=(n, n_features))
        y = (x[:, 0] + 0.5 * x[:, -1] + gen.normal(0, 0.2, size=n) > 0.75).astype(np.int64)
        if n_classes > 2:
            y = np.minimum(y + (x[:, 1] > 0.7), n_classes - 1)
        y[:n_classes] = np.arange(n_classes)
        cfg = ForestConfig(n_trees=n_trees, max_depth=max_depth, seed=seed)
        return fit_forest(x, y, cfg, n_classes=n_classes), x
    return build
