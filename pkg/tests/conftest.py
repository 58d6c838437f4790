import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from firesig.cli import split_indices
from firesig.forest import ForestHyperparams, evaluate, train
from firesig.features import build_features
from firesig.signature import aspect_signature
from firesig.synth import GROUP_LABELS, SynthConfig, generate_dataset

DESK_SEED = 1
DESK_N = 300


@pytest.fixture(scope="session")
def desk():
    """The desk-scale run shared by the acceptance tests.

    Default generator and forest, n=300 per class, seed 1, stratified
    70/30 split, 7-class grouping.
    """
    t0 = time.time()
    cfg = SynthConfig(n_per_class=DESK_N, seed=DESK_SEED)
    samples = generate_dataset(cfg)
    X = np.array([build_features(aspect_signature(s.mask)).to_vector() for s in samples])
    labels = [GROUP_LABELS[s.pattern_class] for s in samples]
    train_idx, test_idx = split_indices(labels, 0.7, DESK_SEED)
    model = train(
        X[train_idx], [labels[i] for i in train_idx], ForestHyperparams(), seed=DESK_SEED
    )
    report = evaluate(model, X[test_idx], [labels[i] for i in test_idx])
    return {
        "samples": samples,
        "X": X,
        "labels": labels,
        "train_idx": train_idx,
        "test_idx": test_idx,
        "model": model,
        "report": report,
        "elapsed": time.time() - t0,
    }
