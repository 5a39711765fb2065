import numpy as np
import pytest

from secsweep.data import Dataset, load_idx, subsample
from secsweep.synthdata import write_idx_corpus
from secsweep.train import TrainConfig, train
from secsweep.zoo import build_cnn


@pytest.fixture(scope="session")
def digit_corpus(tmp_path_factory):
    """Synthetic digit corpus on disk in IDX format, parsed through the loader."""
    out = tmp_path_factory.mktemp("idx-corpus")
    paths = write_idx_corpus(out, n_train=1200, n_test=500, seed=0)
    train_set = load_idx(paths["train_images"], paths["train_labels"])
    test_set = load_idx(paths["t10k_images"], paths["t10k_labels"])
    return {"paths": paths, "train": train_set, "test": test_set}


@pytest.fixture(scope="session")
def small_trained_cnn(digit_corpus):
    """CNN z=4 trained briefly; enough accuracy to attack meaningfully."""
    train_set, _ = subsample(digit_corpus["train"], digit_corpus["test"], 600, 200, seed=0)
    model = build_cnn(4, seed=0)
    train(model, train_set, TrainConfig(epochs=8, batch_size=20, seed=0))
    return model


@pytest.fixture(scope="session")
def attack_batch(digit_corpus, small_trained_cnn):
    """100 test samples plus labels, as float32 arrays."""
    _, test_set = subsample(digit_corpus["train"], digit_corpus["test"], 600, 100, seed=0)
    return test_set.images.copy(), test_set.labels.copy()


def toy_separable_dataset(n=40, seed=0):
    """Two linearly separable 2-D blobs wrapped as a Dataset ([n,1,1,2] images)."""
    rng = np.random.default_rng(seed)
    half = n // 2
    pts = np.concatenate(
        [
            rng.normal([0.2, 0.2], 0.05, size=(half, 2)),
            rng.normal([0.8, 0.8], 0.05, size=(n - half, 2)),
        ]
    ).astype(np.float32)
    labels = np.concatenate([np.zeros(half), np.ones(n - half)]).astype(np.int64)
    order = rng.permutation(n)
    return Dataset(np.clip(pts[order], 0, 1).reshape(n, 1, 1, 2), labels[order])
