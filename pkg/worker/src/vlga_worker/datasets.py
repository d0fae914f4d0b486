"""Training data: CIFAR-10 from the standard python batches, or synthetic.

The synthetic set exists for smoke tests and sandboxes with no dataset on
disk: ten fixed template images plus Gaussian noise, balanced labels, fully
deterministic.  It is intentionally easy; one epoch on a few hundred images
should beat the 10% random-guess line by a wide margin.
"""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np

CIFAR_TRAIN_BATCHES = [f"data_batch_{i}" for i in range(1, 6)]
VALIDATION_COUNT = 5_000


def synthetic_dataset(
    train_count: int,
    val_count: int,
    *,
    num_classes: int = 10,
    input_shape: tuple[int, int, int] = (32, 32, 3),
    noise: float = 0.25,
    seed: int = 12345,
):
    """Deterministic (train_x, train_y, val_x, val_y), images in [0, 1]."""
    h, w, c = input_shape
    rng = np.random.default_rng(seed)
    templates = rng.uniform(0.0, 1.0, size=(num_classes, h, w, c)).astype(np.float32)

    def split(count, salt):
        r = np.random.default_rng(seed + salt)
        labels = (np.arange(count) % num_classes).astype(np.int64)
        images = templates[labels] + r.normal(0.0, noise, (count, h, w, c))
        images = np.clip(images, 0.0, 1.0).astype(np.float32)
        order = r.permutation(count)
        return images[order], labels[order]

    train_x, train_y = split(train_count, 1)
    val_x, val_y = split(val_count, 2)
    return train_x, train_y, val_x, val_y


def _load_batch(path: Path):
    with path.open("rb") as fh:
        raw = pickle.load(fh, encoding="bytes")
    images = raw[b"data"].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    labels = np.asarray(raw[b"labels"], dtype=np.int64)
    return images.astype(np.float32) / 255.0, labels


def load_cifar10(data_dir: str | Path):
    """45k/5k train/validation split from the 50k CIFAR-10 training images.

    The 10k test batch is left untouched for final evaluation.
    """
    data_dir = Path(data_dir)
    parts = [_load_batch(data_dir / name) for name in CIFAR_TRAIN_BATCHES]
    images = np.concatenate([p[0] for p in parts])
    labels = np.concatenate([p[1] for p in parts])
    split = len(images) - VALIDATION_COUNT
    return images[:split], labels[:split], images[split:], labels[split:]


def cifar10_available(data_dir) -> bool:
    if data_dir is None:
        return False
    root = Path(data_dir)
    return all((root / name).exists() for name in CIFAR_TRAIN_BATCHES)
