"""Rate-coded spike injection and the labelled intensity dataset format.

Dataset files are CSV with a header ``label,x0,x1,...`` and one row per
sample: an integer label followed by intensities already normalized to
[0, 1].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng as rng_mod


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class RateEncoder:
    """Bernoulli rate coding: P(spike) = intensity * rate_scale per timestep."""

    rate_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rate_scale <= 1.0:
            raise ValueError(f"rate_scale {self.rate_scale} outside (0, 1]")

    def probabilities(self, intensities) -> np.ndarray:
        x = check_intensities(intensities)
        return np.clip(x * self.rate_scale, 0.0, 1.0)


def check_intensities(intensities) -> np.ndarray:
    x = np.asarray(intensities, dtype=np.float64)
    if not np.all(np.isfinite(x)) or x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("intensities must lie in [0, 1]")
    return x


def encode_step(encoder: RateEncoder, intensities, rng: rng_mod.SpikeRng, t: int) -> set[int]:
    """Input neuron ids that spike at timestep ``t``."""
    p = encoder.probabilities(intensities)
    u = rng.uniform(rng_mod.ENCODE, t, np.arange(p.shape[-1]))
    return {int(i) for i in np.flatnonzero(u < p)}


def encode_batch(probs: np.ndarray, seed: int, streams: np.ndarray, t: int) -> np.ndarray:
    """Spike matrix (images, inputs) at timestep ``t`` from spike probabilities.

    Row k equals ``encode_step`` with ``SpikeRng(seed, streams[k])``.
    """
    u = rng_mod.counter_uniform(
        seed, streams[:, None], rng_mod.ENCODE, t, np.arange(probs.shape[1])[None, :]
    )
    return u < probs


@dataclass
class Dataset:
    labels: np.ndarray
    intensities: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    def head(self, n: int | None) -> "Dataset":
        if n is None:
            return self
        return Dataset(self.labels[:n], self.intensities[:n])


def load_dataset(path) -> Dataset:
    path = Path(path)
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if not header or header[0] != "label":
                raise DatasetError(f"{path}: missing 'label,x0,...' header")
            width = len(header) - 1
            labels, rows = [], []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != width + 1:
                    raise DatasetError(f"{path}:{lineno}: expected {width + 1} fields, got {len(rec)}")
                try:
                    labels.append(int(rec[0]))
                    rows.append([float(v) for v in rec[1:]])
                except ValueError as e:
                    raise DatasetError(f"{path}:{lineno}: {e}") from None
    except OSError as e:
        raise DatasetError(f"cannot read dataset {path}: {e.strerror}") from None
    x = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    try:
        check_intensities(x)
    except ValueError as e:
        raise DatasetError(f"{path}: {e}") from None
    return Dataset(np.array(labels, dtype=np.int64), x)


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["label"] + [f"x{i}" for i in range(dataset.intensities.shape[1])])
        for y, row in zip(dataset.labels, dataset.intensities):
            w.writerow([int(y)] + [repr(float(v)) for v in row])
