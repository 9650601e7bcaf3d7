"""Synthetic desk-scale networks with prescribed sorted-weight profiles."""

from __future__ import annotations

import numpy as np

from .encoding import Dataset
from .network import Network, ResetMode
from .netio import load_text_network

PROFILES = ("linear", "exponential", "trained-import")


def profile_magnitudes(profile: str, m: int, w_max: float = 1.0) -> np.ndarray:
    """Sorted magnitudes of a list of length m.

    linear: w_max * (m - p + 1) / m, exactly self-inverse under the
    transform strategy. exponential: w_max * exp(-5 (p - 1) / m).
    """
    p = np.arange(1, m + 1)
    if profile == "linear":
        return w_max * (m - p + 1) / m
    if profile == "exponential":
        return w_max * np.exp(-5.0 * (p - 1) / m)
    raise ValueError(f"unknown profile {profile!r} (expected one of {', '.join(PROFILES)})")


def random_profile_weights(
    profile: str, n_pre: int, n_post: int, rs: np.random.Generator, inhibitory_fraction: float
) -> np.ndarray:
    w = np.empty((n_pre, n_post))
    for i in range(n_pre):
        targets = rs.permutation(n_post)
        n_inh = int(rs.binomial(n_post, inhibitory_fraction))
        n_exc = n_post - n_inh
        w_exc = rs.uniform(0.5, 1.0)
        w_inh = rs.uniform(0.5, 1.0)
        w[i, targets[:n_exc]] = profile_magnitudes(profile, n_exc, w_exc)
        w[i, targets[n_exc:]] = -profile_magnitudes(profile, n_inh, w_inh)
    return w


def fanin_thresholds(weights, scale: float = 1.0) -> list[float]:
    """Per-layer threshold: scale * mean positive fan-in weight sum."""
    return [scale * float(np.clip(w, 0, None).sum(axis=0).mean()) for w in weights]


def gen_network(
    profile: str,
    layers,
    seed: int,
    inhibitory_fraction: float = 0.2,
    threshold_scale: float = 1.0,
    reset: ResetMode = ResetMode.ZERO,
    source=None,
) -> Network:
    """Build a network whose per-neuron sorted profiles follow ``profile``.

    ``trained-import`` reads the plain-text network at ``source`` instead.
    """
    if profile == "trained-import":
        if source is None:
            raise ValueError("trained-import needs a text network to import")
        return load_text_network(source)
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r} (expected one of {', '.join(PROFILES)})")
    layers = [int(s) for s in layers]
    if len(layers) < 2 or min(layers) < 1:
        raise ValueError(f"invalid layer list {layers}")
    if not 0.0 <= inhibitory_fraction < 1.0:
        raise ValueError("inhibitory_fraction must lie in [0, 1)")
    rs = np.random.default_rng(seed)
    weights = [
        random_profile_weights(profile, a, b, rs, inhibitory_fraction) for a, b in zip(layers, layers[1:])
    ]
    return Network.from_dense(layers, weights, fanin_thresholds(weights, threshold_scale), reset)


def gen_dataset(n_inputs: int, samples: int, n_classes: int, seed: int) -> Dataset:
    """Uniform random intensities with random labels (activity workload only)."""
    rs = np.random.default_rng(seed)
    x = rs.random((samples, n_inputs))
    y = rs.integers(0, n_classes, samples)
    return Dataset(y, x)


def parse_layers(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.replace(",", "-").split("-") if s]
    except ValueError:
        raise ValueError(f"cannot parse layer list {text!r} (expected e.g. 784-1200-1200-10)") from None
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"invalid layer list {text!r}")
    return sizes
