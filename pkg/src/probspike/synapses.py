"""Sorted per-neuron synapse storage and piecewise-linear weight profiles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PWL_SEGMENTS = 5
PWL_SLOTS = PWL_SEGMENTS + 1


@dataclass
class PwlProfile:
    """Breakpoints of a piecewise-linear fit to a sorted magnitude curve.

    ``positions`` are 1-based list positions, ``weights`` the (positive)
    magnitudes at those positions. An empty profile marks an empty list.
    """

    positions: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def empty(self) -> bool:
        return len(self.positions) == 0

    def __call__(self, pos):
        """Evaluate the interpolated magnitude at (possibly fractional) positions."""
        if self.empty:
            return np.zeros_like(np.asarray(pos, dtype=float))
        return np.interp(pos, self.positions, self.weights)

    def padded(self) -> tuple[np.ndarray, np.ndarray, int]:
        """Fixed-width (6 slot) rows used by the vectorized inverse."""
        return pad_breakpoints(self.positions, self.weights)

    def __eq__(self, other):
        if not isinstance(other, PwlProfile):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.weights, other.weights
        )


def pad_breakpoints(positions, weights, slots: int = PWL_SLOTS):
    m = len(positions)
    pos = np.zeros(slots, dtype=np.int64)
    w = np.full(slots, -np.inf)
    pos[:m] = positions
    w[:m] = weights
    if m:
        pos[m:] = positions[-1]
    return pos, w, m


@dataclass
class SortedSynapseList:
    """Outgoing synapses of one sign, sorted by descending magnitude.

    ``w_extreme`` is the signed weight at position 1 (the largest excitatory
    weight, or the most negative inhibitory weight); it is 0.0 for an empty
    list.
    """

    weights: np.ndarray
    indices: np.ndarray
    w_extreme: float = 0.0
    pwl: PwlProfile = field(default_factory=PwlProfile)

    @property
    def n_max(self) -> int:
        return len(self.weights)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other):
        if not isinstance(other, SortedSynapseList):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.indices, other.indices)
            and self.w_extreme == other.w_extreme
            and self.pwl == other.pwl
        )

    def check(self) -> None:
        """Raise ValueError if the storage invariants do not hold."""
        if len(self.weights) != len(self.indices):
            raise ValueError("weights and indices differ in length")
        if self.n_max == 0:
            return
        w = self.weights
        if not (np.all(w > 0) or np.all(w < 0)):
            raise ValueError("list mixes signs or contains zeros")
        if np.any(np.diff(np.abs(w)) > 0):
            raise ValueError("magnitudes are not non-increasing")
        if self.w_extreme != w[0]:
            raise ValueError("w_extreme does not match position 1")


def _sorted_list(row: np.ndarray, targets: np.ndarray, segments: int) -> SortedSynapseList:
    # stable sort keeps original target order among equal magnitudes
    order = np.argsort(-np.abs(row[targets]), kind="stable")
    idx = targets[order].astype(np.int64)
    w = row[idx].astype(np.float64)
    lst = SortedSynapseList(weights=w, indices=idx, w_extreme=float(w[0]) if len(w) else 0.0)
    lst.pwl = fit_pwl(lst, segments)
    return lst


def build_sorted_lists(
    dense_row, index_offset: int = 0, segments: int = PWL_SEGMENTS
) -> tuple[SortedSynapseList, SortedSynapseList]:
    """Split one neuron's outgoing weights by sign and sort each by magnitude.

    ``dense_row[k]`` is the weight to target ``index_offset + k``. Zero
    weights are dropped.
    """
    row = np.asarray(dense_row, dtype=np.float64)
    if not np.all(np.isfinite(row)):
        raise ValueError("weight row contains non-finite values")
    exc = _sorted_list(row, np.flatnonzero(row > 0), segments)
    inh = _sorted_list(row, np.flatnonzero(row < 0), segments)
    if index_offset:
        exc.indices += index_offset
        inh.indices += index_offset
    return exc, inh


def merge_lists(exc: SortedSynapseList, inh: SortedSynapseList, width: int, index_offset: int = 0) -> np.ndarray:
    """Inverse of build_sorted_lists: scatter both lists back into a dense row."""
    row = np.zeros(width)
    for lst in (exc, inh):
        row[lst.indices - index_offset] = lst.weights
    return row


def pwl_positions(n: int, segments: int = PWL_SEGMENTS) -> np.ndarray:
    # equal spacing over [1, n], round half up, deduplicated
    k = np.arange(segments + 1)
    pos = 1 + (2 * k * (n - 1) + segments) // (2 * segments)
    return np.unique(pos)


def fit_pwl(lst: SortedSynapseList, segments: int = PWL_SEGMENTS) -> PwlProfile:
    """Fit a piecewise-linear profile with exact samples at equal-spaced positions."""
    if lst.n_max == 0:
        return PwlProfile()
    pos = pwl_positions(lst.n_max, segments)
    return PwlProfile(positions=pos, weights=np.abs(lst.weights[pos - 1]))


def pwl_termpt(positions, weights, count, n_max, r) -> np.ndarray:
    """Vectorized inverse of padded PWL profiles.

    All arguments broadcast row-wise: ``positions``/``weights`` are
    ``(..., 6)`` padded breakpoint rows (pad weight -inf), ``count`` the
    number of real breakpoints, ``n_max`` the list length and ``r`` the
    magnitude drawn for the spike. Returns the number of integer positions
    whose interpolated magnitude is >= r.
    """
    positions = np.asarray(positions)
    weights = np.asarray(weights, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    count = np.asarray(count)
    n_max = np.asarray(n_max)
    # last breakpoint with magnitude >= r (rows are non-increasing)
    k = (weights >= r[..., None]).sum(axis=-1) - 1
    k = np.maximum(k, 0)
    nxt = np.minimum(k + 1, positions.shape[-1] - 1)
    p0 = np.take_along_axis(positions, k[..., None], -1)[..., 0].astype(np.float64)
    p1 = np.take_along_axis(positions, nxt[..., None], -1)[..., 0].astype(np.float64)
    g0 = np.take_along_axis(weights, k[..., None], -1)[..., 0]
    g1 = np.take_along_axis(weights, nxt[..., None], -1)[..., 0]
    at_end = k >= count - 1
    with np.errstate(invalid="ignore", divide="ignore"):
        crossing = p0 + (g0 - r) * (p1 - p0) / (g0 - g1)
    crossing = np.where(at_end, n_max, crossing)
    t = np.floor(crossing).astype(np.int64)
    t = np.where(weights[..., 0] >= r, t, 0)
    t = np.where(count == 0, 0, t)
    return np.clip(t, 0, n_max)
