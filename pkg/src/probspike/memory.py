"""Memory-access accounting: on-chip/off-chip read counters and MAPS."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class NoActivityWarning(UserWarning):
    """A ratio was requested over zero spikes (or a zero baseline)."""


def onchip_prefix(fraction: float, n_max):
    """Number of leading positions of a list held on-chip, floor(f * n).

    A small epsilon absorbs binary rounding (0.6 * 5 must give 3, not 2).
    """
    return np.floor(np.asarray(fraction) * np.asarray(n_max) + 1e-9).astype(np.int64)


@dataclass(frozen=True)
class PlacementPolicy:
    onchip_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.onchip_fraction <= 1.0:
            raise ValueError(f"onchip_fraction {self.onchip_fraction} outside [0, 1]")

    def prefix(self, n_max):
        return onchip_prefix(self.onchip_fraction, n_max)


@dataclass
class AccessLedger:
    """Read counters for one (strategy, placement) configuration."""

    policy: PlacementPolicy = PlacementPolicy()
    spikes: int = 0
    weight_reads_on: int = 0
    weight_reads_off: int = 0
    index_reads_on: int = 0
    index_reads_off: int = 0

    COUNTERS = ("spikes", "weight_reads_on", "weight_reads_off", "index_reads_on", "index_reads_off")

    @property
    def weight_reads(self) -> int:
        return self.weight_reads_on + self.weight_reads_off

    @property
    def index_reads(self) -> int:
        return self.index_reads_on + self.index_reads_off

    @property
    def total_reads(self) -> int:
        return self.weight_reads + self.index_reads

    @property
    def offchip_reads(self) -> int:
        return self.weight_reads_off + self.index_reads_off

    def add(self, *, spikes=0, weight_on=0, weight_off=0, index_on=0, index_off=0) -> None:
        self.spikes += int(spikes)
        self.weight_reads_on += int(weight_on)
        self.weight_reads_off += int(weight_off)
        self.index_reads_on += int(index_on)
        self.index_reads_off += int(index_off)

    def add_range(self, kind: str, count, n_max) -> None:
        """Charge reads of positions 1..count (vectorized over lists)."""
        count = np.asarray(count, dtype=np.int64)
        on = np.minimum(count, self.policy.prefix(n_max))
        n_on = int(on.sum())
        n_off = int(count.sum()) - n_on
        if kind == "weight":
            self.add(weight_on=n_on, weight_off=n_off)
        else:
            self.add(index_on=n_on, index_off=n_off)

    def merge(self, other: "AccessLedger") -> "AccessLedger":
        if other.policy != self.policy:
            raise ValueError("cannot merge ledgers with different placement policies")
        return AccessLedger(
            self.policy, *(getattr(self, c) + getattr(other, c) for c in self.COUNTERS)
        )

    def copy(self) -> "AccessLedger":
        return AccessLedger(self.policy, *(getattr(self, c) for c in self.COUNTERS))

    def as_row(self) -> dict:
        row = {"onchip_fraction": self.policy.onchip_fraction}
        row.update({c: getattr(self, c) for c in self.COUNTERS})
        return row


def record_read(ledger: AccessLedger, kind: str, position: int, n_max: int) -> None:
    """Charge a single read of 1-based ``position`` in a list of length ``n_max``."""
    if kind not in ("weight", "index"):
        raise ValueError(f"unknown read kind {kind!r}")
    if not 1 <= position <= n_max:
        raise IndexError(f"read of position {position} outside list of length {n_max}")
    on = position <= ledger.policy.prefix(n_max)
    if kind == "weight":
        ledger.add(weight_on=on, weight_off=not on)
    else:
        ledger.add(index_on=on, index_off=not on)


def record_positions(ledger: AccessLedger, kind: str, positions, n_max) -> None:
    """Vectorized record_read for arbitrary position arrays (with per-entry n_max)."""
    positions = np.asarray(positions, dtype=np.int64)
    n_max = np.broadcast_to(np.asarray(n_max, dtype=np.int64), positions.shape)
    if positions.size and (positions.min() < 1 or np.any(positions > n_max)):
        raise IndexError("read position outside its list")
    n_on = int((positions <= ledger.policy.prefix(n_max)).sum())
    n_off = positions.size - n_on
    if kind == "weight":
        ledger.add(weight_on=n_on, weight_off=n_off)
    else:
        ledger.add(index_on=n_on, index_off=n_off)


def maps(ledger: AccessLedger) -> float:
    """Memory accesses per spike; 0.0 (with a warning) when nothing spiked."""
    if ledger.spikes == 0:
        warnings.warn("MAPS over zero spikes reported as 0", NoActivityWarning, stacklevel=2)
        return 0.0
    return ledger.total_reads / ledger.spikes


def offchip_fraction_vs_det(ledger: AccessLedger, det_baseline: AccessLedger) -> float:
    """Off-chip reads normalized by total reads of DET with nothing on-chip."""
    if det_baseline.total_reads == 0:
        warnings.warn("DET baseline has no reads; ratio reported as nan", NoActivityWarning, stacklevel=2)
        return math.nan
    return ledger.offchip_reads / det_baseline.total_reads


def merge_all(ledgers) -> AccessLedger:
    ledgers = list(ledgers)
    out = ledgers[0].copy()
    for other in ledgers[1:]:
        out = out.merge(other)
    return out

