"""Spike propagation over sorted synapse lists.

A spiking neuron either updates every target with its true weight (DET) or,
probabilistically, updates only the first ``termpt`` entries of each sorted
list with the list's extremal weight. The strategies differ only in how the
termination point is found and in which memory reads that costs.

Every strategy consumes one uniform draw ``u`` in [0, 1) per spike per list:
``r = u * |w_extreme|`` for SCAN/BS/PWL, ``termpt = floor(u * (n + 1))`` for
RI and ``x = 1 + floor(u * n)`` for TR.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .memory import AccessLedger, record_positions
from .synapses import SortedSynapseList, pwl_termpt


class Strategy(enum.Enum):
    DET = "det"
    SCAN = "scan"
    BS = "bs"
    RI = "ri"
    TR = "tr"
    PWL = "pwl"

    @classmethod
    def parse(cls, name: "str | Strategy") -> "Strategy":
        if isinstance(name, Strategy):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strategy {name!r} (expected one of {valid})") from None

    @property
    def probabilistic(self) -> bool:
        return self is not Strategy.DET


@dataclass
class TerminationResult:
    """Outcome of one termination-point computation.

    ``termpt`` counts the synapses that receive the spike; ``weight_reads``
    lists the 1-based positions of the weight array that were read to find
    it. Index reads are positions 1..termpt and are charged when applied.
    """

    termpt: int
    applied_weight: float
    weight_reads: list[int] = field(default_factory=list)

    @property
    def index_reads(self) -> int:
        return self.termpt


def draw_r(lst: SortedSynapseList, u: float) -> float:
    """Map a uniform draw to r ~ U[0, |w_extreme|)."""
    if lst.n_max == 0:
        raise ValueError("no draw for an empty list")
    return u * abs(lst.w_extreme)


def termpt_scan(lst: SortedSynapseList, r: float) -> TerminationResult:
    mags = lst.magnitudes
    reads = []
    j = 0
    while j < lst.n_max:
        reads.append(j + 1)
        if mags[j] < r:
            break
        j += 1
    return TerminationResult(j, lst.w_extreme, reads)


def termpt_binary_search(lst: SortedSynapseList, r: float) -> TerminationResult:
    """Count of leading magnitudes >= r, found by bisection."""
    mags = lst.magnitudes
    lo, hi = 0, lst.n_max
    reads = []
    while lo < hi:
        mid = (lo + hi) // 2
        reads.append(mid + 1)
        if mags[mid] >= r:
            lo = mid + 1
        else:
            hi = mid
    return TerminationResult(lo, lst.w_extreme, reads)


def termpt_random_index(lst: SortedSynapseList, u: float) -> TerminationResult:
    n = lst.n_max
    return TerminationResult(min(int(u * (n + 1)), n), lst.w_extreme, [])


def _round_half_up(x):
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def termpt_transform(lst: SortedSynapseList, u: float) -> TerminationResult:
    """One weight lookup at a random position x, scaled to a list position."""
    n = lst.n_max
    x = min(1 + int(u * n), n)
    t = int(_round_half_up(abs(lst.weights[x - 1]) * n / abs(lst.w_extreme)))
    return TerminationResult(min(max(t, 0), n), lst.w_extreme, [x])


def termpt_pwl(lst: SortedSynapseList, u: float) -> TerminationResult:
    if lst.n_max == 0 or lst.pwl.empty:
        return TerminationResult(0, lst.w_extreme, [])
    return termpt_pwl_r(lst, draw_r(lst, u))


def termpt_pwl_r(lst: SortedSynapseList, r: float) -> TerminationResult:
    """PWL inverse for a given r (no weight-array reads)."""
    pos, w, m = lst.pwl.padded()
    t = int(pwl_termpt(pos, w, m, lst.n_max, np.float64(r)))
    return TerminationResult(t, lst.w_extreme, [])


def termpt(lst: SortedSynapseList, strategy: Strategy, u: float) -> TerminationResult:
    if strategy is Strategy.SCAN:
        return termpt_scan(lst, draw_r(lst, u))
    if strategy is Strategy.BS:
        return termpt_binary_search(lst, draw_r(lst, u))
    if strategy is Strategy.RI:
        return termpt_random_index(lst, u)
    if strategy is Strategy.TR:
        return termpt_transform(lst, u)
    if strategy is Strategy.PWL:
        return termpt_pwl(lst, u)
    raise ValueError(f"{strategy} has no termination point")


def apply_termination(lst: SortedSynapseList, result: TerminationResult, network, ledger: AccessLedger) -> None:
    """Apply w_extreme to the first ``termpt`` targets and charge their index reads."""
    k = result.termpt
    if k == 0:
        return
    ledger.add_range("index", k, lst.n_max)
    network.update_many(lst.indices[:k], result.applied_weight)


def propagate_deterministic(lst: SortedSynapseList, network, ledger: AccessLedger) -> None:
    if lst.n_max == 0:
        return
    # fully connected targets are implicit: only the weights are fetched
    ledger.add_range("weight", lst.n_max, lst.n_max)
    network.update_many(lst.indices, lst.weights)


def propagate(lst: SortedSynapseList, strategy: Strategy, u: float, network, ledger: AccessLedger) -> None:
    if lst.n_max == 0:
        return
    if strategy is Strategy.DET:
        propagate_deterministic(lst, network, ledger)
        return
    result = termpt(lst, strategy, u)
    if result.weight_reads:
        record_positions(ledger, "weight", result.weight_reads, lst.n_max)
    apply_termination(lst, result, network, ledger)


def expected_termpt(lst: SortedSynapseList) -> float:
    """Mean termination point for r ~ U[0, |w_extreme|]: sum |w| / |w_extreme|."""
    if lst.n_max == 0:
        return 0.0
    return float(np.sum(lst.magnitudes) / abs(lst.w_extreme))


# vectorized kernels --------------------------------------------------------


def scan_termpts(mags: np.ndarray, r: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """Leading-run length of ``mags >= r`` for each r (literal scan semantics)."""
    mags = np.asarray(mags, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    out = np.empty(r.shape[0], dtype=np.int64)
    for s in range(0, r.shape[0], chunk):
        fail = mags[None, :] < r[s : s + chunk, None]
        first = np.argmax(fail, axis=1)
        out[s : s + chunk] = np.where(fail.any(axis=1), first, mags.shape[0])
    return out


@dataclass
class BatchTermination:
    """Termination points for many (spike, list) pairs.

    Weight reads are either a leading range (``weight_range`` reads of
    positions 1..k) or explicit positions (``weight_positions``, 0 = none).
    """

    termpt: np.ndarray
    weight_range: np.ndarray | None = None
    weight_positions: np.ndarray | None = None


def batch_bisect(mags: np.ndarray, rows: np.ndarray, n: np.ndarray, r: np.ndarray):
    """Row-wise bisection matching termpt_binary_search, with probe positions.

    ``mags[rows[k]]`` is the sorted magnitude row searched for ``r[k]``.
    """
    lo = np.zeros_like(n)
    hi = n.copy()
    probes = []
    last = mags.shape[1] - 1
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) // 2
        ge = mags[rows, np.minimum(mid, last)] >= r
        probes.append(np.where(active, mid + 1, 0))
        lo = np.where(active & ge, mid + 1, lo)
        hi = np.where(active & ~ge, mid, hi)
    pos = np.stack(probes, axis=1) if probes else np.zeros((len(n), 0), dtype=np.int64)
    return lo, pos


def batch_termpt(strategy: Strategy, u, rows, n, wext_abs, mags=None, pwl=None) -> BatchTermination:
    """Termination points for many spikes on non-empty lists.

    ``rows`` selects, per spike, a row of the per-list tables: ``mags`` are
    sorted magnitudes padded with -inf, ``pwl`` a tuple of padded breakpoint
    tables (positions, weights, count). ``n`` and ``wext_abs`` are already
    gathered per spike.
    """
    u = np.asarray(u, dtype=np.float64)
    n = np.asarray(n, dtype=np.int64)
    if strategy is Strategy.RI:
        return BatchTermination(np.minimum(np.floor(u * (n + 1)).astype(np.int64), n))
    if strategy is Strategy.TR:
        x = np.minimum(1 + np.floor(u * n).astype(np.int64), n)
        w = mags[rows, x - 1]
        t = np.clip(_round_half_up(w * n / wext_abs), 0, n)
        return BatchTermination(t, weight_positions=x[:, None])
    r = u * wext_abs
    if strategy is Strategy.SCAN:
        t = scan_rows(mags[rows], r)
        return BatchTermination(t, weight_range=np.minimum(t + 1, n))
    if strategy is Strategy.BS:
        t, probes = batch_bisect(mags, rows, n, r)
        return BatchTermination(t, weight_positions=probes)
    if strategy is Strategy.PWL:
        pos, w, m = pwl
        return BatchTermination(pwl_termpt(pos[rows], w[rows], m[rows], n, r))
    raise ValueError(f"{strategy} has no termination point")


def scan_rows(mags: np.ndarray, r: np.ndarray) -> np.ndarray:
    # padding is -inf so it always fails the comparison
    fail = mags < r[:, None]
    return np.argmax(np.concatenate([fail, np.ones((len(r), 1), bool)], axis=1), axis=1)


def theoretical_bs_reads(n_max: int) -> int:
    return math.ceil(math.log2(n_max)) + 1 if n_max > 0 else 0
