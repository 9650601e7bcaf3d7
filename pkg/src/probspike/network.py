"""Layered integrate-and-fire network and the timestep loop.

A timestep propagates every spike queued by the previous step together with
the injected input spikes, then resolves firing once per neuron. Neurons that
fire are reset and queued for the next step, so a spike generated at step t
reaches its targets at step t + 1.
"""

from __future__ import annotations

import copy
import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .memory import AccessLedger
from .propagation import Strategy, propagate
from .synapses import PWL_SEGMENTS, SortedSynapseList, build_sorted_lists, merge_lists


class ResetMode(enum.IntEnum):
    ZERO = 0
    SUBTRACT = 1


class NoOutputActivityWarning(UserWarning):
    pass


@dataclass
class NeuronState:
    v_mem: float
    threshold: float
    spiked_this_step: bool = False


@dataclass
class Network:
    """Feed-forward fully connected spiking network.

    ``synapses[i]`` is the (excitatory, inhibitory) pair of sorted lists of
    neuron ``i``; output neurons have empty lists. Targets of a neuron in
    layer l are always neurons of layer l + 1 (global ids).
    """

    layer_sizes: list[int]
    thresholds: np.ndarray
    synapses: list[tuple[SortedSynapseList, SortedSynapseList]]
    reset: ResetMode = ResetMode.ZERO
    v_mem: np.ndarray = field(default=None, repr=False)
    spiked: np.ndarray = field(default=None, repr=False)
    spike_counts: np.ndarray = field(default=None, repr=False)
    queue: list[int] = field(default_factory=list, repr=False)
    t: int = 0

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if len(self.layer_sizes) < 2:
            raise ValueError("a network needs at least an input and an output layer")
        self.offsets = np.concatenate([[0], np.cumsum(self.layer_sizes)]).astype(np.int64)
        n = int(self.offsets[-1])
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        if self.thresholds.shape != (n,):
            raise ValueError(f"expected {n} thresholds, got {self.thresholds.shape}")
        if len(self.synapses) != n:
            raise ValueError(f"expected {n} synapse pairs, got {len(self.synapses)}")
        self.reset = ResetMode(self.reset)
        if self.v_mem is None:
            self.reset_state()

    @classmethod
    def from_dense(cls, layer_sizes, weights, thresholds, reset=ResetMode.ZERO, segments=PWL_SEGMENTS):
        """Build from dense (pre, post) weight matrices, one per layer pair.

        ``thresholds`` is a scalar, one value per layer, or one per neuron.
        """
        layer_sizes = [int(s) for s in layer_sizes]
        offsets = np.concatenate([[0], np.cumsum(layer_sizes)])
        synapses = []
        for l, w in enumerate(weights):
            w = np.asarray(w, dtype=np.float64)
            if w.shape != (layer_sizes[l], layer_sizes[l + 1]):
                raise ValueError(f"layer {l} matrix has shape {w.shape}")
            for row in w:
                synapses.append(build_sorted_lists(row, int(offsets[l + 1]), segments))
        empty = build_sorted_lists(np.zeros(0))
        synapses.extend(empty for _ in range(layer_sizes[-1]))
        return cls(layer_sizes, expand_thresholds(thresholds, layer_sizes), synapses, reset)

    # structure -----------------------------------------------------------

    @property
    def n_neurons(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes)

    def layer_range(self, layer: int) -> range:
        return range(int(self.offsets[layer]), int(self.offsets[layer + 1]))

    @property
    def input_range(self) -> range:
        return self.layer_range(0)

    @property
    def output_range(self) -> range:
        return self.layer_range(self.n_layers - 1)

    def layer_of(self, neuron: int) -> int:
        return int(np.searchsorted(self.offsets, neuron, side="right") - 1)

    def dense_weights(self, layer: int) -> np.ndarray:
        """Reassemble the dense (pre, post) matrix of one layer pair."""
        post = self.layer_sizes[layer + 1]
        off = int(self.offsets[layer + 1])
        return np.stack([merge_lists(*self.synapses[i], post, off) for i in self.layer_range(layer)])

    def neuron(self, j: int) -> NeuronState:
        return NeuronState(float(self.v_mem[j]), float(self.thresholds[j]), bool(self.spiked[j]))

    # state ---------------------------------------------------------------

    def reset_state(self) -> None:
        n = self.n_neurons
        self.v_mem = np.zeros(n)
        self.spiked = np.zeros(n, dtype=bool)
        self.spike_counts = np.zeros(self.layer_sizes[-1], dtype=np.int64)
        self.queue = []
        self.t = 0

    def clone(self) -> "Network":
        """Fresh simulation state sharing the (read-only) synapse lists."""
        other = copy.copy(self)
        other.reset_state()
        return other

    def update_neuron(self, j: int, w: float) -> None:
        if not 0 <= j < self.n_neurons:
            raise IndexError(f"neuron {j} out of range")
        self.v_mem[j] += w

    def update_many(self, targets: np.ndarray, w) -> None:
        # targets within one list are distinct, so fancy-index addition is exact
        self.v_mem[targets] += w


def expand_thresholds(thresholds, layer_sizes) -> np.ndarray:
    n = int(sum(layer_sizes))
    th = np.asarray(thresholds, dtype=np.float64)
    if th.ndim == 0:
        out = np.full(n, float(th))
    elif th.shape == (len(layer_sizes),):
        out = np.repeat(th, layer_sizes)
    elif th.shape == (len(layer_sizes) - 1,):
        out = np.repeat(np.concatenate([[1.0], th]), layer_sizes)
    elif th.shape == (n,):
        out = th.copy()
    else:
        raise ValueError(f"cannot expand thresholds of shape {th.shape}")
    if np.any(out[layer_sizes[0]:] <= 0):
        raise ValueError("thresholds must be positive")
    return out


def step(
    network: Network,
    input_spikes,
    strategy: Strategy,
    ledger: AccessLedger,
    rng: rng_mod.SpikeRng,
    instrument=None,
) -> set[int]:
    """Advance one timestep; returns the ids of neurons that fired.

    ``instrument`` optionally restricts accounting to spikes emitted by the
    given presynaptic layers (all layers by default).
    """
    strategy = Strategy.parse(strategy)
    inputs = sorted({int(i) for i in input_spikes})
    n_in = network.layer_sizes[0]
    for i in inputs:
        if not 0 <= i < n_in:
            raise IndexError(f"input spike {i} outside input layer [0, {n_in})")
    t = network.t
    pending = sorted(set(network.queue).union(inputs))
    network.queue = []
    network.spiked[:] = False
    unrecorded = AccessLedger(ledger.policy)
    for i in pending:
        exc, inh = network.synapses[i]
        if exc.n_max == 0 and inh.n_max == 0:
            continue
        led = ledger if instrument is None or network.layer_of(i) in instrument else unrecorded
        led.add(spikes=1)
        for purpose, lst in ((rng_mod.EXCITATORY, exc), (rng_mod.INHIBITORY, inh)):
            if lst.n_max == 0:
                continue
            u = rng.uniform1(purpose, t, i) if strategy.probabilistic else 0.0
            propagate(lst, strategy, u, network, led)

    first = network.layer_sizes[0]
    fired = np.flatnonzero(network.v_mem[first:] >= network.thresholds[first:]) + first
    if fired.size:
        if network.reset is ResetMode.ZERO:
            network.v_mem[fired] = 0.0
        else:
            network.v_mem[fired] -= network.thresholds[fired]
        network.spiked[fired] = True
        out0 = network.output_range.start
        outs = fired[fired >= out0]
        network.spike_counts[outs - out0] += 1
        network.queue = [int(j) for j in fired[fired < out0]]
    network.t += 1
    return {int(j) for j in fired}


def classify(network: Network) -> int:
    """Argmax of output spike counts, lowest index on ties."""
    counts = network.spike_counts
    if not counts.any():
        warnings.warn("no output activity; returning class 0", NoOutputActivityWarning, stacklevel=2)
    return int(np.argmax(counts))


def update_neuron(network: Network, j: int, w: float) -> None:
    network.update_neuron(j, w)
