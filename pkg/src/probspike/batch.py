"""Vectorized simulation of many images at once.

Numerically this is the same engine as :func:`probspike.network.step`: the
same counter-based draws, termination points and read accounting, laid out
as dense per-layer tables so one timestep for a whole batch of images is a
handful of array operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .encoding import RateEncoder, encode_batch
from .memory import AccessLedger
from .network import Network, ResetMode
from .propagation import Strategy, batch_termpt
from .synapses import PWL_SLOTS, pad_breakpoints

@dataclass
class SignTables:
    """Padded per-neuron tables for one sign of one presynaptic layer."""

    n: np.ndarray  # (pre,)
    wext: np.ndarray  # (pre,) signed
    mags: np.ndarray  # (pre, width), -inf padded
    targets: np.ndarray  # (pre, width) local target index per sorted position
    pwl_pos: np.ndarray
    pwl_w: np.ndarray
    pwl_m: np.ndarray

    @classmethod
    def build(cls, lists, offset: int) -> "SignTables":
        n = np.array([l.n_max for l in lists], dtype=np.int64)
        width = max(1, int(n.max()) if len(n) else 1)
        mags = np.full((len(lists), width), -np.inf)
        targets = np.zeros((len(lists), width), dtype=np.int64)
        pos = np.zeros((len(lists), PWL_SLOTS), dtype=np.int64)
        w = np.full((len(lists), PWL_SLOTS), -np.inf)
        m = np.zeros(len(lists), dtype=np.int64)
        for k, lst in enumerate(lists):
            mags[k, : lst.n_max] = lst.magnitudes
            targets[k, : lst.n_max] = lst.indices - offset
            pos[k], w[k], m[k] = pad_breakpoints(lst.pwl.positions, lst.pwl.weights)
        wext = np.array([l.w_extreme for l in lists], dtype=np.float64)
        return cls(n, wext, mags, targets, pos, w, m)


@dataclass
class LayerTables:
    layer: int
    first: int  # global id of neuron 0 of this layer
    dense: np.ndarray  # (pre, post)
    exc: SignTables
    inh: SignTables

    @property
    def has_synapses(self) -> np.ndarray:
        return (self.exc.n + self.inh.n) > 0


def build_tables(network: Network) -> list[LayerTables]:
    tables = []
    for l in range(network.n_layers - 1):
        rng_l = network.layer_range(l)
        off = int(network.offsets[l + 1])
        post = network.layer_sizes[l + 1]
        pairs = [network.synapses[i] for i in rng_l]
        tables.append(
            LayerTables(
                layer=l,
                first=rng_l.start,
                dense=network.dense_weights(l),
                exc=SignTables.build([p[0] for p in pairs], off),
                inh=SignTables.build([p[1] for p in pairs], off),
            )
        )
    return tables


class BatchSimulator:
    """Simulate a batch of images through one network with one strategy.

    ``ledgers`` may hold several placement policies; all see the same spikes.
    ``instrument`` limits accounting to spikes of the given presynaptic layers.
    """

    def __init__(self, network: Network, strategy, ledgers=(), instrument=None, tables=None):
        self.network = network
        self.strategy = Strategy.parse(strategy)
        self.ledgers = list(ledgers)
        self.instrument = None if instrument is None else set(instrument)
        self.tables = tables if tables is not None else build_tables(network)
        sizes = network.layer_sizes
        self.thresholds = [network.thresholds[r.start : r.stop] for r in map(network.layer_range, range(len(sizes)))]

    def reset(self, batch: int, seed: int, streams) -> None:
        sizes = self.network.layer_sizes
        self.seed = int(seed)
        self.streams = np.asarray(streams, dtype=np.int64)
        if self.streams.shape != (batch,):
            raise ValueError("need one stream id per image")
        self.v = [None] + [np.zeros((batch, s)) for s in sizes[1:]]
        self.queued = [np.zeros((batch, s), dtype=bool) for s in sizes]
        self.counts = np.zeros((batch, sizes[-1]), dtype=np.int64)
        self.t = 0

    # accounting --------------------------------------------------------------

    def _charged(self, layer: int) -> list[AccessLedger]:
        if self.instrument is not None and layer not in self.instrument:
            return []
        return self.ledgers

    # propagation -------------------------------------------------------------

    def _propagate_det(self, tab: LayerTables, spikes: np.ndarray, v_next: np.ndarray) -> None:
        v_next += spikes.astype(np.float64) @ tab.dense
        ledgers = self._charged(tab.layer)
        if not ledgers:
            return
        per_neuron = spikes.sum(axis=0)
        n_spk = int(per_neuron[tab.has_synapses].sum())
        for led in ledgers:
            on = led.policy.prefix(tab.exc.n) + led.policy.prefix(tab.inh.n)
            total = tab.exc.n + tab.inh.n
            n_on = int(per_neuron @ on)
            led.add(spikes=n_spk, weight_on=n_on, weight_off=int(per_neuron @ total) - n_on)

    def _sign_update(self, st: SignTables, purpose: int, tab: LayerTables, b, i, ledgers):
        """Per-pair termination points for one sign; returns (pairs mask rows, termpt)."""
        live = st.n[i] > 0
        bl, il = b[live], i[live]
        if bl.size == 0:
            return live, np.zeros(0, dtype=np.int64)
        u = rng_mod.counter_uniform(self.seed, self.streams[bl], purpose, self.t, il + tab.first)
        n = st.n[il]
        res = batch_termpt(
            self.strategy, u, il, n, np.abs(st.wext[il]), st.mags, (st.pwl_pos, st.pwl_w, st.pwl_m)
        )
        for led in ledgers:
            if res.weight_range is not None:
                led.add_range("weight", res.weight_range, n)
            elif res.weight_positions is not None:
                p = res.weight_positions
                hit = p > 0
                n_on = int((hit & (p <= led.policy.prefix(n)[:, None])).sum())
                led.add(weight_on=n_on, weight_off=int(hit.sum()) - n_on)
            led.add_range("index", res.termpt, n)
        return live, res.termpt

    def _propagate_prob(self, tab: LayerTables, spikes: np.ndarray, v_next: np.ndarray) -> None:
        b, i = np.nonzero(spikes & tab.has_synapses[None, :])
        if b.size == 0:
            return
        ledgers = self._charged(tab.layer)
        for led in ledgers:
            led.add(spikes=b.size)
        live_e, k_e = self._sign_update(tab.exc, rng_mod.EXCITATORY, tab, b, i, ledgers)
        live_i, k_i = self._sign_update(tab.inh, rng_mod.INHIBITORY, tab, b, i, ledgers)
        batch, post = v_next.shape
        lin, w = [], []
        for st, live, k in ((tab.exc, live_e, k_e), (tab.inh, live_i, k_i)):
            if k.size == 0 or not k.any():
                continue
            # expand each spike into its first k sorted positions
            owner = np.repeat(np.arange(k.size), k)
            pos = np.arange(owner.size) - np.repeat(np.cumsum(k) - k, k)
            src = i[live][owner]
            lin.append(b[live][owner] * post + st.targets[src, pos])
            w.append(st.wext[src])
        if lin:
            acc = np.bincount(np.concatenate(lin), np.concatenate(w), minlength=batch * post)
            v_next += acc.reshape(batch, post)

    # timestep ------------------------------------------------------------------

    def step(self, input_spikes: np.ndarray) -> list[np.ndarray]:
        """Advance every image by one timestep; returns fired masks per layer."""
        sizes = self.network.layer_sizes
        for tab in self.tables:
            l = tab.layer
            spikes = input_spikes if l == 0 else self.queued[l]
            if self.strategy is Strategy.DET:
                self._propagate_det(tab, spikes, self.v[l + 1])
            else:
                self._propagate_prob(tab, spikes, self.v[l + 1])
        fired = [np.zeros_like(input_spikes)]
        for l in range(1, len(sizes)):
            v = self.v[l]
            f = v >= self.thresholds[l]
            if self.network.reset is ResetMode.ZERO:
                v[f] = 0.0
            else:
                v -= np.where(f, self.thresholds[l], 0.0)
            fired.append(f)
            self.queued[l] = f
        self.counts += fired[-1]
        self.t += 1
        return fired

    def run(self, intensities, seed: int, streams, checkpoints, encoder: RateEncoder | None = None):
        """Simulate ``max(checkpoints)`` steps; returns {checkpoint: counts copy}."""
        probs = (encoder or RateEncoder()).probabilities(intensities)
        self.reset(probs.shape[0], seed, streams)
        checkpoints = sorted(int(c) for c in checkpoints)
        snaps = {}
        for t in range(checkpoints[-1]):
            self.step(encode_batch(probs, self.seed, self.streams, t))
            if t + 1 in checkpoints:
                snaps[t + 1] = self.counts.copy()
        return snaps


def classify_counts(counts: np.ndarray) -> np.ndarray:
    """Row-wise argmax, lowest index on ties (rows of zeros give class 0)."""
    return np.argmax(counts, axis=-1)
