import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probspike.memory import AccessLedger
from probspike.network import Network, NoOutputActivityWarning, ResetMode, classify, step, update_neuron
from probspike.propagation import Strategy
from probspike.rng import SpikeRng

RNG = SpikeRng(0)


def chain(weights, threshold=1.0, reset=ResetMode.ZERO):
    """One neuron per layer, linked by the given weights."""
    sizes = [1] * (len(weights) + 1)
    return Network.from_dense(sizes, [np.array([[w]]) for w in weights], threshold, reset)


def run(net, inputs_per_step, strategy="det", ledger=None, rng=RNG):
    ledger = ledger or AccessLedger()
    return [step(net, s, strategy, ledger, rng) for s in inputs_per_step]


def test_empty_step_changes_nothing():
    net = chain([0.5])
    v = net.v_mem.copy()
    assert step(net, set(), Strategy.DET, AccessLedger(), RNG) == set()
    assert np.array_equal(net.v_mem, v)
    assert net.spike_counts.tolist() == [0]


def test_weight_equal_threshold_fires_first_spike():
    net = chain([1.0])
    assert step(net, {0}, Strategy.DET, AccessLedger(), RNG) == {1}


def test_half_threshold_fires_every_second_spike():
    net = chain([0.5])
    fired = run(net, [{0}] * 100)
    # v: 0.5, 1.0 -> fire, 0.5, 1.0 -> fire, ...
    assert [bool(f) for f in fired] == [False, True] * 50
    assert net.spike_counts.tolist() == [50]


def test_update_neuron_adds():
    net = chain([0.5])
    update_neuron(net, 1, 0.3)
    assert net.v_mem[1] == pytest.approx(0.3)
    net.v_mem[1] = 0.5
    update_neuron(net, 1, -0.2)
    assert net.v_mem[1] == pytest.approx(0.3)
    with pytest.raises(IndexError):
        update_neuron(net, 5, 1.0)


def test_firing_resolved_once_per_step():
    net = Network.from_dense([2, 1], [np.array([[0.4], [0.4]])], 0.7)
    assert step(net, {0, 1}, Strategy.DET, AccessLedger(), RNG) == {2}
    assert net.spike_counts.tolist() == [1]
    assert net.v_mem[2] == 0.0


def test_input_bounds():
    net = chain([0.5])
    with pytest.raises(IndexError):
        step(net, {1}, Strategy.DET, AccessLedger(), RNG)
    with pytest.raises(IndexError):
        step(net, {-1}, Strategy.DET, AccessLedger(), RNG)


def test_queue_discipline_one_step_per_layer():
    net = chain([1.0, 1.0, 1.0])
    fired = run(net, [{0}, set(), set(), set()])
    assert fired == [{1}, {2}, {3}, set()]


def test_reset_by_subtraction():
    net = chain([1.5], reset=ResetMode.SUBTRACT)
    step(net, {0}, Strategy.DET, AccessLedger(), RNG)
    assert net.v_mem[1] == pytest.approx(0.5)
    net = chain([1.5], reset=ResetMode.ZERO)
    step(net, {0}, Strategy.DET, AccessLedger(), RNG)
    assert net.v_mem[1] == 0.0


def test_negative_potential_allowed():
    net = chain([-0.7])
    run(net, [{0}] * 3)
    assert net.v_mem[1] == pytest.approx(-2.1)


def test_neuron_state_view():
    net = chain([1.0])
    step(net, {0}, Strategy.DET, AccessLedger(), RNG)
    s = net.neuron(1)
    assert s.spiked_this_step and s.v_mem == 0.0 and s.threshold == 1.0


def test_classify():
    net = Network.from_dense([1, 3], [np.ones((1, 3))], 1.0)
    net.spike_counts[:] = [0, 5, 3]
    assert classify(net) == 1
    net.spike_counts[:] = [2, 2, 0]
    assert classify(net) == 0
    net.spike_counts[:] = 0
    with pytest.warns(NoOutputActivityWarning):
        assert classify(net) == 0


def test_clone_is_independent():
    net = chain([1.0])
    other = net.clone()
    step(net, {0}, Strategy.DET, AccessLedger(), RNG)
    assert other.spike_counts.tolist() == [0]
    assert other.synapses is net.synapses


# dense reference ------------------------------------------------------------


def dense_reference(sizes, weights, thresholds, inputs, reset):
    """Per-step spike sets from v <- v + W^T s, independent of sorted storage."""
    v = [np.zeros(s) for s in sizes]
    prev = [np.zeros(s, dtype=bool) for s in sizes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    out = []
    for ins in inputs:
        s0 = np.zeros(sizes[0], dtype=bool)
        s0[list(ins)] = True
        prev[0] = s0
        for l, w in enumerate(weights):
            v[l + 1] = v[l + 1] + prev[l].astype(float) @ w
        fired = set()
        for l in range(1, len(sizes)):
            f = v[l] >= thresholds[l - 1]
            if reset is ResetMode.ZERO:
                v[l] = np.where(f, 0.0, v[l])
            else:
                v[l] = v[l] - np.where(f, thresholds[l - 1], 0.0)
            prev[l] = f
            fired |= set((np.flatnonzero(f) + offsets[l]).tolist())
        out.append(fired)
    return out


@st.composite
def random_nets(draw):
    sizes = draw(st.lists(st.integers(1, 6), min_size=2, max_size=4))
    seed = draw(st.integers(0, 2**32 - 1))
    rs = np.random.default_rng(seed)
    weights = [rs.normal(0.2, 0.6, (a, b)) * (rs.random((a, b)) > 0.3) for a, b in zip(sizes, sizes[1:])]
    thresholds = rs.uniform(0.5, 1.5, len(sizes) - 1)
    inputs = [set(np.flatnonzero(rs.random(sizes[0]) < 0.5).tolist()) for _ in range(30)]
    reset = draw(st.sampled_from(list(ResetMode)))
    return sizes, weights, thresholds, inputs, reset


@settings(max_examples=60, deadline=None)
@given(random_nets())
def test_det_matches_dense_reference(case):
    sizes, weights, thresholds, inputs, reset = case
    net = Network.from_dense(sizes, weights, thresholds, reset)
    assert run(net, inputs) == dense_reference(sizes, weights, thresholds, inputs, reset)


@pytest.mark.parametrize("strategy", list(Strategy))
def test_determinism(strategy):
    rs = np.random.default_rng(4)
    sizes = [8, 6, 3]
    weights = [rs.normal(0.2, 0.5, (a, b)) for a, b in zip(sizes, sizes[1:])]
    inputs = [set(np.flatnonzero(rs.random(8) < 0.5).tolist()) for _ in range(40)]
    results = []
    for _ in range(2):
        net = Network.from_dense(sizes, weights, 1.0)
        led = AccessLedger()
        spikes = run(net, inputs, strategy, led, SpikeRng(99, 3))
        results.append((spikes, led.as_row(), net.v_mem.tobytes()))
    assert results[0] == results[1]


def test_excitatory_only_accumulation_is_monotone():
    rs = np.random.default_rng(2)
    sizes = [5, 4, 2]
    weights = [rs.random((a, b)) for a, b in zip(sizes, sizes[1:])]
    net = Network.from_dense(sizes, weights, 1e9)
    prev = net.v_mem.copy()
    for s in range(30):
        step(net, set(np.flatnonzero(rs.random(5) < 0.5).tolist()), "pwl", AccessLedger(), SpikeRng(s))
        assert np.all(net.v_mem >= prev)
        prev = net.v_mem.copy()


def test_instrument_restricts_accounting():
    sizes = [2, 3, 2]
    weights = [np.full((2, 3), 1.0), np.full((3, 2), 1.0)]
    net = Network.from_dense(sizes, weights, 1.0)
    led = AccessLedger()
    step(net, {0, 1}, "det", led, RNG, instrument={0})
    step(net, set(), "det", led, RNG, instrument={0})
    # hidden spikes of step 2 are propagated but not charged
    assert led.spikes == 2 and led.weight_reads == 6
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert net.spike_counts.tolist() == [1, 1]
