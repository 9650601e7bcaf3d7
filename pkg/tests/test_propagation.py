import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from probspike.memory import AccessLedger, PlacementPolicy
from probspike.propagation import (
    Strategy,
    TerminationResult,
    apply_termination,
    batch_termpt,
    draw_r,
    expected_termpt,
    propagate,
    propagate_deterministic,
    scan_termpts,
    termpt_binary_search,
    termpt_pwl,
    termpt_pwl_r,
    termpt_random_index,
    termpt_scan,
    termpt_transform,
    theoretical_bs_reads,
)
from probspike.rng import counter_uniform
from probspike.synapses import SortedSynapseList, fit_pwl


def make_list(mags, sign=1.0, offset=0):
    w = sign * np.asarray(mags, dtype=float)
    lst = SortedSynapseList(w, np.arange(len(w)) + offset, float(w[0]) if len(w) else 0.0)
    lst.pwl = fit_pwl(lst)
    return lst


class Recorder:
    """Stands in for a network: records every postsynaptic update."""

    def __init__(self, n=16):
        self.v_mem = np.zeros(n)
        self.updates = []

    def update_many(self, targets, w):
        w = np.broadcast_to(w, np.shape(targets))
        self.updates += list(zip(np.asarray(targets).tolist(), np.asarray(w).tolist()))
        self.v_mem[targets] += w


L3 = make_list([0.9, 0.6, 0.3])


def uniforms(n, seed=0):
    return counter_uniform(seed, 0, 1, 0, np.arange(n))


# scan / binary search -------------------------------------------------------


def test_scan_examples():
    r = termpt_scan(L3, 0.5)
    assert r.termpt == 2 and r.weight_reads == [1, 2, 3]
    r = termpt_scan(L3, 0.95)
    assert r.termpt == 0 and r.weight_reads == [1]
    r = termpt_scan(L3, 0.0)
    assert r.termpt == 3 and r.weight_reads == [1, 2, 3]


def test_binary_search_examples():
    r = termpt_binary_search(L3, 0.5)
    assert r.termpt == 2
    assert len(r.weight_reads) <= 3
    one = make_list([0.7])
    assert termpt_binary_search(one, 0.7).termpt == 1
    assert termpt_scan(one, 0.7).termpt == 1


def test_boundary_r_equal_to_weight_propagates():
    for r, want in [(0.9, 1), (0.6, 2), (0.3, 3)]:
        assert termpt_scan(L3, r).termpt == want
        assert termpt_binary_search(L3, r).termpt == want


sorted_lists = st.lists(st.floats(1e-6, 10.0), min_size=1, max_size=64).map(
    lambda xs: make_list(sorted(xs, reverse=True))
)


@settings(max_examples=300)
@given(sorted_lists, st.floats(0, 1))
def test_bs_equals_scan_equals_count(lst, u):
    r = draw_r(lst, u)
    count = int(np.sum(lst.magnitudes >= r))
    assert termpt_scan(lst, r).termpt == count
    assert termpt_binary_search(lst, r).termpt == count


@settings(max_examples=100)
@given(sorted_lists)
def test_bs_equals_scan_on_every_boundary(lst):
    for r in [0.0, *lst.magnitudes, abs(lst.w_extreme), *np.nextafter(lst.magnitudes, 0)]:
        assert termpt_binary_search(lst, r).termpt == termpt_scan(lst, r).termpt


@settings(max_examples=100)
@given(sorted_lists, st.floats(0, 1))
def test_bs_read_bound(lst, u):
    res = termpt_binary_search(lst, draw_r(lst, u))
    assert len(res.weight_reads) <= theoretical_bs_reads(lst.n_max)
    assert all(1 <= p <= lst.n_max for p in res.weight_reads)


@settings(max_examples=100)
@given(sorted_lists, st.floats(0, 1), st.floats(0, 1))
def test_termination_monotone_in_r(lst, a, b):
    r1, r2 = sorted([draw_r(lst, a), draw_r(lst, b)])
    assert termpt_scan(lst, r1).termpt >= termpt_scan(lst, r2).termpt
    assert termpt_binary_search(lst, r1).termpt >= termpt_binary_search(lst, r2).termpt
    assert termpt_pwl_r(lst, r1).termpt >= termpt_pwl_r(lst, r2).termpt


def test_scan_termpts_vectorized_matches_scalar():
    mags = np.sort(np.random.default_rng(1).random(50))[::-1]
    lst = make_list(mags)
    r = uniforms(2000) * mags[0]
    assert scan_termpts(mags, r).tolist() == [termpt_scan(lst, x).termpt for x in r]


# random index ---------------------------------------------------------------


def test_random_index_uniform():
    n = 10
    u = uniforms(10**6, seed=3)
    t = batch_termpt(Strategy.RI, u, None, np.full(u.size, n), None).termpt
    freq = np.bincount(t, minlength=n + 1) / u.size
    assert np.all(np.abs(freq - 1 / 11) < 0.002)
    lst = make_list(np.linspace(1, 0.1, n))
    assert [termpt_random_index(lst, x).termpt for x in u[:2000]] == t[:2000].tolist()


def test_random_index_small_and_reads():
    one = make_list([0.4])
    assert {termpt_random_index(one, u).termpt for u in uniforms(100)} == {0, 1}
    assert termpt_random_index(L3, 0.99).weight_reads == []


def test_random_index_ignores_profile():
    # mean termpt is n/2 whatever the weights: the drawback of RI
    u = uniforms(10**5, seed=5)
    t = batch_termpt(Strategy.RI, u, None, np.full(u.size, 100), None).termpt
    assert t.mean() == pytest.approx(50, abs=0.3)


# weight transform -----------------------------------------------------------


def test_transform_formula():
    lst = make_list([1.0, 0.75, 0.5, 0.25])
    res = termpt_transform(lst, 0.3)  # x = 1 + floor(0.3 * 4) = 2
    assert res.weight_reads == [2]
    assert res.termpt == 3


def test_transform_constant_profile_is_full_fanout():
    lst = make_list([0.5] * 7)
    assert {termpt_transform(lst, u).termpt for u in uniforms(200)} == {7}


@settings(max_examples=100)
@given(sorted_lists, st.floats(0, 1, exclude_max=True))
def test_transform_single_weight_read(lst, u):
    res = termpt_transform(lst, u)
    assert len(res.weight_reads) == 1
    assert 0 <= res.termpt <= lst.n_max


def test_transform_matches_bs_on_linear_profile():
    n = 50
    lst = make_list((n - np.arange(n)) / n)
    u1, u2 = uniforms(10**5, 1), uniforms(10**5, 2)
    n_arr = np.full(u1.size, n)
    rows = np.zeros(u1.size, dtype=np.int64)
    mags = lst.magnitudes[None, :]
    tr = batch_termpt(Strategy.TR, u1, rows, n_arr, 1.0, mags).termpt
    bs = batch_termpt(Strategy.BS, u2, rows, n_arr, 1.0, mags).termpt
    table = np.array([np.bincount(tr, minlength=n + 1), np.bincount(bs, minlength=n + 1)])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table).pvalue > 0.01


# piecewise linear -----------------------------------------------------------


def test_pwl_exact_on_linear_profile():
    n = 100
    lst = make_list((n - np.arange(n)) / n)
    for r in uniforms(5000, 7):
        assert termpt_pwl_r(lst, r).termpt == termpt_scan(lst, r).termpt


def test_pwl_endpoints():
    lst = make_list(np.exp(-5 * np.arange(40) / 40))
    assert termpt_pwl_r(lst, abs(lst.w_extreme)).termpt in (0, 1)
    assert termpt_pwl_r(lst, 0.0).termpt == lst.n_max
    assert termpt_pwl(lst, 0.5).weight_reads == []


def test_pwl_flat_segment_takes_largest_position():
    lst = make_list([1.0] * 10 + [0.5] * 10)
    # breakpoints 1, 5, 9, 12, 16, 20 -> 1.0, 1.0, 1.0, 0.5, 0.5, 0.5
    assert termpt_pwl_r(lst, 1.0).termpt == 9
    assert termpt_pwl_r(lst, 0.5).termpt == 20


def test_pwl_empty_list():
    empty = make_list([])
    assert termpt_pwl(empty, 0.3).termpt == 0


def test_pwl_mean_matches_interpolant_area():
    n = 200
    lst = make_list(np.exp(-5 * np.arange(n) / n))
    u = uniforms(10**6, 11)
    rows = np.zeros(u.size, dtype=np.int64)
    n_arr = np.full(u.size, n)
    pos, w, m = lst.pwl.padded()
    pwl = (pos[None], w[None], np.array([m]))
    t_pwl = batch_termpt(Strategy.PWL, u, rows, n_arr, 1.0, lst.magnitudes[None], pwl).termpt
    t_bs = batch_termpt(Strategy.BS, u, rows, n_arr, 1.0, lst.magnitudes[None]).termpt
    # termpt counts positions with g(p) >= r, so its mean is sum(g)/w_ext
    expected = lst.pwl(np.arange(1, n + 1)).sum()
    assert abs(t_pwl.mean() / expected - 1) < 0.005
    # chords lie above a convex profile, so PWL over-shoots the exact mean
    assert t_bs.mean() < t_pwl.mean() < 1.1 * t_bs.mean()
    assert [termpt_pwl(lst, x).termpt for x in u[:500]] == t_pwl[:500].tolist()


# applying and accounting ----------------------------------------------------


def test_apply_uses_extreme_weight():
    exc = SortedSynapseList(np.array([0.9, 0.4, 0.1]), np.array([5, 2, 7]), 0.9)
    net = Recorder()
    apply_termination(exc, TerminationResult(2, 0.9), net, AccessLedger())
    assert net.updates == [(5, 0.9), (2, 0.9)]
    inh = SortedSynapseList(np.array([-0.5, -0.2]), np.array([1, 3]), -0.5)
    net = Recorder()
    apply_termination(inh, TerminationResult(1, -0.5), net, AccessLedger())
    assert net.updates == [(1, -0.5)]
    net = Recorder()
    led = AccessLedger()
    apply_termination(exc, TerminationResult(0, 0.9), net, led)
    assert net.updates == [] and led.total_reads == 0


def test_deterministic_full_fanout():
    net = Recorder()
    led = AccessLedger()
    lst = SortedSynapseList(np.array([0.9, 0.4, 0.1]), np.array([5, 2, 7]), 0.9)
    propagate_deterministic(lst, net, led)
    assert net.updates == [(5, 0.9), (2, 0.4), (7, 0.1)]
    assert led.weight_reads == 3 and led.index_reads == 0
    led = AccessLedger()
    propagate_deterministic(make_list([]), Recorder(), led)
    assert led.total_reads == 0


def test_deterministic_fanout_1200_maps():
    lst = make_list(np.linspace(1, 0.01, 1200))
    led = AccessLedger()
    led.add(spikes=1)
    propagate_deterministic(lst, Recorder(1200), led)
    assert led.total_reads / led.spikes == 1200


@pytest.mark.parametrize("strategy", [s for s in Strategy if s.probabilistic])
@settings(max_examples=30)
@given(lst=sorted_lists, u=st.floats(0, 1, exclude_max=True))
def test_sign_safety(strategy, lst, u):
    for sign in (1.0, -1.0):
        signed = make_list(lst.magnitudes, sign)
        net = Recorder(64)
        propagate(signed, strategy, u, net, AccessLedger())
        assert np.all(net.v_mem * sign >= 0)


def test_read_costs_per_strategy():
    lst = make_list(np.linspace(1, 0.05, 40))
    for u in uniforms(200, 13):
        for strategy, weight_reads in [(Strategy.RI, 0), (Strategy.TR, 1), (Strategy.PWL, 0)]:
            led = AccessLedger()
            propagate(lst, strategy, u, Recorder(64), led)
            assert led.weight_reads == weight_reads


def test_scan_maps_hand_count():
    # termpt 2 on n_max 3: 3 weight reads + 2 index reads
    led = AccessLedger()
    led.add(spikes=1)
    propagate(L3, Strategy.SCAN, 0.5 / 0.9, Recorder(), led)
    assert (led.weight_reads, led.index_reads) == (3, 2)
    assert led.total_reads / led.spikes == 5


def test_onchip_split_in_propagation():
    lst = make_list(np.linspace(1, 0.1, 10))
    led = AccessLedger(PlacementPolicy(0.4))
    propagate(lst, Strategy.DET, 0.0, Recorder(), led)
    assert (led.weight_reads_on, led.weight_reads_off) == (4, 6)


# draws and expectation ------------------------------------------------------


def test_draw_r_range_and_mean():
    lst = make_list([2.0, 1.0])
    u = uniforms(10**6, 17)
    r = u * abs(lst.w_extreme)
    assert draw_r(lst, float(u[0])) == r[0]
    assert r.min() >= 0 and r.max() < 2.0
    assert r.mean() == pytest.approx(1.0, abs=0.01)


def test_draw_r_empty_list():
    with pytest.raises(ValueError):
        draw_r(make_list([]), 0.5)


def test_expected_termpt():
    assert expected_termpt(L3) == pytest.approx(2.0)
    assert expected_termpt(make_list([])) == 0.0
    n = 1000
    lin = make_list((n - np.arange(n)) / n)
    assert expected_termpt(lin) == pytest.approx(n / 2, abs=1)


def test_strategy_parse():
    assert Strategy.parse("PWL") is Strategy.PWL
    with pytest.raises(ValueError):
        Strategy.parse("magic")
