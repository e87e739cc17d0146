from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sccodes.chain import CoupledChainSpec
from sccodes.ldpc import PDTrace, TannerGraph, WindowConfig
from sccodes.protograph import build_coupled_base, edge_spread, lift
from sccodes.scaling import (NoSteadyState, ScalingInputs, collect_traces, estimate_window_failure,
                             longest_plateau, pf_compose, steady_state_stats, wilson_interval)

prob = st.floats(0.0, 1.0)


def sc_graph(L=20, M=100):
    base = build_coupled_base(edge_spread([[3, 3]], [[[2, 2]], [[1, 1]]]), CoupledChainSpec(L, 1))
    return TannerGraph.from_matrix(lift(base, M, seed=0)), base


def synthetic(values, N=10, n=100, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    return [PDTrace(np.asarray(values, float) + noise * rng.standard_normal(len(values)), N, True, len(values))
            for _ in range(n)]


def test_eps_zero_traces():
    g, _ = sc_graph()
    for tr in collect_traces(g, 0.0, 5):
        assert tr.success and tr.tau0 == 0


def test_eps_one_immediate_stall():
    g, _ = sc_graph()
    for tr in collect_traces(g, 1.0, 3):
        assert not tr.success and tr.tau0 == 0


def test_failed_tau0_inside_chain():
    g, _ = sc_graph(20, 100)
    for tr in collect_traces(g, 0.5, 20, seed=3):
        if not tr.success:
            assert 0 <= tr.tau0 < g.n_vn / tr.N


def test_constant_traces():
    ss = steady_state_stats(synthetic(np.full(400, 0.3)))
    assert ss.mean == pytest.approx(0.3) and ss.var == pytest.approx(0.0, abs=1e-15)
    assert ss.constants["rel_variation"] == 0.10


def test_ramp_has_no_steady_state():
    with pytest.raises(NoSteadyState):
        steady_state_stats(synthetic(np.linspace(1.0, 0.01, 200)))


def test_too_few_traces():
    with pytest.raises(ValueError):
        steady_state_stats(synthetic(np.full(400, 0.3), n=10))


def test_longest_plateau_examples():
    assert longest_plateau(np.ones(50)) == (0, 50)
    y = np.concatenate([np.full(5, 5.0), np.ones(40), np.full(5, 5.0)])
    assert longest_plateau(y) == (5, 45)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=60))
def test_longest_plateau_is_valid_and_maximal(values):
    y = np.array(values)
    a, b = longest_plateau(y)
    seg = y[a:b]
    assert (np.abs(seg - seg.mean()) < 0.1 * seg.mean()).all()
    # brute force: no longer valid interval exists
    n = len(y)
    for length in range(b - a + 1, n + 1):
        for s in range(n - length + 1):
            w = y[s:s + length]
            assert not (np.abs(w - w.mean()) < 0.1 * w.mean()).all()


def test_pf_compose_examples():
    assert pf_compose(ScalingInputs(0, 0, 0)) == 0
    assert pf_compose(ScalingInputs(1, 0.3, 0.7)) == 1
    assert pf_compose(ScalingInputs(0.1, 0.2, 0.3)) == pytest.approx(0.496)


@given(prob, prob, prob, prob)
def test_pf_compose_monotone_and_symmetric(a, b, c, d):
    base = pf_compose(ScalingInputs(a, b, c))
    assert pf_compose(ScalingInputs(a, c, b)) == pytest.approx(base)
    assert pf_compose(ScalingInputs(max(a, d), b, c)) >= base - 1e-15
    assert pf_compose(ScalingInputs(a, max(b, d), c)) >= base - 1e-15
    assert 0.0 <= base <= 1.0


def test_inputs_validated():
    with pytest.raises(ValueError):
        ScalingInputs(1.2, 0, 0)
    with pytest.raises(ValueError):
        ScalingInputs(0, 0, 0, W=3, W_reduced=4)


@given(st.integers(0, 200), st.integers(1, 200))
def test_wilson_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_window_failure_self_consistency():
    g, base = sc_graph(20, 100)
    st_ = estimate_window_failure(g, 0.46, WindowConfig(4, 100), base.m, 60, seed=1)
    assert st_.failures > 0
    lo, hi = wilson_interval(st_.failures, st_.frames)
    composed = pf_compose(st_.inputs)
    assert lo <= composed <= hi
    assert composed == pytest.approx(st_.pf_empirical)
    assert 1 <= st_.inputs.W_reduced <= 4
