from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gf2_rank
from sccodes.bch import BCHCode, BCHSpec, DecodeFailure, bch_decode, bch_encode


def code(n, k, t):
    return BCHCode(BCHSpec.from_nkt(n, k, t))


@pytest.mark.parametrize("n,k,t", [(15, 7, 2), (31, 16, 3), (255, 239, 2), (254, 238, 2), (30, 25, 1), (31, 26, 1)])
def test_parameters(n, k, t):
    c = code(n, k, t)
    assert (c.n, c.k) == (n, k)
    H = c.parity_check
    assert H.shape == (n - k, n) and gf2_rank(H) == n - k


def test_wrong_k_rejected():
    with pytest.raises(ValueError):
        BCHSpec.from_nkt(15, 8, 2)


@pytest.mark.parametrize("n,k,t", [(15, 7, 2), (31, 16, 3)])
def test_minimum_distance_by_enumeration(n, k, t):
    c = code(n, k, t)
    msgs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int8)
    w = c.encode(msgs).sum(axis=1)
    assert w[1:].min() >= 2 * t + 1


def syndrome_table(c: BCHCode, t: int) -> dict:
    H = c.parity_check.astype(np.int64)
    table = {}
    for w in range(t + 1):
        for pos in itertools.combinations(range(c.n), w):
            e = np.zeros(c.n, np.int64)
            e[list(pos)] = 1
            table.setdefault(tuple(H @ e % 2), e)
    return table


def test_exhaustive_two_errors_vs_syndrome_table():
    c = code(15, 7, 2)
    table = syndrome_table(c, 2)
    cw = c.encode(np.array([1, 0, 1, 1, 0, 0, 1], np.int8))
    for w in range(3):
        for pos in itertools.combinations(range(15), w):
            r = cw.copy()
            r[list(pos)] ^= 1
            dec, nc = c.decode(r)
            assert np.array_equal(dec, cw) and nc == w
            e = table[tuple(c.parity_check.astype(np.int64) @ r % 2)]
            assert np.array_equal((r ^ e).astype(np.int8), cw)


def test_three_errors_never_silent():
    c = code(15, 7, 2)
    cw = np.zeros(15, np.int8)
    for pos in itertools.combinations(range(15), 3):
        r = cw.copy()
        r[list(pos)] ^= 1
        try:
            dec, nc = c.decode(r)
        except DecodeFailure:
            continue
        assert not c.syndrome_nonzero(dec)
        assert int((dec ^ r).sum()) == nc <= 2


def test_zero_errors():
    c = code(31, 16, 3)
    cw = c.encode(np.ones(16, np.int8))
    dec, nc = bch_decode(c.spec, cw)
    assert np.array_equal(dec, cw) and nc == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_codewords_satisfy_parity_check(seed):
    c = code(63, 51, 2)
    m = np.random.default_rng(seed).integers(0, 2, c.k, dtype=np.int8)
    cw = bch_encode(c.spec, m)
    assert np.array_equal(cw[:c.k], m) and not c.syndrome_nonzero(cw)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 3))
def test_random_correction_shortened(seed, w):
    c = code(254, 238, 2)
    rng = np.random.default_rng(seed)
    cw = c.encode(rng.integers(0, 2, c.k, dtype=np.int8))
    r = cw.copy()
    r[rng.choice(c.n, w, replace=False)] ^= 1
    if w <= 2:
        assert np.array_equal(c.decode(r)[0], cw)
    else:
        try:
            dec, nc = c.decode(r)
            assert nc <= 2 and not c.syndrome_nonzero(dec)
        except DecodeFailure:
            pass
