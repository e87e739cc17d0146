"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Criterion 8(b) is hours-scale Monte Carlo and runs only with ``--extended``.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_force_map
from sccodes.bch import BCHCode, BCHSpec, DecodeFailure, _encode_rows
from sccodes.chain import CoupledChainSpec, measured_rate
from sccodes.channels import LLR_MAX, biawgn, frame_rng, puncture_fraction, to_llr, transmit
from sccodes.density_evolution import bp_threshold
from sccodes.ldpc import TannerGraph, WindowConfig, bp_decode, peel_decode, window_decode
from sccodes.protograph import build_coupled_base, edge_spread, lift, uncoupled_base
from sccodes.scaling import (MIN_TRACES, ScalingInputs, collect_traces, pf_compose, plateau_detected,
                             wilson_interval)
from sccodes.trellis import ConvCodeSpec, bcjr_decode
from sccodes.turbo import RepetitionSpec, gscpcc_build, hscbcc_build, scscc_build, sctc_window_decode
from sccodes.zipper import StaircaseSpec, staircase_encode, staircase_flatten, staircase_transcript, zipper_encode

F = Fraction
SPREADS = {1: [[[2, 2]], [[1, 1]]], 2: [[[1, 1]]] * 3}


def sc_base(L, m):
    return build_coupled_base(edge_spread([[3, 3]], SPREADS[m]), CoupledChainSpec(L, m))


# ---------------------------------------------------------------------------
# 1. BP thresholds of the punctured (3,6) SC-LDPC chains


@pytest.mark.parametrize("m", [1, 2])
@pytest.mark.parametrize("rate,lo,hi", [(F(1, 2), 0.4861, 0.4901), (F(3, 4), 0.2301, 0.2341)])
def test_c1_bp_thresholds(report, m, rate, lo, hi):
    base = sc_base(50, m)
    rho = puncture_fraction(base.asymptotic_rate, rate)
    t0 = time.perf_counter()
    eps = bp_threshold(base, rho)
    dt = time.perf_counter() - t0
    report("1", lo <= eps <= hi and dt < 300,
           f"m={m} R={rate} rho={rho:.4f}: eps_BP={eps:.5f} in [{lo}, {hi}], {dt:.1f} s")


# ---------------------------------------------------------------------------
# 2. Threshold saturation


def _scalar_bisection(tol=1e-7):
    """Independent route: bisection on the (3,6) scalar recursion x' = eps (1 - (1 - x)^5)^2."""
    def converges(eps):
        x = eps
        for _ in range(200_000):
            nx = eps * (1 - (1 - x) ** 5) ** 2
            if nx < 1e-12:
                return True
            if abs(nx - x) < 1e-15:
                return False
            x = nx
        return False

    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if converges(mid) else (lo, mid)
    return lo


def test_c2_threshold_saturation(report):
    uncoupled = bp_threshold(uncoupled_base([[3, 3]]), tol_eps=1e-6)
    scalar = _scalar_bisection()
    coupled = bp_threshold(sc_base(50, 1))
    gap = coupled - uncoupled
    ok = abs(uncoupled - scalar) < 1e-4 and abs(uncoupled - 0.4294) < 1e-4 and gap >= 0.05
    report("2", ok, f"coupled {coupled:.5f} - uncoupled {uncoupled:.5f} = {gap:.4f} >= 0.05; "
                    f"scalar recursion {scalar:.6f} (|diff| {abs(uncoupled - scalar):.1e})")


# ---------------------------------------------------------------------------
# 3. Rate formulas


def test_c3_rate_formulas(report):
    cc, bcc = ConvCodeSpec("[1,5/7]"), ConvCodeSpec("[1,0,5/7;0,1,3/7]")
    checked = 0
    bad = []
    for L in range(4, 17):
        for m in (1, 2):
            base = sc_base(L, m)
            H = lift(base, 8, seed=L)
            got = measured_rate(base.transcript(M=8, sent=[H.M * base.b_v] * L))
            want = 1 - F((L + m) * 1, L * 2)
            lam = F(1, 3) if m == 1 else F(1, 2)
            g = gscpcc_build(RepetitionSpec(2, lam), cc, CoupledChainSpec(L, m), 24).rate
            g_want = (1 - lam) * (L - m) / ((3 - lam) * L)
            s = scscc_build(cc, cc, CoupledChainSpec(L, m), 24).rate
            s_want = F(L - m, L) * F(1, 4)
            for name, a, b in (("sc-ldpc", got, want), ("gscpcc", g, g_want), ("scscc", s, s_want)):
                checked += 1
                if a != b:
                    bad.append((name, L, m, a, b))
        for sigma in (2, 3, 4):
            h = hscbcc_build(bcc, sigma, L, 24).rate
            checked += 1
            if h != F(2 * L - sigma, 6 * L - sigma):
                bad.append(("hscbcc", L, sigma, h))
    for n, k, t in ((30, 25, 1), (254, 238, 2)):
        for T in range(4, 17):
            sp = StaircaseSpec(n, k, t, T)
            checked += 1
            if measured_rate(staircase_transcript(sp)) != F(2 * k, n) - 1:
                bad.append(("staircase", n, k, T))
    example = hscbcc_build(bcc, 2, 50, 20).rate
    report("3", not bad and example == F(98, 298),
           f"{checked} exact rational rate checks, {len(bad)} mismatches; HSC-BCC L=50 sigma=2 -> {example} (= 98/298)")


# ---------------------------------------------------------------------------
# 4. BCJR against exhaustive MAP


def test_c4_bcjr_oracle(report):
    worst = 0.0
    cases = 0
    rng = np.random.default_rng(2024)
    for gen in ("[1,5/7]", "[1,15/13]"):
        c = ConvCodeSpec(gen)
        for K in (1, 2, 5, 8, 12):
            for scale in (0.5, 2.0, 6.0):
                prior = rng.normal(0, scale, (K, 1))
                ch = rng.normal(0, scale, (K, 2))
                r = bcjr_decode(c, prior, ch)
                ref_in, ref_par = brute_force_map(gen, prior + ch[:, :1], ch[:, 1:])
                worst = max(worst, np.abs(r.posterior - ref_in).max(), np.abs(r.parity_posterior - ref_par).max())
                cases += 1
    report("4", worst < 1e-9, f"{cases} cases, K <= 12, max |BCJR - brute force| = {worst:.2e} < 1e-9")


# ---------------------------------------------------------------------------
# 5. Peeling / BP equivalence


def _random_instance(i, rng):
    kind = i % 4
    if kind in (0, 1):
        m = 1 + kind
        L = int(rng.integers(m + 1, 21))
        M = int(rng.integers(2, max(3, 10_000 // (6 * L))))
        H = lift(sc_base(L, m), max(M, 3), seed=int(rng.integers(1 << 30)), min_girth=int(rng.choice([4, 8])))
        return TannerGraph.from_matrix(H)
    if kind == 2:
        M = int(rng.integers(3, 800))
        return TannerGraph.from_matrix(lift(uncoupled_base([[3, 3]]), M, seed=int(rng.integers(1 << 30))))
    # irregular random sparse matrix, column weights 1..4
    n = int(rng.integers(10, 2500))
    r = int(rng.integers(max(2, n // 4), max(3, n // 2 + 1)))
    A = np.zeros((r, n), np.uint8)
    for j in range(n):
        A[rng.choice(r, int(rng.integers(1, 5)), replace=False), j] = 1
    for i_ in np.nonzero(A.sum(axis=1) == 0)[0]:
        A[i_, rng.integers(n)] = 1
    return TannerGraph.from_matrix(A)


def test_c5_peeling_bp_equivalence(report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    mismatches = 0
    max_edges = 0
    for i in range(1000):
        g = _random_instance(i, rng)
        max_edges = max(max_edges, g.n_edges)
        eps = rng.uniform(0.05, 0.8)
        er = rng.random(g.n_vn) < eps
        _, residual, _ = peel_decode(g, er, rng)
        bp = bp_decode(g, np.where(er, 0.0, LLR_MAX), 100_000)
        mismatches += not np.array_equal(bp.llr == 0, residual)
    dt = time.perf_counter() - t0
    report("5", mismatches == 0 and max_edges <= 10_000 and dt < 60,
           f"1000 instances (max {max_edges} edges): {mismatches} unrecovered-set mismatches, {dt:.1f} s")


# ---------------------------------------------------------------------------
# 6. Staircase as zipper


def test_c6_staircase_as_zipper(report):
    diffs = 0
    checked = 0
    for n, k, t, lengths in ((30, 25, 1, range(1, 21)), (254, 238, 2, (1, 2, 7, 20))):
        for T in lengths:
            sp = StaircaseSpec(n, k, t, T)
            info = frame_rng(6, T, n).integers(0, 2, T * sp.half * (k - sp.half), dtype=np.int8)
            a = staircase_flatten(staircase_encode(sp, info))
            b = zipper_encode(sp.zipper(), info, BCHCode(sp.component))
            diffs += not np.array_equal(a, b)
            checked += 1
    report("6", diffs == 0, f"{checked} chains (T <= 20): {diffs} bitwise differences between the two encoders")


# ---------------------------------------------------------------------------
# 7. BCH bounded-distance decoding


def _exhaustive(n, k, t):
    c = BCHCode(BCHSpec.from_nkt(n, k, t))
    bad = patterns = 0
    rng = np.random.default_rng(n)
    for msg in (np.zeros(k, np.int8), rng.integers(0, 2, k, dtype=np.int8)):
        cw = c.encode(msg)
        for w in range(t + 1):
            for pos in itertools.combinations(range(n), w):
                r = cw.copy()
                r[list(pos)] ^= 1
                dec, nc = c.decode(r)
                bad += not (np.array_equal(dec, cw) and nc == w)
                patterns += 1
    return bad, patterns


def _randomized(n, k, t, trials):
    c = BCHCode(BCHSpec.from_nkt(n, k, t))
    rng = np.random.default_rng(k)
    cws = _encode_rows(rng.integers(0, 2, (trials, k), dtype=np.int8), c.gbits, n)
    weights = rng.integers(0, t + 1, trials)
    bad = 0
    for i in range(trials):
        r = cws[i].copy()
        r[rng.choice(n, weights[i], replace=False)] ^= 1
        try:
            dec, nc = c.decode(r)
            bad += not (np.array_equal(dec, cws[i]) and nc == weights[i])
        except DecodeFailure:
            bad += 1
    return bad


def test_c7_bch_bounded_distance(report):
    t0 = time.perf_counter()
    b1, p1 = _exhaustive(15, 7, 2)
    b2, p2 = _exhaustive(31, 16, 3)
    b3 = _randomized(255, 239, 2, 100_000)
    b4 = _randomized(254, 238, 2, 100_000)
    dt = time.perf_counter() - t0
    report("7", b1 == b2 == b3 == b4 == 0 and dt < 120,
           f"(15,7,2) {p1} and (31,16,3) {p2} patterns exhaustive; 1e5 random trials each on (255,239,2) "
           f"and shortened (254,238,2); failures {b1}/{b2}/{b3}/{b4}; {dt:.1f} s")


# ---------------------------------------------------------------------------
# 8(a). Full decoding never loses to windowed decoding (BEC, paired frames)


def test_c8a_full_vs_window(report):
    base = sc_base(50, 1)
    g = TannerGraph.from_matrix(lift(base, 200, seed=0))
    frames = 200
    full_fail = win_fail = violations = 0
    for f in range(frames):
        er = frame_rng(8, f).random(g.n_vn) < 0.43
        llr = np.where(er, 0.0, LLR_MAX)
        full = bp_decode(g, llr, 500)
        win = window_decode(g, llr, WindowConfig(12, 200), base.m)
        fa, wa = bool((full.llr == 0).any()), bool((win.llr == 0).any())
        full_fail += fa
        win_fail += wa
        # on the BEC a frame the window resolves is also resolved by full BP
        violations += fa and not wa
    lo_f, hi_f = wilson_interval(full_fail, frames)
    lo_w, hi_w = wilson_interval(win_fail, frames)
    ok = violations == 0 and (full_fail <= win_fail or hi_w >= lo_f)
    report("8a", ok, f"(3,6) L=50 M=200 BEC eps=0.43, {frames} paired frames: FER full {full_fail / frames:.3f} "
                     f"[{lo_f:.3f},{hi_f:.3f}] <= window W=12 I=200 {win_fail / frames:.3f} [{lo_w:.3f},{hi_w:.3f}]; "
                     f"{violations} frames where window succeeded and full failed")


# ---------------------------------------------------------------------------
# 8(b). Waterfall ordering at R=1/2, K=2000 (extended)

EBN0_GRID = (0.6, 0.8, 1.0)


def _tc_ber(code, ebn0, target_bits=500_000, min_errors=100, seed=0):
    idx = code.puncture_for(F(1, 2), seed=seed)
    rate = code.K / (len(code.tx_all) - len(idx))
    ch = biawgn(ebn0, rate)
    errs = bits = 0
    f = 0
    while bits < target_bits or (errs < min_errors and bits < 10 * target_bits):
        info = frame_rng(seed, f, 0).integers(0, 2, code.K, dtype=np.int8)
        llr = to_llr(transmit(code.codeword(info), ch, frame_rng(seed, f, 1)), ch)
        llr[idx] = 0.0
        r = sctc_window_decode(code, llr, WindowConfig(8, 20))
        errs += int((r.info != info).sum())
        bits += code.K
        f += 1
    return errs, bits


@pytest.mark.extended
def test_c8b_waterfall_ordering(report):
    cc_a, cc_b = ConvCodeSpec("[1,5/7]"), ConvCodeSpec("[1,15/13]")
    chain = CoupledChainSpec(50, 1)
    codes = {
        "hscbcc": hscbcc_build(ConvCodeSpec("[1,0,5/7;0,1,3/7]"), 2, 50, 2000),
        "scscc": scscc_build(cc_a, cc_a, chain, 2000),
        "gscpcc-a": gscpcc_build(RepetitionSpec(2, F(1, 3)), cc_a, chain, 2000),
        "gscpcc-b": gscpcc_build(RepetitionSpec(2, F(1, 3)), cc_b, chain, 2000),
    }
    lines = []
    ok = True
    for better, worse in (("hscbcc", "scscc"), ("gscpcc-b", "gscpcc-a")):
        for ebn0 in EBN0_GRID:
            eb, nb = _tc_ber(codes[better], ebn0)
            ew, nw = _tc_ber(codes[worse], ebn0)
            lo_b, hi_b = wilson_interval(eb, nb)
            lo_w, hi_w = wilson_interval(ew, nw)
            holds = eb / nb <= ew / nw or hi_w >= lo_b
            ok &= holds
            lines.append(f"{ebn0} dB {better} {eb / nb:.2e} vs {worse} {ew / nw:.2e} ({'ok' if holds else 'violated'})")
    report("8b", ok, "; ".join(lines))


# ---------------------------------------------------------------------------
# 9. Scaling composition and steady-state plateaus


PLATEAU_EPS = (0.435, 0.44, 0.45, 0.46)
# interval edges: reported, not asserted (bulk decoding at the low end, tiny r1 near threshold)
EDGE_EPS = (0.43, 0.47)


def test_c9_scaling(report):
    grid = np.random.default_rng(9).random((1000, 3))
    grid[:10] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1], [0.5, 0.5, 0.5], [0.1, 0.2, 0.3],
                 [0, 0.5, 1], [1e-9, 1e-9, 1e-9], [0.999, 0.999, 0.001]]
    # direct evaluation by inclusion-exclusion, an independent algebraic form
    a, b, c = grid.T
    direct = a + b + c - a * b - a * c - b * c + a * b * c
    composed = np.array([pf_compose(ScalingInputs(*row)) for row in grid])
    err = np.abs(composed - direct).max()

    base = sc_base(50, 1)
    g = TannerGraph.from_matrix(lift(base, 2000, seed=0))
    ok = err < 1e-12
    parts = []
    for eps in PLATEAU_EPS:
        traces = collect_traces(g, eps, 110, seed=9)
        ok_traces = [tr for tr in traces if tr.success]
        detected = sum(plateau_detected(tr) for tr in ok_traces)
        frac = detected / len(ok_traces)
        ok &= len(ok_traces) >= MIN_TRACES and frac >= 0.95
        parts.append(f"eps={eps}: {detected}/{len(ok_traces)} ({frac:.1%})")
    edges = []
    for eps in EDGE_EPS:
        ok_traces = [tr for tr in collect_traces(g, eps, 110, seed=9) if tr.success]
        edges.append(f"eps={eps}: {np.mean([plateau_detected(tr) for tr in ok_traces]):.1%}")
    report("9", None, "interval edges, not asserted: " + ", ".join(edges))
    report("9", ok, f"pf_compose vs direct on 1000 points: max err {err:.1e}; plateau detected in successful "
                    f"(3,6) L=50 M=2000 traces, >= 95% required: " + ", ".join(parts))


# ---------------------------------------------------------------------------
# 10. Excluded claims


def test_c10_excluded(report):
    report("10", None, "EXCLUDED: staircase 1e-15 floors and 0.5 dB-to-capacity claims, SC-TC threshold rows, "
                       "proof-level claims; not reproducible at desk scale and not implemented")
    pytest.skip("criterion 10 lists claims that are explicitly excluded")
