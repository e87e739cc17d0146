"""Finite-length scaling instrumentation on the BEC.

Peeling trajectories ``r1`` (degree-one checks per component codeword,
indexed by normalized peeling time ``l/N``), steady-state statistics over the
plateau of the ensemble mean, and the failure-probability composition
``P_f = 1 - (1 - Pr{O})(1 - P_f1)(1 - P_f2)``, whose inputs can be estimated
empirically from sliding-window decoding runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .channels import LLR_MAX, frame_rng
from .ldpc import ITER_LIMIT, PDTrace, TannerGraph, WindowConfig, peel_decode, window_decode

# plateau detection constants (recorded in every SteadyState)
REL_VARIATION = 0.10
MIN_PLATEAU = 10.0  # normalized time units
SMOOTH = 5.0  # moving-average width, normalized time units
MIN_TRACES = 100


class NoSteadyState(ValueError):
    pass


# ---------------------------------------------------------------------------
# Traces


def collect_traces(g: TannerGraph, eps: float, frames: int, seed: int = 0) -> list[PDTrace]:
    """One peeling trace per frame; frame ``f`` uses the ``(seed, f)`` random stream."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability {eps} outside [0, 1]")
    out = []
    for f in range(frames):
        rng = frame_rng(seed, f)
        erased = rng.random(g.n_vn) < eps
        out.append(peel_decode(g, erased, rng)[2])
    return out


def mean_trajectory(traces: list[PDTrace]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-step mean and variance of ``r1`` over the traces still running, plus their count."""
    n = max(len(tr.r1) for tr in traces)
    s = np.zeros(n)
    s2 = np.zeros(n)
    cnt = np.zeros(n)
    for tr in traces:
        k = len(tr.r1)
        s[:k] += tr.r1
        s2[:k] += tr.r1 ** 2
        cnt[:k] += 1
    mean = s / cnt
    var = np.maximum(s2 / cnt - mean ** 2, 0.0)
    return mean, var, cnt


def _moving_average(x: np.ndarray, width: int) -> np.ndarray:
    width = max(1, min(width, len(x)))
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[width:] - c[:-width]) / width


def longest_plateau(y: np.ndarray, rel: float = REL_VARIATION) -> tuple[int, int]:
    """Longest ``[a, b)`` whose values all lie within ``rel * mean`` of the mean of ``y[a:b]``.

    Greedy two-pointer scan with monotone deques for the running extrema.
    """
    a, b = _plateau(np.ascontiguousarray(y, dtype=np.float64), float(rel))
    return int(a), int(b)


@numba.njit(cache=True)
def _plateau(y, rel):
    n = len(y)
    csum = np.zeros(n + 1)
    for i in range(n):
        csum[i + 1] = csum[i] + y[i]
    hi = np.empty(n, np.int64)  # deque of candidate maxima
    lo = np.empty(n, np.int64)
    hh = ht = lh = lt = 0  # heads and tails
    best_a = best_b = 0
    a = 0
    for b in range(n):
        while ht > hh and y[hi[ht - 1]] <= y[b]:
            ht -= 1
        hi[ht] = b
        ht += 1
        while lt > lh and y[lo[lt - 1]] >= y[b]:
            lt -= 1
        lo[lt] = b
        lt += 1
        while a <= b:
            mean = (csum[b + 1] - csum[a]) / (b + 1 - a)
            if y[hi[hh]] - mean < rel * mean and mean - y[lo[lh]] < rel * mean:
                break
            a += 1
            if hi[hh] < a:
                hh += 1
            if lo[lh] < a:
                lh += 1
        if b + 1 - a > best_b - best_a:
            best_a, best_b = a, b + 1
    return best_a, best_b


@dataclass
class SteadyState:
    mean: float  # plateau mean of r1
    var: float  # mean per-step variance of r1 across traces over the plateau
    lag_cov: np.ndarray  # autocovariance of r1 at lags 0, 1, ... (normalized time units)
    bounds: tuple[float, float]  # plateau in normalized time
    n_traces: int
    constants: dict = field(default_factory=lambda: {
        "rel_variation": REL_VARIATION, "min_plateau": MIN_PLATEAU, "smooth": SMOOTH,
        "averaging": "single code realization, channel and decoder randomness"})


def steady_state_stats(traces: list[PDTrace], rel: float = REL_VARIATION,
                       min_len: float = MIN_PLATEAU, smooth: float = SMOOTH,
                       max_lag: int = 5, min_traces: int = MIN_TRACES) -> SteadyState:
    """Moments of ``r1`` over the plateau of the mean trajectory of the successful traces.

    The plateau is the longest interval where a moving average (width
    ``smooth`` normalized units) of the mean ``r1`` varies by less than
    ``rel`` relative to its mean; shorter than ``min_len`` raises
    :class:`NoSteadyState`.
    """
    ok = [tr for tr in traces if tr.success]
    if len(ok) < min_traces:
        raise ValueError(f"{len(ok)} successful traces, need at least {min_traces}")
    N = ok[0].N
    mean, var, cnt = mean_trajectory(ok)
    # only steps where every trace is still running
    full = int(np.sum(cnt == len(ok)))
    mean, var = mean[:full], var[:full]
    w = max(1, int(round(smooth * N)))
    ma = _moving_average(mean, w)
    if len(ma) == 0 or ma.max() <= 0:
        raise NoSteadyState("no degree-one checks along the trajectory")
    a, b = longest_plateau(ma, rel)
    # moving-average index i covers steps i..i+w-1
    lo, hi = a, b - 1 + w
    if (hi - lo) / N < min_len:
        raise NoSteadyState(f"plateau of {(hi - lo) / N:.2f} normalized units < {min_len}")
    seg = np.stack([tr.r1[lo:hi] for tr in ok])
    dev = seg - seg.mean(axis=0)
    lags = []
    for k in range(max_lag + 1):
        d = int(k * N)
        if d >= seg.shape[1]:
            break
        lags.append(float(np.mean(dev[:, : seg.shape[1] - d] * dev[:, d:])))
    return SteadyState(float(seg.mean()), float(var[lo:hi].mean()), np.array(lags),
                       (lo / N, hi / N), len(ok))


def de_steady_state(proxy: np.ndarray, rel: float = REL_VARIATION, smooth: int = 5) -> float:
    """Plateau mean of a per-iteration degree-one proxy from density evolution."""
    ma = _moving_average(np.asarray(proxy, dtype=float), smooth)
    a, b = longest_plateau(ma, rel)
    if b - a < 2:
        raise NoSteadyState("degree-one proxy has no plateau")
    return float(ma[a:b].mean())


def plateau_detected(trace: PDTrace, rel: float = REL_VARIATION, min_len: float = MIN_PLATEAU,
                     smooth: float = SMOOTH) -> bool:
    """Single-trace version of the plateau detector (moving average of ``r1`` itself)."""
    w = max(1, int(round(smooth * trace.N)))
    ma = _moving_average(trace.r1.astype(float), w)
    if len(ma) == 0 or ma.max() <= 0:
        return False
    a, b = longest_plateau(ma, rel)
    return (b - 1 + w - a) / trace.N >= min_len


# ---------------------------------------------------------------------------
# Failure-probability composition


@dataclass(frozen=True)
class ScalingInputs:
    pr_o: float
    pf1: float
    pf2: float
    W: int = 1
    W_reduced: int = 1

    def __post_init__(self):
        for name in ("pr_o", "pf1", "pf2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.W_reduced > self.W:
            raise ValueError(f"W'={self.W_reduced} exceeds W={self.W}")


def pf_compose(s: ScalingInputs) -> float:
    return 1.0 - (1.0 - s.pr_o) * (1.0 - s.pf1) * (1.0 - s.pf2)


@dataclass
class WindowFailureStats:
    frames: int
    overtaken: int
    fail1: int
    fail2: int
    inputs: ScalingInputs

    @property
    def failures(self) -> int:
        return self.overtaken + self.fail1 + self.fail2

    @property
    def pf_empirical(self) -> float:
        return self.failures / self.frames


def classify_window_failure(res, positions: list[np.ndarray], W: int) -> str | None:
    """``None`` on success, else ``"O"``, ``"F1"`` or ``"F2"`` for the first unresolved position.

    Phase 1 covers the first ``L - W`` positions. There, a window that ran
    out of iterations while still making progress is an overtaking event
    (the window left edge passed the decoding wave); a window stuck at a
    fixed point is a phase-1 failure. Later positions are phase-2 failures.
    """
    L = len(positions)
    bad = [t for t in range(L) if np.any(res.llr[positions[t]] == 0)]
    if not bad:
        return None
    t = bad[0]
    if t < L - W:
        return "O" if res.stop_reason[t] == ITER_LIMIT else "F1"
    return "F2"


def estimate_window_failure(g: TannerGraph, eps: float, cfg: WindowConfig, m: int,
                            frames: int, seed: int = 0) -> WindowFailureStats:
    """Windowed BP on the BEC; sequential estimates of ``Pr{O}``, ``P_f1``, ``P_f2`` and ``W'``.

    ``P_f1`` is conditioned on no overtaking and ``P_f2`` on neither earlier
    event, so ``pf_compose`` of the estimates equals the empirical failure
    rate on the same runs. ``W'`` is the mean number of window positions
    still holding erasures when a steady-state window closes, capped at ``W``.
    """
    L = g.n_positions
    positions = [np.nonzero(g.vn_pos == t)[0] for t in range(L)]
    counts = {"O": 0, "F1": 0, "F2": 0}
    widths = []
    for f in range(frames):
        erased = frame_rng(seed, f).random(g.n_vn) < eps
        res = window_decode(g, np.where(erased, 0.0, LLR_MAX), cfg, m)
        kind = classify_window_failure(res, positions, cfg.W)
        if kind:
            counts[kind] += 1
        mid = res.open_positions[cfg.W:L - cfg.W]
        if len(mid):
            widths.append(float(mid.mean()))
    n = frames
    pr_o = counts["O"] / n
    rest1 = n - counts["O"]
    pf1 = counts["F1"] / rest1 if rest1 else 0.0
    rest2 = rest1 - counts["F1"]
    pf2 = counts["F2"] / rest2 if rest2 else 0.0
    w_red = int(min(cfg.W, max(1, round(float(np.mean(widths)))))) if widths else cfg.W
    return WindowFailureStats(n, counts["O"], counts["F1"], counts["F2"],
                              ScalingInputs(pr_o, pf1, pf2, cfg.W, w_red))


def wilson_interval(k: int, n: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi
