"""Protograph density evolution on the binary erasure channel.

Messages are erasure probabilities on every edge copy of the coupled base
matrix. Check update ``y = 1 - prod(1 - x_other)``, variable update
``x = eps_v * prod(y_other)``, flooding schedule. Uniform random puncturing
of a fraction ``rho`` of all code bits gives every VN the channel erasure
``rho + (1 - rho) * eps``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .protograph import CoupledBaseMatrix

TOL_X = 1e-12
MAX_ITERS = 100_000
TOL_EPS = 1e-5
# max |dx| below this counts as a non-zero fixed point
STALL_TOL = 1e-15


class AboveThreshold(ValueError):
    pass


@dataclass
class DEState:
    x: np.ndarray  # VN -> CN erasure per edge copy
    y: np.ndarray  # CN -> VN erasure per edge copy
    vn_erasure: np.ndarray  # a-posteriori erasure per base column
    eps_v: float
    iterations: int
    success: bool


def _others(owner: np.ndarray, n_owner: int, pad: int) -> np.ndarray:
    """For each edge, the indices of the other edges sharing its owner node, padded with ``pad``."""
    groups = [np.nonzero(owner == k)[0] for k in range(n_owner)]
    width = max((len(g) for g in groups), default=1)
    out = np.full((len(owner), max(width - 1, 1)), pad, dtype=np.int64)
    for g in groups:
        for i, e in enumerate(g):
            rest = np.delete(g, i)
            out[e, :len(rest)] = rest
    return out


class ProtographDE:
    """Edge-level DE machinery for one coupled base matrix."""

    def __init__(self, base: CoupledBaseMatrix):
        self.base = base
        B = base.entries
        r, c = np.nonzero(B)
        mult = B[r, c]
        self.edge_cn = np.repeat(r, mult)
        self.edge_vn = np.repeat(c, mult)
        self.n_cn, self.n_vn = B.shape
        E = len(self.edge_cn)
        self.n_edges = E
        self.cn_others = _others(self.edge_cn, self.n_cn, E)
        self.vn_others = _others(self.edge_vn, self.n_vn, E)
        width = int(np.bincount(self.edge_vn, minlength=self.n_vn).max())
        self.vn_all = np.full((self.n_vn, width), E, dtype=np.int64)
        for v in range(self.n_vn):
            es = np.nonzero(self.edge_vn == v)[0]
            self.vn_all[v, :len(es)] = es
        self.edge_vn_pos = self.edge_vn // base.b_v
        self.edge_cn_pos = self.edge_cn // base.b_c
        self.vn_pos = np.arange(self.n_vn) // base.b_v

    # -- single updates -------------------------------------------------
    def check_update(self, x: np.ndarray) -> np.ndarray:
        xe = np.append(x, 0.0)
        return 1.0 - np.prod(1.0 - xe[self.cn_others], axis=1)

    def variable_update(self, y: np.ndarray, eps_v: float) -> np.ndarray:
        ye = np.append(y, 1.0)
        return eps_v * np.prod(ye[self.vn_others], axis=1)

    def posterior(self, y: np.ndarray, eps_v: float) -> np.ndarray:
        ye = np.append(y, 1.0)
        return eps_v * np.prod(ye[self.vn_all], axis=1)

    # -- full chain ----------------------------------------------------
    def run(
        self,
        eps: float,
        rho: float = 0.0,
        max_iters: int = MAX_ITERS,
        tol: float = TOL_X,
        record=None,
    ) -> DEState:
        """Iterate flooding DE from ``x = eps_v`` until every message is below ``tol``.

        ``record``, if given, is called with the a-posteriori VN erasure vector
        after every iteration.
        """
        eps_v = rho + (1.0 - rho) * eps
        x = np.full(self.n_edges, eps_v)
        y = np.ones(self.n_edges)
        it = 0
        success = eps_v < tol
        while not success and it < max_iters:
            y = self.check_update(x)
            x_new = self.variable_update(y, eps_v)
            it += 1
            if record is not None:
                record(self.posterior(y, eps_v))
            if x_new.max() < tol:
                x = x_new
                success = True
                break
            if np.abs(x_new - x).max() < STALL_TOL:
                x = x_new
                break
            x = x_new
        return DEState(x, y, self.posterior(y, eps_v), eps_v, it, success)

    # -- windowed ------------------------------------------------------
    def run_windowed(
        self,
        eps: float,
        rho: float,
        W: int,
        max_iters: int = 10_000,
        tol: float = TOL_X,
        record=None,
    ) -> tuple[np.ndarray, bool, DEState]:
        """Sliding-window DE; returns the erasure profile of emitted positions.

        The window covers VN positions ``t..t+W-1`` and the CN block-rows
        ``t..t+W-1`` (all remaining rows once the window reaches the chain
        end). Messages are kept across slides; VNs that left the window keep
        their last outgoing messages. ``record(t, vn_erasure)`` is called
        after each iteration.
        """
        L, m = self.base.L, self.base.m
        if not 1 <= W <= L + m:
            raise ValueError(f"window size W={W} outside 1..{L + m}")
        eps_v = rho + (1.0 - rho) * eps
        x = np.full(self.n_edges, eps_v)
        y = np.ones(self.n_edges)
        profile = np.zeros(L)
        success = True
        total_iters = 0
        for t in range(L):
            last = t + W - 1
            row_hi = L + m - 1 if last >= L - 1 else last
            cn_act = (self.edge_cn_pos >= t) & (self.edge_cn_pos <= row_hi)
            vn_act = (self.edge_vn_pos >= t) & (self.edge_vn_pos <= last)
            target = self.vn_pos == t
            for _ in range(max_iters):
                post = self.posterior(y, eps_v)
                if post[target].max() < tol:
                    break
                y_new = np.where(cn_act, self.check_update(x), y)
                x_new = np.where(vn_act, self.variable_update(y_new, eps_v), x)
                total_iters += 1
                stalled = (np.abs(x_new - x).max() < STALL_TOL
                           and np.abs(y_new - y).max() < STALL_TOL)
                x, y = x_new, y_new
                if record is not None:
                    record(t, self.posterior(y, eps_v))
                if stalled:
                    break
            post = self.posterior(y, eps_v)
            profile[t] = post[target].max()
            if profile[t] >= tol:
                success = False
        state = DEState(x, y, self.posterior(y, eps_v), eps_v, total_iters, success)
        return profile, success, state


def de_run(base: CoupledBaseMatrix, eps: float, rho: float = 0.0,
           max_iters: int = MAX_ITERS, tol: float = TOL_X) -> DEState:
    return ProtographDE(base).run(eps, rho, max_iters, tol)


def _bisect(succeeds, tol_eps: float) -> tuple[float, int]:
    lo, hi = 0.0, 1.0
    if succeeds(hi):
        return hi, 0
    steps = 0
    while hi - lo > tol_eps:
        mid = 0.5 * (lo + hi)
        if succeeds(mid):
            lo = mid
        else:
            hi = mid
        steps += 1
    return lo, steps


def bp_threshold(base: CoupledBaseMatrix, rho: float = 0.0, tol_eps: float = TOL_EPS,
                 max_iters: int = MAX_ITERS, tol_x: float = TOL_X) -> float:
    """Largest erasure probability (to within ``tol_eps``) at which DE succeeds."""
    de = ProtographDE(base)
    if not de.run(0.0, rho, max_iters, tol_x).success:
        raise ValueError("DE fails on a perfect channel (rho too large?)")
    return _bisect(lambda e: de.run(e, rho, max_iters, tol_x).success, tol_eps)[0]


def windowed_de(base: CoupledBaseMatrix, eps: float, rho: float, W: int,
                max_iters: int = 10_000, tol: float = TOL_X) -> tuple[np.ndarray, bool]:
    profile, ok, _ = ProtographDE(base).run_windowed(eps, rho, W, max_iters, tol)
    return profile, ok


def windowed_threshold(base: CoupledBaseMatrix, rho: float, W: int, tol_eps: float = TOL_EPS,
                       max_iters: int = 10_000, tol_x: float = TOL_X) -> float:
    de = ProtographDE(base)
    return _bisect(lambda e: de.run_windowed(e, rho, W, max_iters, tol_x)[1], tol_eps)[0]


def scalar_regular_threshold(dv: int, dc: int, tol_eps: float = 1e-7,
                             max_iters: int = 200_000, tol_x: float = 1e-12) -> float:
    """Threshold of the uncoupled ``(dv, dc)`` ensemble from its scalar recursion."""

    def ok(eps):
        x = eps
        for _ in range(max_iters):
            x_new = eps * (1 - (1 - x) ** (dc - 1)) ** (dv - 1)
            if x_new < tol_x:
                return True
            if abs(x_new - x) < STALL_TOL:
                return False
            x = x_new
        return False

    return _bisect(ok, tol_eps)[0]


# ---------------------------------------------------------------------------
# Window mean parameter


def degree_one_proxy(base: CoupledBaseMatrix, eps: float, rho: float = 0.0,
                     max_iters: int = MAX_ITERS) -> np.ndarray:
    """Per-iteration drop of the chain-average VN erasure, scaled by ``L``.

    The drop in mean erasure between consecutive flooding iterations, times
    the number of positions, estimates the number of degree-one checks per
    component codeword, i.e. the mean of ``r_1`` along the decoding trajectory.
    """
    means: list[float] = []
    de = ProtographDE(base)
    eps_v = rho + (1.0 - rho) * eps
    means.append(eps_v)
    de.run(eps, rho, max_iters, record=lambda post: means.append(float(post.mean())))
    return -np.diff(means) * base.L


def window_mean_parameter(base: CoupledBaseMatrix, eps: float, rho: float, W: int,
                          eps_window: float | None = None, max_iters: int = 10_000) -> float:
    """Steady-state mean of the degree-one proxy over ``(eps_window - eps)``.

    Only iterations with the window at positions ``W..L-W`` (1-based) enter
    the average; ``eps_window`` defaults to the windowed threshold.
    """
    L = base.L
    if eps_window is None:
        eps_window = windowed_threshold(base, rho, W, max_iters=max_iters)
    if eps >= eps_window:
        raise AboveThreshold(f"eps={eps} is not below the windowed threshold {eps_window}")
    deltas: list[float] = []
    prev = {"mean": rho + (1.0 - rho) * eps}

    def record(t, post):
        mean = float(post.mean())
        if W - 1 <= t <= L - W - 1:
            deltas.append((prev["mean"] - mean) * L)
        prev["mean"] = mean

    de = ProtographDE(base)
    de.run_windowed(eps, rho, W, max_iters, record=record)
    if not deltas:
        raise ValueError(f"no steady-state window positions for L={L}, W={W}")
    return float(np.mean(deltas)) / (eps_window - eps)
