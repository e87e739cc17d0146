"""Tanner-graph decoders: sum-product BP, erasure peeling, and sliding-window BP."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .channels import LLR_MAX
from .protograph import QCMatrix


class TannerGraph:
    """Immutable edge-list view of a binary parity-check matrix.

    Edges are sorted by check node. ``cn_edges`` / ``vn_edges`` are padded
    adjacency tables holding edge ids, padded with ``n_edges``.
    """

    def __init__(self, rows, cols, n_cn: int, n_vn: int,
                 vn_pos: np.ndarray | None = None, cn_pos: np.ndarray | None = None,
                 component_length: int | None = None):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        order = np.lexsort((cols, rows))
        self.edge_cn = rows[order]
        self.edge_vn = cols[order]
        self.n_cn, self.n_vn = int(n_cn), int(n_vn)
        self.n_edges = len(self.edge_cn)
        self.cn_degree = np.bincount(self.edge_cn, minlength=self.n_cn)
        self.vn_degree = np.bincount(self.edge_vn, minlength=self.n_vn)
        if (self.cn_degree == 0).any() or (self.vn_degree == 0).any():
            raise ValueError("Tanner graph has dangling nodes")
        self.cn_edges = _pad_groups(self.edge_cn, self.n_cn, self.n_edges)
        self.vn_edges = _pad_groups(self.edge_vn, self.n_vn, self.n_edges)
        # CSR adjacency for the peeling decoder
        self.cn_ptr = np.concatenate([[0], np.cumsum(self.cn_degree)])
        self.cn_vns = self.edge_vn.copy()
        vn_order = np.argsort(self.edge_vn, kind="stable")
        self.vn_ptr = np.concatenate([[0], np.cumsum(self.vn_degree)])
        self.vn_cns = self.edge_cn[vn_order]
        self.vn_pos = np.zeros(self.n_vn, np.int64) if vn_pos is None else np.asarray(vn_pos)
        self.cn_pos = np.zeros(self.n_cn, np.int64) if cn_pos is None else np.asarray(cn_pos)
        self.component_length = component_length or self.n_vn
        for a in (self.edge_cn, self.edge_vn, self.cn_edges, self.vn_edges):
            a.setflags(write=False)

    @classmethod
    def from_matrix(cls, H) -> "TannerGraph":
        if isinstance(H, QCMatrix):
            r, c = H.edge_arrays()
            n_cn, n_vn = H.shape
            return cls(r, c, n_cn, n_vn, H.vn_positions(), H.cn_positions(), H.component_length)
        A = np.asarray(H)
        r, c = np.nonzero(A)
        return cls(r, c, A.shape[0], A.shape[1])

    @property
    def n_positions(self) -> int:
        return int(self.vn_pos.max()) + 1

    def syndrome(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.int64)
        return np.bincount(self.edge_cn, weights=bits[self.edge_vn], minlength=self.n_cn).astype(np.int64) % 2


def _pad_groups(owner: np.ndarray, n: int, pad: int) -> np.ndarray:
    order = np.argsort(owner, kind="stable")
    counts = np.bincount(owner, minlength=n)
    width = int(counts.max()) if n else 0
    out = np.full((n, width), pad, dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    slot = np.arange(len(owner)) - np.repeat(starts, counts)
    out[owner[order], slot] = order
    return out


# ---------------------------------------------------------------------------
# Sum-product


@dataclass
class BPResult:
    hard: np.ndarray
    llr: np.ndarray  # a-posteriori LLRs
    iterations: int
    syndrome_ok: bool


def _leave_one_out_prod(T: np.ndarray) -> np.ndarray:
    """Row-wise product of all other entries (exact with zeros)."""
    ones = np.ones((T.shape[0], 1))
    left = np.cumprod(np.hstack([ones, T[:, :-1]]), axis=1)
    right = np.cumprod(np.hstack([ones, T[:, :0:-1]]), axis=1)[:, ::-1]
    return left * right


class _BP:
    """Message state of flooding sum-product on a (sub)graph."""

    def __init__(self, g: TannerGraph, llr: np.ndarray):
        self.g = g
        self.ch = np.clip(np.asarray(llr, dtype=float), -LLR_MAX, LLR_MAX)
        self.v2c = self.ch[g.edge_vn].copy()
        self.c2v = np.zeros(g.n_edges)

    def check_update(self, cns=None):
        g = self.g
        idx = g.cn_edges if cns is None else g.cn_edges[cns]
        t = np.append(np.tanh(self.v2c / 2.0), 1.0)[idx]
        p = _leave_one_out_prod(t)
        with np.errstate(divide="ignore"):
            msg = np.clip(2.0 * np.arctanh(p), -LLR_MAX, LLR_MAX)
        valid = idx < g.n_edges
        self.c2v[idx[valid]] = msg[valid]

    def totals(self, vns=None) -> np.ndarray:
        g = self.g
        idx = g.vn_edges if vns is None else g.vn_edges[vns]
        ch = self.ch if vns is None else self.ch[vns]
        return ch + np.append(self.c2v, 0.0)[idx].sum(axis=1)

    def variable_update(self, vns=None):
        g = self.g
        idx = g.vn_edges if vns is None else g.vn_edges[vns]
        tot = self.totals(vns)
        valid = idx < g.n_edges
        e = idx[valid]
        rep = np.broadcast_to(tot[:, None], idx.shape)[valid]
        self.v2c[e] = np.clip(rep - self.c2v[e], -LLR_MAX, LLR_MAX)


def resolved(g: TannerGraph, total: np.ndarray) -> bool:
    """Hard decisions satisfy every check and no bit is undecided (LLR 0)."""
    hard = (total < 0).astype(np.int64)
    return bool((total != 0).all() and not g.syndrome(hard).any())


def bp_decode(g: TannerGraph, llr, max_iters: int = 100) -> BPResult:
    """Flooding sum-product (tanh rule).

    Stops when every check is satisfied with no zero-LLR bit, when an
    iteration leaves all messages unchanged, or after ``max_iters``.
    Ties (LLR 0) decide bit 0.
    """
    bp = _BP(g, llr)
    total = bp.ch.copy()
    if resolved(g, total):
        return BPResult((total < 0).astype(np.int8), total, 0, True)
    it = 0
    ok = False
    while it < max_iters:
        old_v2c = bp.v2c.copy()
        bp.check_update()
        bp.variable_update()
        it += 1
        total = bp.totals()
        ok = resolved(g, total)
        if ok or np.array_equal(old_v2c, bp.v2c):
            break
    return BPResult((total < 0).astype(np.int8), total, it, ok)


# ---------------------------------------------------------------------------
# Peeling


@dataclass
class PDTrace:
    """Peeling trajectory: ``r1[l]`` is #degree-one checks / N after ``l`` peeling steps."""

    r1: np.ndarray
    N: int
    success: bool
    n_erased: int

    @property
    def tau0(self) -> float:
        """First normalized time at which no degree-one check is left."""
        zero = np.nonzero(self.r1 == 0)[0]
        return float(zero[0]) / self.N if len(zero) else float(len(self.r1) - 1) / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.r1)) / self.N


@numba.njit(cache=True)
def _peel(cn_ptr, cn_vns, vn_ptr, vn_cns, erased, uniforms, record_positions, vn_pos, n_pos):
    n_cn = len(cn_ptr) - 1
    deg = np.zeros(n_cn, np.int64)
    for c in range(n_cn):
        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            if erased[cn_vns[k]]:
                deg[c] += 1
    lst = np.empty(n_cn, np.int64)
    where = -np.ones(n_cn, np.int64)
    count = 0
    for c in range(n_cn):
        if deg[c] == 1:
            lst[count] = c
            where[c] = count
            count += 1
    n_steps = len(uniforms)
    trace = np.zeros(n_steps + 1, np.int64)
    trace[0] = count
    # leftmost erased position after each step (wave tracking)
    front = np.zeros(n_steps + 1, np.int64)
    pos_left = np.zeros(n_pos, np.int64)
    if record_positions:
        for v in range(len(erased)):
            if erased[v]:
                pos_left[vn_pos[v]] += 1
        p = 0
        while p < n_pos and pos_left[p] == 0:
            p += 1
        front[0] = p
    step = 0
    while count > 0 and step < n_steps:
        i = int(uniforms[step] * count)
        if i >= count:
            i = count - 1
        c = lst[i]
        v = -1
        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            if erased[cn_vns[k]]:
                v = cn_vns[k]
                break
        erased[v] = False
        for k in range(vn_ptr[v], vn_ptr[v + 1]):
            c2 = vn_cns[k]
            deg[c2] -= 1
            if deg[c2] == 1 and where[c2] < 0:
                lst[count] = c2
                where[c2] = count
                count += 1
            elif deg[c2] != 1 and where[c2] >= 0:
                j = where[c2]
                last = lst[count - 1]
                lst[j] = last
                where[last] = j
                where[c2] = -1
                count -= 1
        step += 1
        trace[step] = count
        if record_positions:
            pos_left[vn_pos[v]] -= 1
            p = front[step - 1]
            while p < n_pos and pos_left[p] == 0:
                p += 1
            front[step] = p
    return trace[:step + 1], front[:step + 1], step


def peel_decode(g: TannerGraph, erased, rng: np.random.Generator | int = 0,
                track_front: bool = False):
    """Peeling decoder on the BEC.

    Repeatedly picks a degree-one check uniformly at random and resolves its
    erased neighbour. Returns ``(recovered, residual, trace)`` where
    ``recovered``/``residual`` are boolean masks over the VNs; with
    ``track_front`` also the leftmost unresolved position per step.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    erased0 = np.asarray(erased, dtype=np.bool_)
    work = erased0.copy()
    n_er = int(erased0.sum())
    u = rng.random(n_er)
    r1, front, steps = _peel(g.cn_ptr, g.cn_vns, g.vn_ptr, g.vn_cns, work, u,
                            track_front, g.vn_pos, g.n_positions)
    trace = PDTrace(r1 / g.component_length, g.component_length, not work.any(), n_er)
    recovered = erased0 & ~work
    if track_front:
        return recovered, work, trace, front
    return recovered, work, trace


# ---------------------------------------------------------------------------
# Sliding window


@dataclass(frozen=True)
class WindowConfig:
    W: int
    max_iters: int = 200
    stop_rule: str = "zero-syndrome"  # or "fixed-iterations"
    warm_start: bool = True

    def __post_init__(self):
        if self.W < 1:
            raise ValueError("window size must be >= 1")
        if self.stop_rule not in ("zero-syndrome", "fixed-iterations"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")


@dataclass
class WindowResult:
    hard: np.ndarray
    llr: np.ndarray
    iterations: int
    per_position_iters: np.ndarray
    # per position: 0 output resolved, 1 messages reached a fixed point, 2 iteration limit
    stop_reason: np.ndarray
    # per position: window positions still holding a zero-LLR bit when the window closed
    open_positions: np.ndarray


RESOLVED, FIXED_POINT, ITER_LIMIT = 0, 1, 2


def _output_resolved(g, bp, target, target_cns, near) -> bool:
    tot_t = bp.totals(target)
    if (tot_t == 0).any():
        return False
    total = np.zeros(g.n_vn)
    total[near] = bp.totals(near)
    hard = (total < 0).astype(np.int64)
    idx = g.cn_edges[target_cns]
    vns = np.append(g.edge_vn, 0)[idx]
    par = np.where(idx < g.n_edges, hard[vns], 0).sum(axis=1) % 2
    return not par.any()


def window_decode(g: TannerGraph, llr, cfg: WindowConfig, m: int) -> WindowResult:
    """Sliding-window BP over the chain positions of ``g``.

    At window position ``t`` the VNs of positions ``t..t+W-1`` and the check
    block-rows ``t..t+W-1`` are updated (every remaining row once the window
    touches the chain end). After the iterations the decisions of position
    ``t`` are frozen and the window advances by one position. Messages of
    positions that stay in the window are kept unless ``warm_start`` is off.
    """
    L = g.n_positions
    n_rows = int(g.cn_pos.max()) + 1
    if not 1 <= cfg.W <= n_rows:
        raise ValueError(f"window size {cfg.W} outside 1..{n_rows}")
    bp = _BP(g, llr)
    out = np.zeros(g.n_vn)
    iters = np.zeros(L, np.int64)
    reason = np.full(L, ITER_LIMIT, np.int64)
    open_pos = np.zeros(L, np.int64)
    vn_by_pos = [np.nonzero(g.vn_pos == t)[0] for t in range(L)]
    cn_by_pos = [np.nonzero(g.cn_pos == r)[0] for r in range(n_rows)]
    for t in range(L):
        last = min(t + cfg.W - 1, L - 1)
        row_hi = n_rows - 1 if t + cfg.W - 1 >= L - 1 else t + cfg.W - 1
        vns = np.concatenate(vn_by_pos[t:last + 1])
        cns = np.concatenate(cn_by_pos[t:row_hi + 1])
        target = vn_by_pos[t]
        target_cns = np.concatenate(cn_by_pos[t:min(t + m, n_rows - 1) + 1])
        if not cfg.warm_start and t > 0:
            # entering position only: reset messages of the newest window column
            fresh = vn_by_pos[last]
            e = g.vn_edges[fresh]
            e = e[e < g.n_edges]
            bp.v2c[e] = bp.ch[g.edge_vn[e]]
            bp.c2v[e] = 0.0
        # bits seen by the checks of the output position
        e = g.cn_edges[target_cns]
        near = np.unique(g.edge_vn[e[e < g.n_edges]])
        for _ in range(cfg.max_iters):
            if cfg.stop_rule == "zero-syndrome" and _output_resolved(g, bp, target, target_cns, near):
                reason[t] = RESOLVED
                break
            old = bp.v2c.copy() if cfg.stop_rule == "zero-syndrome" else None
            bp.check_update(cns)
            bp.variable_update(vns)
            iters[t] += 1
            if old is not None and np.array_equal(old, bp.v2c):
                reason[t] = FIXED_POINT
                break
        else:
            if cfg.stop_rule == "zero-syndrome" and _output_resolved(g, bp, target, target_cns, near):
                reason[t] = RESOLVED
        out[target] = bp.totals(target)
        tot_w = bp.totals(vns)
        open_pos[t] = len(np.unique(g.vn_pos[vns[tot_w == 0]]))
    return WindowResult((out < 0).astype(np.int8), out, int(iters.sum()), iters, reason, open_pos)


# ---------------------------------------------------------------------------
# GF(2) encoding helpers (small codes only)


def gf2_systematic(H) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-reduce ``H``; return ``(G, info_cols, pivot_cols)`` with ``G`` a generator.

    Codeword bits at ``info_cols`` equal the message.
    """
    A = (np.asarray(H) % 2).astype(np.uint8).copy()
    n_rows, n = A.shape
    pivots = []
    r = 0
    for c in range(n):
        if r == n_rows:
            break
        hit = np.nonzero(A[r:, c])[0]
        if not len(hit):
            continue
        p = r + hit[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        below = np.nonzero(A[:, c])[0]
        below = below[below != r]
        A[below] ^= A[r]
        pivots.append(c)
        r += 1
    pivots = np.array(pivots, dtype=np.int64)
    info = np.setdiff1d(np.arange(n), pivots)
    G = np.zeros((len(info), n), dtype=np.uint8)
    G[np.arange(len(info)), info] = 1
    # pivot bit of row i = sum of A[i, info] * message
    G[:, pivots] = A[:len(pivots)][:, info].T
    return G, info, pivots


def gf2_encode(G: np.ndarray, msg) -> np.ndarray:
    return (np.asarray(msg, dtype=np.int64) @ G.astype(np.int64) % 2).astype(np.int8)
