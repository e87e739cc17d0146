"""Spatially coupled turbo-like codes: GSC-PCC, SC-SCC and HSC-BCC.

Every family is built as a *socket graph*: a set of bit variables (information,
parity, coupling copies) and a list of trellis instances whose input and
parity sockets point at variables. The same structure drives encoding (run
the trellises in construction order) and sliding-window turbo decoding
(each trellis exchanges extrinsic LLRs with the shared variables).

Variable 0 is a pinned all-zero bit used for coupling inputs before the chain
start and for terminated information.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np

from .chain import ChainTranscript, CoupledChainSpec, measured_rate
from .channels import LLR_MAX, make_puncture
from .ldpc import WindowConfig
from .trellis import ConvCodeSpec, _bcjr, _consistent, cc_encode

ZERO = 0


# ---------------------------------------------------------------------------
# Parameters


@dataclass(frozen=True)
class RepetitionSpec:
    """Partial repetition: ``q`` copies of a fraction ``lam`` of ``u'``."""

    q: int
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        if self.q < 1:
            raise ValueError(f"repetition factor q={self.q} must be >= 1")
        if not 0 < self.lam <= Fraction(1, self.q):
            raise ValueError(f"repetition ratio {self.lam} outside (0, 1/q]")

    def lengths(self, K: int) -> tuple[int, int]:
        """``(|u'|, |u_r|)`` for ``K`` information bits per position."""
        P = Fraction(K) / (1 - self.lam * (self.q - 1))
        R = self.lam * P
        if P.denominator != 1 or R.denominator != 1:
            raise ValueError(f"K={K} gives non-integer |u'|={P} or |u_r|={R}")
        return int(P), int(R)


@dataclass(frozen=True)
class InterleaverSpec:
    """Seeded uniform permutation for one use site at one time instant."""

    length: int
    seed: int
    site: int = 0
    t: int = 0

    @property
    def perm(self) -> np.ndarray:
        ss = np.random.SeedSequence([int(self.seed), 0x1E, int(self.site), int(self.t)])
        return np.random.default_rng(ss).permutation(self.length)

    @property
    def inverse(self) -> np.ndarray:
        return np.argsort(self.perm)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[self.perm]


def half_time_position(tau: int) -> int:
    """0-based time position of 1-based half-time instant ``tau``."""
    if tau < 1:
        raise ValueError("half-time instants start at 1")
    return (tau - 1) // 2


def partition(n: int, parts: int) -> list[slice]:
    """Contiguous equal-size segments; the remainder goes to the last one."""
    size = n // parts
    cuts = [i * size for i in range(parts)] + [n]
    return [slice(cuts[i], cuts[i + 1]) for i in range(parts)]


# ---------------------------------------------------------------------------
# Socket graph


@dataclass
class TrellisNode:
    code: ConvCodeSpec
    pos: int
    in_vars: np.ndarray  # (T, k)
    par_vars: np.ndarray  # (T, n_par)
    label: str = ""


@dataclass
class SocketGraph:
    """Variables plus trellis instances, in a valid encoding order."""

    L: int
    var_pos: list = field(default_factory=lambda: [-1])
    trellises: list = field(default_factory=list)

    def new_vars(self, n: int, pos: int) -> np.ndarray:
        start = len(self.var_pos)
        self.var_pos.extend([pos] * n)
        return np.arange(start, start + n, dtype=np.int64)

    def zeros(self, n: int) -> np.ndarray:
        return np.full(n, ZERO, dtype=np.int64)

    @property
    def n_vars(self) -> int:
        return len(self.var_pos)

    def add_trellis(self, code: ConvCodeSpec, pos: int, inputs: np.ndarray, label: str = "") -> np.ndarray:
        """Attach a trellis reading ``inputs`` (``(T, k)`` variable ids); returns its parity variables."""
        inputs = np.asarray(inputs, dtype=np.int64).reshape(-1, code.k)
        tl = code.tail_length
        if tl:
            inputs = np.vstack([inputs, self.new_vars(tl * code.k, pos).reshape(tl, code.k)])
        par = self.new_vars(len(inputs) * code.n_par, pos).reshape(-1, code.n_par)
        self.trellises.append(TrellisNode(code, pos, inputs, par, label))
        return par

    def tail_vars(self, node: TrellisNode) -> np.ndarray:
        return node.in_vars[len(node.in_vars) - node.code.tail_length:].ravel()

    def encode_values(self, values: np.ndarray) -> np.ndarray:
        """Fill parity (and tail) variables given the information variables."""
        values[ZERO] = 0
        for node in self.trellises:
            T = len(node.in_vars) - node.code.tail_length
            sys_bits, par = cc_encode(node.code, values[node.in_vars[:T]])
            if node.code.tail_length:
                values[node.in_vars[T:]] = sys_bits[T:]
            values[node.par_vars] = par
        return values


# ---------------------------------------------------------------------------
# Families


@dataclass
class SCTCCode:
    """A built spatially coupled turbo-like code."""

    family: str
    graph: SocketGraph
    info_vars: list  # per position, variable ids carrying data
    tx_vars: list  # per position, transmitted variable ids in emission order
    puncturable: np.ndarray  # designated parity variables
    asymptotic_rate: Fraction
    closed_form_rate: Fraction
    m: int

    @property
    def L(self) -> int:
        return self.graph.L

    @property
    def K(self) -> int:
        return sum(len(v) for v in self.info_vars)

    @property
    def tx_all(self) -> np.ndarray:
        return np.concatenate(self.tx_vars)

    def transcript(self) -> ChainTranscript:
        tr = ChainTranscript(self.L)
        for t in range(self.L):
            tr.record(t + 1, len(self.info_vars[t]), len(self.tx_vars[t]))
        return tr

    @property
    def rate(self) -> Fraction:
        return measured_rate(self.transcript())

    def encode(self, info: np.ndarray) -> np.ndarray:
        """Variable values for a flat information vector of length ``self.K``."""
        info = np.asarray(info, dtype=np.int8).ravel()
        if len(info) != self.K:
            raise ValueError(f"expected {self.K} information bits, got {len(info)}")
        values = np.zeros(self.graph.n_vars, dtype=np.int8)
        values[np.concatenate(self.info_vars)] = info
        return self.graph.encode_values(values)

    def codeword(self, info: np.ndarray) -> np.ndarray:
        """Transmitted bits ``[x_1, ..., x_L]`` (before puncturing)."""
        return self.encode(info)[self.tx_all]

    def puncture_for(self, target: Fraction | float, reference: str = "asymptotic", seed: int = 0) -> np.ndarray:
        """Transmitted-frame indices to puncture, drawn uniformly from the designated parity bits.

        The number punctured is ``(1 - R_ref/target)`` times the frame length,
        with ``R_ref`` the asymptotic (``L -> inf``) or the finite-``L`` rate.
        """
        r_ref = self.asymptotic_rate if reference == "asymptotic" else self.rate
        n = len(self.tx_all)
        k = int(round(float(1 - Fraction(r_ref) / Fraction(target)) * n))
        if k < 0:
            raise ValueError(f"target rate {target} is below the reference rate {r_ref}")
        cand = np.nonzero(np.isin(self.tx_all, self.puncturable))[0]
        if k > len(cand):
            raise ValueError(f"target rate {target} needs {k} punctures, only {len(cand)} allowed")
        if k == 0:
            return np.zeros(0, np.int64)
        return make_puncture(n, k / len(cand), seed=seed, candidates=cand).indices


def _repeat_layout(K: int, rep: RepetitionSpec) -> np.ndarray:
    """Indices into ``u`` forming ``u'``: the first ``|u_r|`` bits repeated ``q`` times, adjacently."""
    _, R = rep.lengths(K)
    head = np.repeat(np.arange(R), rep.q)
    return np.concatenate([head, np.arange(R, K)]).astype(np.int64)


def _coupled_input(parts_hist: list, t: int, m: int, graph: SocketGraph, sizes: list[int]) -> np.ndarray:
    """Concatenate part 0 of time ``t`` with part ``i`` of time ``t-i`` (zero before the start)."""
    segs = []
    for i in range(m + 1):
        if t - i >= 0:
            segs.append(parts_hist[t - i][i])
        else:
            segs.append(graph.zeros(sizes[i]))
    return np.concatenate(segs)


def _joint_or_split(segs_in: np.ndarray, sizes: list[int], seed: int, site: int, t: int, joint: bool) -> np.ndarray:
    if joint:
        return InterleaverSpec(len(segs_in), seed, site, t).apply(segs_in)
    out, start = [], 0
    for i, s in enumerate(sizes):
        out.append(InterleaverSpec(s, seed, site * 64 + i + 1, t).apply(segs_in[start:start + s]))
        start += s
    return np.concatenate(out)


def gscpcc_build(rep: RepetitionSpec, cc: ConvCodeSpec, chain: CoupledChainSpec, K: int,
                 seed: int = 0, joint_interleaver: bool = True) -> SCTCCode:
    """GSC-PCC with ``K`` information bits per position (``q = 1`` gives SC-PCC).

    ``lam`` must satisfy ``lam <= 1/q`` and make ``|u'| = K/(1-lam(q-1))``
    integral. Positions ``t > L - m`` carry zero information but are still
    transmitted, matching the closed-form rate.
    """
    if cc.k != 1:
        raise ValueError("GSC-PCC components must be rate k/(k+n) with k = 1")
    L, m = chain.L, chain.m
    g = SocketGraph(L)
    P, _ = rep.lengths(K)
    layout = _repeat_layout(K, rep)
    cuts = partition(P, m + 1)
    sizes = [c.stop - c.start for c in cuts]
    hist_u, hist_l = [], []
    info_vars, tx_vars, punct = [], [], []
    for t in range(L):
        u = g.new_vars(K, t)
        if t < L - m:
            info_vars.append(u)
        else:
            info_vars.append(np.zeros(0, np.int64))
        up = u[layout]
        upt = InterleaverSpec(P, seed, 1, t).apply(up)
        hist_u.append([up[c] for c in cuts])
        hist_l.append([upt[c] for c in cuts])
        in_u = _joint_or_split(_coupled_input(hist_u, t, m, g, sizes), sizes, seed, 2, t, joint_interleaver)
        in_l = _joint_or_split(_coupled_input(hist_l, t, m, g, sizes), sizes, seed, 3, t, joint_interleaver)
        vu = g.add_trellis(cc, t, in_u, "upper").ravel()
        vl = g.add_trellis(cc, t, in_l, "lower").ravel()
        tails = [g.tail_vars(n) for n in g.trellises[-2:]]
        tx_vars.append(np.concatenate([u, vu, vl, *tails]))
        punct.extend([vu, vl])
    r0 = Fraction(1, 1 + 2 * cc.n_par)
    lamq = rep.lam * (rep.q - 1)
    asym = (1 - lamq) / (1 / r0 - lamq)
    closed = (1 - lamq) * (L - m) / ((1 / r0 - lamq) * L)
    return SCTCCode("gscpcc", g, info_vars, tx_vars, np.concatenate(punct), asym, closed, m)


def scscc_build(outer: ConvCodeSpec, inner: ConvCodeSpec, chain: CoupledChainSpec, K: int,
                seed: int = 0, joint_interleaver: bool = True) -> SCTCCode:
    """SC-SCC: outer code, interleave, partition, couple, inner code."""
    if outer.k != 1 or inner.k != 1:
        raise ValueError("SC-SCC components must have a single input")
    L, m = chain.L, chain.m
    g = SocketGraph(L)
    n_out = K * (1 + outer.n_par) + outer.tail_length * (1 + outer.n_par)
    cuts = partition(n_out, m + 1)
    sizes = [c.stop - c.start for c in cuts]
    hist = []
    info_vars, tx_vars, punct = [], [], []
    for t in range(L):
        u = g.new_vars(K, t)
        info_vars.append(u if t < L - m else np.zeros(0, np.int64))
        vo = g.add_trellis(outer, t, u, "outer")
        otail = g.tail_vars(g.trellises[-1])
        cw = np.concatenate([u, otail, vo.ravel()])
        cwt = InterleaverSpec(len(cw), seed, 1, t).apply(cw)
        hist.append([cwt[c] for c in cuts])
        in_i = _joint_or_split(_coupled_input(hist, t, m, g, sizes), sizes, seed, 2, t, joint_interleaver)
        vi = g.add_trellis(inner, t, in_i, "inner").ravel()
        itail = g.tail_vars(g.trellises[-1])
        tx_vars.append(np.concatenate([u, otail, vo.ravel(), vi, itail]))
        punct.extend([vo.ravel(), vi])
    r0 = outer.rate * inner.rate
    return SCTCCode("scscc", g, info_vars, tx_vars, np.concatenate(punct), r0,
                    Fraction(L - m, L) * r0, m)


def hscbcc_build(cc: ConvCodeSpec, sigma: int, L: int, K: int, seed: int = 0) -> SCTCCode:
    """HSC-BCC with a rate-2/3 component and half-time coupling memory ``sigma``.

    ``u_t`` is split into halves for half-time instants ``2t-1`` and ``2t``;
    the last ``sigma`` half-blocks carry zero information and are not sent.
    """
    if sigma < 2:
        raise ValueError(f"sigma={sigma} must be >= 2")
    if cc.k != 2 or cc.n_par != 1:
        raise ValueError("HSC-BCC needs a rate-2/3 component with two inputs and one parity")
    if K % 2:
        raise ValueError("K must be even")
    m = -(-sigma // 2)
    CoupledChainSpec(L, m)
    g = SocketGraph(L)
    h = K // 2
    udot: dict[int, np.ndarray] = {}
    vdot: dict[int, np.ndarray] = {}
    info_vars = [[] for _ in range(L)]
    tx_vars = [[] for _ in range(L)]
    punct = []
    for tau in range(1, 2 * L + 1):
        t = half_time_position(tau)
        if tau <= 2 * L - sigma:
            udot[tau] = g.new_vars(h, t)
            info_vars[t].append(udot[tau])
            tx_vars[t].append(udot[tau])
        else:
            udot[tau] = g.zeros(h)
        a = np.concatenate([udot.get(tau - sigma + 1, g.zeros(h)), udot[tau]])
        b = vdot.get(tau - sigma, g.zeros(K))
        a = InterleaverSpec(K, seed, 1, tau).apply(a)
        b = InterleaverSpec(K, seed, 2, tau).apply(b)
        vdot[tau] = g.add_trellis(cc, t, np.stack([a, b], axis=1), "upper" if tau % 2 else "lower").ravel()
        tail = g.tail_vars(g.trellises[-1])
        tx_vars[t].extend([vdot[tau], tail])
        punct.append(vdot[tau])
    info = [np.concatenate(v) if v else np.zeros(0, np.int64) for v in info_vars]
    tx = [np.concatenate(v) for v in tx_vars]
    return SCTCCode("hscbcc", g, info, tx, np.concatenate(punct), Fraction(1, 3),
                    Fraction(2 * L - sigma, 6 * L - sigma), m)


def gscpcc_encode(rep, cc, chain, K, info, seed=0, joint_interleaver=True):
    code = gscpcc_build(rep, cc, chain, K, seed, joint_interleaver)
    return code.codeword(info), code.transcript()


def scscc_encode(outer, inner, chain, K, info, seed=0, joint_interleaver=True):
    code = scscc_build(outer, inner, chain, K, seed, joint_interleaver)
    return code.codeword(info), code.transcript()


def hscbcc_encode(cc, sigma, L, K, info, seed=0):
    code = hscbcc_build(cc, sigma, L, K, seed)
    return code.codeword(info), code.transcript()


# ---------------------------------------------------------------------------
# Sliding-window turbo decoding


@numba.njit(cache=True)
def _trellis_update(nxt, par, tot, in_vars, par_vars, ext_in, ext_par, end_zero, clip):
    T, k = in_vars.shape
    n_par = par_vars.shape[1]
    la_in = np.empty((T, k))
    la_par = np.empty((T, n_par))
    for t in range(T):
        for i in range(k):
            v = in_vars[t, i]
            x = clip if v == 0 else tot[v] - ext_in[t, i]
            la_in[t, i] = min(max(x, -clip), clip)
        for j in range(n_par):
            v = par_vars[t, j]
            x = clip if v == 0 else tot[v] - ext_par[t, j]
            la_par[t, j] = min(max(x, -clip), clip)
    post_in, post_par = _bcjr(nxt, par, la_in, la_par, end_zero)
    for t in range(T):
        for i in range(k):
            v = in_vars[t, i]
            e = min(max(post_in[t, i] - la_in[t, i], -clip), clip)
            if v != 0:
                tot[v] += e - ext_in[t, i]
            ext_in[t, i] = e
        for j in range(n_par):
            v = par_vars[t, j]
            e = min(max(post_par[t, j] - la_par[t, j], -clip), clip)
            if v != 0:
                tot[v] += e - ext_par[t, j]
            ext_par[t, j] = e


@dataclass
class TurboWindowResult:
    info: np.ndarray  # flat hard decisions on information bits
    llr: np.ndarray  # final total LLR per variable
    iterations: int
    per_position_iters: np.ndarray


def sctc_window_decode(code: SCTCCode, frame_llr: np.ndarray, cfg: WindowConfig,
                       inner_iters: int = 1) -> TurboWindowResult:
    """Sliding-window iterative decoding over the socket graph.

    ``frame_llr`` holds one channel LLR per transmitted bit (``code.tx_all``
    order; punctured bits 0). Per window iteration every trellis with
    position in the window runs ``inner_iters`` BCJR passes, oldest position
    first. With the ``"zero-syndrome"`` rule the window stops early once
    every trellis in it is a consistent path under the current hard
    decisions with no zero LLR; ``"fixed-iterations"`` always runs ``cfg.max_iters``.
    """
    g = code.graph
    L = g.L
    frame_llr = np.asarray(frame_llr, dtype=float)
    tx = code.tx_all
    if len(frame_llr) != len(tx):
        raise ValueError(f"frame length {len(frame_llr)} != {len(tx)} transmitted bits")
    if not 1 <= cfg.W <= L:
        raise ValueError(f"window size {cfg.W} outside 1..{L}")
    tot = np.zeros(g.n_vars)
    np.add.at(tot, tx, np.clip(frame_llr, -LLR_MAX, LLR_MAX))
    tot[ZERO] = LLR_MAX
    nodes = g.trellises
    ext = [(np.zeros(n.in_vars.shape), np.zeros(n.par_vars.shape)) for n in nodes]
    tables = [n.code.tables for n in nodes]
    by_pos: list[list[int]] = [[] for _ in range(L)]
    for i, n in enumerate(nodes):
        by_pos[n.pos].append(i)
    per_pos = np.zeros(L, dtype=np.int64)
    total = 0
    decided = []
    for t in range(L):
        active = [i for p in range(t, min(t + cfg.W, L)) for i in by_pos[p]]
        for it in range(cfg.max_iters):
            if cfg.stop_rule == "zero-syndrome" and _window_consistent(nodes, tables, active, tot):
                break
            for i in active:
                n = nodes[i]
                nxt, par = tables[i]
                for _ in range(inner_iters):
                    _trellis_update(nxt, par, tot, n.in_vars, n.par_vars, ext[i][0], ext[i][1],
                                    n.code.termination == "zero-tail", LLR_MAX)
            per_pos[t] += 1
            total += 1
        decided.append((tot[code.info_vars[t]] < 0).astype(np.int8))
    return TurboWindowResult(np.concatenate(decided), tot, total, per_pos)


def _window_consistent(nodes, tables, active, tot) -> bool:
    hard = (tot < 0).astype(np.int64)
    for i in active:
        n = nodes[i]
        nxt, par = tables[i]
        if np.any(tot[n.in_vars] == 0) or np.any(tot[n.par_vars] == 0):
            return False
        h = hard[n.in_vars]
        words = (h << np.arange(n.code.k)).sum(axis=1)
        if not _consistent(nxt, par, words, hard[n.par_vars]):
            return False
    return True
