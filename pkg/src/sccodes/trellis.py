"""Recursive systematic convolutional codes: trellis tables, encoding, BCJR.

Generators use the octal notation where the most significant bit is the
coefficient of ``D^0``: ``[15]_oct = 1 + D + D^3``. A generator matrix string
lists one row per input, e.g. ``"[1,5/7]"`` (rate 1/2) or
``"[1,0,5/7; 0,1,3/7]"`` (rate 2/3). The first ``k`` columns must be the
identity (systematic part); every parity column shares one feedback
polynomial per column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from .channels import LLR_MAX


def octal_poly(s: str | int) -> list[int]:
    """Coefficients ``[c0, c1, ...]`` of an octal generator."""
    v = int(str(s), 8)
    if v == 0:
        return [0]
    return [int(b) for b in bin(v)[2:]]


def parse_generator(text: str) -> tuple[int, list[list[tuple[str, str]]]]:
    rows = [r for r in re.sub(r"[\[\]\s]", "", text).split(";") if r]
    if not rows:
        raise ValueError(f"empty generator {text!r}")
    k = len(rows)
    cols = [r.split(",") for r in rows]
    if len({len(c) for c in cols}) != 1:
        raise ValueError(f"ragged generator matrix {text!r}")
    out = []
    for i, row in enumerate(cols):
        for j in range(k):
            if row[j] != ("1" if i == j else "0"):
                raise ValueError(f"generator {text!r} is not systematic")
        entries = []
        for e in row[k:]:
            num, _, den = e.partition("/")
            entries.append((num, den or "1"))
        out.append(entries)
    return k, out


@dataclass(frozen=True)
class ConvCodeSpec:
    """Systematic (possibly recursive) convolutional code.

    ``termination`` is ``"open"`` (trellis left unterminated, backward
    recursion starts uniform) or ``"zero-tail"`` (``nu`` extra steps drive
    the encoder back to the zero state).
    """

    generator: str
    termination: str = "open"
    _tables: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.termination not in ("open", "zero-tail"):
            raise ValueError(f"unknown termination {self.termination!r}")
        k, entries = parse_generator(self.generator)
        n_par = len(entries[0])
        num = []  # num[j][i] numerator of parity j from input i
        den = []
        for j in range(n_par):
            dens = {entries[i][j][1] for i in range(k)}
            if len(dens) != 1:
                raise ValueError("parity column needs one common feedback polynomial")
            d = octal_poly(dens.pop())
            if d[0] != 1:
                raise ValueError("feedback polynomial needs a nonzero constant term")
            den.append(d)
            num.append([octal_poly(entries[i][j][0]) for i in range(k)])
        nu = max(len(p) for p in [*den, *(q for row in num for q in row)]) - 1
        pad = lambda p: p + [0] * (nu + 1 - len(p))  # noqa: E731
        self._tables["k"] = k
        self._tables["n_par"] = n_par
        self._tables["nu"] = nu
        self._tables["num"] = np.array([[pad(q) for q in row] for row in num], dtype=np.int64)
        self._tables["den"] = np.array([pad(d) for d in den], dtype=np.int64)

    @property
    def k(self) -> int:
        return self._tables["k"]

    @property
    def n_par(self) -> int:
        return self._tables["n_par"]

    @property
    def nu(self) -> int:
        """Memory per parity register chain."""
        return self._tables["nu"]

    @property
    def rate(self):
        from fractions import Fraction
        return Fraction(self.k, self.k + self.n_par)

    @property
    def n_states(self) -> int:
        return 2 ** (self.nu * self.n_par)

    @cached_property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """``next_state[s, a]`` and ``parity[s, a, j]`` for input word ``a`` (bit ``i`` = input ``i``)."""
        k, n_par, nu = self.k, self.n_par, self.nu
        num, den = self._tables["num"], self._tables["den"]
        S, A = self.n_states, 2 ** k
        nxt = np.zeros((S, A), dtype=np.int64)
        par = np.zeros((S, A, n_par), dtype=np.int64)
        for s in range(S):
            for a in range(A):
                u = [(a >> i) & 1 for i in range(k)]
                ns = 0
                for j in range(n_par):
                    reg = [(s >> (j * nu + r)) & 1 for r in range(nu)]  # reg[0] is s_1
                    p = (reg[0] if nu else 0) ^ (sum(num[j, i, 0] * u[i] for i in range(k)) & 1)
                    new = []
                    for r in range(nu):
                        feed = sum(num[j, i, r + 1] * u[i] for i in range(k)) + den[j, r + 1] * p
                        nxt_bit = ((reg[r + 1] if r + 1 < nu else 0) + feed) & 1
                        new.append(nxt_bit)
                    par[s, a, j] = p
                    for r, b in enumerate(new):
                        ns |= b << (j * nu + r)
                nxt[s, a] = ns
        return nxt, par

    @cached_property
    def tail_inputs(self) -> np.ndarray:
        """For each state, ``nu`` input words that drive it to the zero state."""
        nxt, _ = self.tables
        S, A = nxt.shape
        steps = self.nu * self.n_par
        # backward BFS from state 0
        path: dict[int, list[int]] = {0: []}
        frontier = [0]
        while frontier:
            new = []
            for s in range(S):
                if s in path:
                    continue
                for a in range(A):
                    if nxt[s, a] in path and nxt[s, a] in frontier:
                        path[s] = [a] + path[nxt[s, a]]
                        new.append(s)
                        break
            frontier = new
        if len(path) != S:
            raise ValueError("encoder cannot be driven to the zero state")
        out = np.zeros((S, steps), dtype=np.int64)
        for s, p in path.items():
            out[s, :len(p)] = p
        return out

    @property
    def tail_length(self) -> int:
        return self.nu * self.n_par if self.termination == "zero-tail" else 0


@numba.njit(cache=True)
def _encode(nxt, par, words, tails):
    T = len(words)
    n_par = par.shape[2]
    tail_len = tails.shape[1]
    out = np.zeros((T + tail_len, n_par), np.int64)
    in_all = np.zeros(T + tail_len, np.int64)
    s = 0
    for t in range(T):
        a = words[t]
        in_all[t] = a
        for j in range(n_par):
            out[t, j] = par[s, a, j]
        s = nxt[s, a]
    if tail_len:
        tw = tails[s].copy()
        for t in range(tail_len):
            a = tw[t]
            in_all[T + t] = a
            for j in range(n_par):
                out[T + t, j] = par[s, a, j]
            s = nxt[s, a]
    return out, in_all, s


def _words(bits: np.ndarray, k: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim == 1:
        bits = bits.reshape(-1, 1) if k == 1 else bits.reshape(-1, k)
    return (bits << np.arange(k)).sum(axis=1)


def cc_encode(spec: ConvCodeSpec, bits) -> tuple[np.ndarray, np.ndarray]:
    """Encode from the zero state.

    ``bits`` has shape ``(T, k)`` (or ``(T,)`` for ``k = 1``). Returns
    ``(systematic, parity)`` of shapes ``(T', k)`` and ``(T', n_par)`` where
    ``T' = T + tail_length``.
    """
    nxt, par = spec.tables
    words = _words(bits, spec.k)
    if len(words) == 0:
        raise ValueError("empty input")
    tails = spec.tail_inputs if spec.termination == "zero-tail" else np.zeros((spec.n_states, 0), np.int64)
    p, w, _ = _encode(nxt, par, words, tails)
    sys_bits = (w[:, None] >> np.arange(spec.k)) & 1
    return sys_bits.astype(np.int8), p.astype(np.int8)


@numba.njit(cache=True, inline="always")
def _maxstar(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


@numba.njit(cache=True)
def _bcjr(nxt, par, la_in, la_par, end_zero):
    T, k = la_in.shape
    n_par = la_par.shape[1]
    S, A = nxt.shape
    # branch metrics
    gam = np.zeros((T, S, A))
    for t in range(T):
        for s in range(S):
            for a in range(A):
                g = 0.0
                for i in range(k):
                    if (a >> i) & 1:
                        g -= 0.5 * la_in[t, i]
                    else:
                        g += 0.5 * la_in[t, i]
                for j in range(n_par):
                    if par[s, a, j]:
                        g -= 0.5 * la_par[t, j]
                    else:
                        g += 0.5 * la_par[t, j]
                gam[t, s, a] = g
    alpha = np.full((T + 1, S), -np.inf)
    alpha[0, 0] = 0.0
    for t in range(T):
        for s in range(S):
            if alpha[t, s] == -np.inf:
                continue
            for a in range(A):
                ns = nxt[s, a]
                alpha[t + 1, ns] = _maxstar(alpha[t + 1, ns], alpha[t, s] + gam[t, s, a])
        mx = alpha[t + 1].max()
        for s in range(S):
            alpha[t + 1, s] -= mx
    beta = np.full((T + 1, S), -np.inf)
    if end_zero:
        beta[T, 0] = 0.0
    else:
        for s in range(S):
            beta[T, s] = 0.0
    for t in range(T - 1, -1, -1):
        for s in range(S):
            acc = -np.inf
            for a in range(A):
                acc = _maxstar(acc, gam[t, s, a] + beta[t + 1, nxt[s, a]])
            beta[t, s] = acc
        mx = beta[t].max()
        for s in range(S):
            beta[t, s] -= mx
    post_in = np.zeros((T, k))
    post_par = np.zeros((T, n_par))
    v = np.empty((S, A))
    sum0 = np.empty(k + n_par)
    sum1 = np.empty(k + n_par)
    for t in range(T):
        # one log-sum-exp per bit: shift by the branch maximum, sum, take logs
        mx = -np.inf
        for s in range(S):
            for a in range(A):
                v[s, a] = alpha[t, s] + gam[t, s, a] + beta[t + 1, nxt[s, a]]
                if v[s, a] > mx:
                    mx = v[s, a]
        for q in range(k + n_par):
            sum0[q] = 0.0
            sum1[q] = 0.0
        for s in range(S):
            for a in range(A):
                if v[s, a] == -np.inf:
                    continue
                e = np.exp(v[s, a] - mx)
                for i in range(k):
                    if (a >> i) & 1:
                        sum1[i] += e
                    else:
                        sum0[i] += e
                for j in range(n_par):
                    if par[s, a, j]:
                        sum1[k + j] += e
                    else:
                        sum0[k + j] += e
        for i in range(k):
            post_in[t, i] = np.log(sum0[i]) - np.log(sum1[i])
        for j in range(n_par):
            post_par[t, j] = np.log(sum0[k + j]) - np.log(sum1[k + j])
    return post_in, post_par


def bcjr_core(spec: ConvCodeSpec, la_in: np.ndarray, la_par: np.ndarray):
    """A-posteriori LLRs of every input and parity bit given bitwise priors.

    ``la_in`` is ``(T, k)`` and ``la_par`` is ``(T, n_par)``, including the
    tail steps for zero-tail codes.
    """
    nxt, par = spec.tables
    la_in = np.ascontiguousarray(la_in, dtype=float).reshape(-1, spec.k)
    la_par = np.ascontiguousarray(la_par, dtype=float).reshape(-1, spec.n_par)
    return _bcjr(nxt, par, la_in, la_par, spec.termination == "zero-tail")


@dataclass
class BCJRResult:
    posterior: np.ndarray  # inputs, (T, k)
    extrinsic: np.ndarray  # inputs, (T, k)
    parity_posterior: np.ndarray  # (T, n_par)


def bcjr_decode(spec: ConvCodeSpec, prior, channel) -> BCJRResult:
    """Exact log-domain forward-backward decoding.

    ``prior`` is ``(T, k)`` a-priori LLRs on the inputs; ``channel`` is
    ``(T, k + n_par)`` channel LLRs in the order ``[systematic, parity]``.
    The extrinsic output is ``posterior - prior - channel_systematic``.
    """
    k = spec.k
    prior = np.asarray(prior, dtype=float).reshape(-1, k)
    channel = np.asarray(channel, dtype=float).reshape(len(prior), k + spec.n_par)
    la_in = np.clip(prior + channel[:, :k], -2 * LLR_MAX, 2 * LLR_MAX)
    post_in, post_par = bcjr_core(spec, la_in, channel[:, k:])
    return BCJRResult(post_in, post_in - prior - channel[:, :k], post_par)


@numba.njit(cache=True)
def _consistent(nxt, par, words, hard_par):
    s = 0
    for t in range(len(words)):
        a = words[t]
        for j in range(par.shape[2]):
            if par[s, a, j] != hard_par[t, j]:
                return False
        s = nxt[s, a]
    return True


def path_consistent(spec: ConvCodeSpec, hard_in: np.ndarray, hard_par: np.ndarray) -> bool:
    """True if re-encoding ``hard_in`` reproduces ``hard_par`` (a trellis 'syndrome' check)."""
    nxt, par = spec.tables
    return bool(_consistent(nxt, par, _words(hard_in, spec.k), np.asarray(hard_par, np.int64).reshape(-1, spec.n_par)))
