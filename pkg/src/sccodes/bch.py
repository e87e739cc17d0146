"""Binary BCH codes: systematic encoding and bounded-distance decoding.

Bit ``i`` of a length-``n`` word is the coefficient of ``x^(n-1-i)``: the
message occupies the first ``k`` positions and the parity the last ``n - k``.
Shortening removes leading message positions, so the same convention holds
for shortened codes. Decoding uses syndromes, Berlekamp-Massey and a Chien
search restricted to the (shortened) length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

# primitive polynomials, bit i = coefficient of x^i
PRIMITIVE = {3: 0b1011, 4: 0b10011, 5: 0b100101, 6: 0b1000011, 7: 0b10001001,
             8: 0b100011101, 9: 0b1000010001, 10: 0b10000001001}


class DecodeFailure(Exception):
    """Bounded-distance decoding found no codeword within distance ``t``."""


def gf_tables(m: int) -> tuple[np.ndarray, np.ndarray]:
    """``exp`` (length ``2(2^m-1)``) and ``log`` tables of GF(2^m)."""
    if m not in PRIMITIVE:
        raise ValueError(f"no primitive polynomial tabulated for m={m}")
    q = 1 << m
    exp = np.zeros(2 * (q - 1), dtype=np.int64)
    log = np.full(q, -1, dtype=np.int64)
    x = 1
    for i in range(q - 1):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & q:
            x ^= PRIMITIVE[m]
    exp[q - 1:] = exp[:q - 1]
    return exp, log


def _poly_mul_gf2(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def minimal_polynomial(i: int, m: int, exp: np.ndarray) -> int:
    """Minimal polynomial of ``alpha^i`` over GF(2), as an integer (bit ``j`` = ``x^j``)."""
    n = (1 << m) - 1
    coset, e = [], i % n
    while e not in coset:
        coset.append(e)
        e = (2 * e) % n
    log = {int(v): j for j, v in enumerate(exp[:n])}
    # prod (x - alpha^c) with GF(2^m) coefficients, lowest degree first
    poly = [1]
    for c in coset:
        root = int(exp[c])
        new = [0] * (len(poly) + 1)
        for d, coef in enumerate(poly):
            new[d + 1] ^= coef
            if coef:
                new[d] ^= int(exp[(log[coef] + log[root]) % n])
        poly = new
    if any(c not in (0, 1) for c in poly):
        raise ArithmeticError("minimal polynomial has non-binary coefficients")
    return sum(c << d for d, c in enumerate(poly))


@dataclass(frozen=True)
class BCHSpec:
    """Narrow-sense primitive BCH code over GF(2^m_gf), optionally shortened."""

    m_gf: int
    t: int
    shorten: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be >= 1")
        exp, log = gf_tables(self.m_gf)
        n_full = (1 << self.m_gf) - 1
        g, seen = 1, set()
        for i in range(1, 2 * self.t + 1):
            mp = minimal_polynomial(i, self.m_gf, exp)
            if mp not in seen:
                seen.add(mp)
                g = _poly_mul_gf2(g, mp)
        deg = g.bit_length() - 1
        if deg >= n_full - self.shorten or self.shorten < 0:
            raise ValueError(f"no message bits left for m={self.m_gf}, t={self.t}, shorten={self.shorten}")
        self._cache.update(exp=exp, log=log, g=g, deg=deg)

    @classmethod
    def from_nkt(cls, n: int, k: int, t: int) -> "BCHSpec":
        """Find the (possibly shortened) BCH code with parameters ``(n, k, t)``."""
        for m in sorted(PRIMITIVE):
            full = (1 << m) - 1
            if full < n:
                continue
            spec = cls(m, t, full - n)
            if spec.k == k:
                return spec
            raise ValueError(f"BCH with n={n}, t={t} over GF(2^{m}) has k={spec.k}, not {k}")
        raise ValueError(f"no tabulated field for n={n}")

    @property
    def n(self) -> int:
        return (1 << self.m_gf) - 1 - self.shorten

    @property
    def k(self) -> int:
        return self.n - self._cache["deg"]

    @property
    def generator(self) -> int:
        return self._cache["g"]

    @cached_property
    def generator_bits(self) -> np.ndarray:
        """Coefficients ``g_0..g_r``."""
        g = self.generator
        return np.array([(g >> i) & 1 for i in range(g.bit_length())], dtype=np.int64)

    @property
    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        return self._cache["exp"], self._cache["log"]


@numba.njit(cache=True)
def _encode_rows(msgs, gbits, n):
    """Systematic encoding: parity = remainder of m(x) x^r mod g(x)."""
    rows, k = msgs.shape
    r = len(gbits) - 1
    out = np.zeros((rows, n), np.int8)
    for row in range(rows):
        reg = np.zeros(r, np.int64)  # reg[j] = coefficient of x^(r-1-j)
        for i in range(k):
            fb = msgs[row, i] ^ reg[0]
            for j in range(r - 1):
                reg[j] = reg[j + 1] ^ (fb & gbits[r - 1 - j])
            reg[r - 1] = fb & gbits[0]
            out[row, i] = msgs[row, i]
        for j in range(r):
            out[row, k + j] = reg[j]
    return out


@numba.njit(cache=True)
def _decode_word(w, n, t, nfull, exp, log):
    """In-place bounded-distance decoding; returns #corrections or -1 on failure."""
    # syndromes S_1..S_2t
    S = np.zeros(2 * t + 1, np.int64)
    nz = False
    for j in range(1, 2 * t + 1):
        s = 0
        for i in range(n):
            if w[i]:
                s ^= exp[(j * (n - 1 - i)) % nfull]
        S[j] = s
        if s:
            nz = True
    if not nz:
        return 0
    # Berlekamp-Massey
    C = np.zeros(2 * t + 2, np.int64)
    B = np.zeros(2 * t + 2, np.int64)
    C[0] = 1
    B[0] = 1
    Lc = 0
    mm = 1
    b = 1
    for r in range(2 * t):
        d = S[r + 1]
        for i in range(1, Lc + 1):
            if C[i] and S[r + 1 - i]:
                d ^= exp[log[C[i]] + log[S[r + 1 - i]]]
        if d == 0:
            mm += 1
            continue
        coef = exp[(log[d] - log[b]) % nfull]
        T = C.copy()
        for i in range(mm, 2 * t + 2):
            if B[i - mm]:
                C[i] ^= exp[log[coef] + log[B[i - mm]]]
        if 2 * Lc <= r:
            Lc = r + 1 - Lc
            B[:] = T
            b = d
            mm = 1
        else:
            mm += 1
    if Lc > t:
        return -1
    for i in range(Lc + 1, 2 * t + 2):
        if C[i]:
            return -1
    # Chien search over exponents 0..n-1: root alpha^(-e) marks an error at x^e
    found = 0
    pos = np.empty(Lc, np.int64)
    for e in range(n):
        acc = 1
        for i in range(1, Lc + 1):
            if C[i]:
                acc ^= exp[(log[C[i]] - i * e) % nfull]
        if acc == 0:
            if found == Lc:
                return -1
            pos[found] = n - 1 - e
            found += 1
    if found != Lc:
        return -1
    for i in range(found):
        w[pos[i]] ^= 1
    return found


class BCHCode:
    """Encoder/decoder pair for a :class:`BCHSpec`."""

    def __init__(self, spec: BCHSpec):
        self.spec = spec
        self.n, self.k, self.t = spec.n, spec.k, spec.t
        self.exp, self.log = spec.tables
        self.nfull = (1 << spec.m_gf) - 1
        self.gbits = spec.generator_bits

    def encode(self, msg) -> np.ndarray:
        msg = np.asarray(msg, dtype=np.int8)
        if msg.shape[-1] != self.k:
            raise ValueError(f"message length {msg.shape[-1]} != k={self.k}")
        out = _encode_rows(np.atleast_2d(msg), self.gbits, self.n)
        return out[0] if msg.ndim == 1 else out

    def decode(self, word) -> tuple[np.ndarray, int]:
        w = np.array(word, dtype=np.int8)
        if w.shape != (self.n,):
            raise ValueError(f"word length {w.shape} != n={self.n}")
        nc = _decode_word(w, self.n, self.t, self.nfull, self.exp, self.log)
        if nc < 0:
            raise DecodeFailure("more than t errors detected")
        return w, int(nc)

    def syndrome_nonzero(self, word) -> bool:
        w = np.asarray(word, dtype=np.int8)
        return bool(np.any(self.parity_check @ w % 2))

    @cached_property
    def parity_check(self) -> np.ndarray:
        """Binary parity-check matrix with ``H c = 0`` (from the systematic generator)."""
        G = self.encode(np.eye(self.k, dtype=np.int8))
        P = G[:, self.k:]
        return np.hstack([P.T, np.eye(self.n - self.k, dtype=np.int8)]).astype(np.int8)


def bch_encode(spec: BCHSpec, message) -> np.ndarray:
    return BCHCode(spec).encode(message)


def bch_decode(spec: BCHSpec, word) -> tuple[np.ndarray, int]:
    """Returns ``(codeword, corrections)``; raises :class:`DecodeFailure`."""
    return BCHCode(spec).decode(word)
