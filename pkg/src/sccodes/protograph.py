"""Protograph-based SC-LDPC construction: edge spreading, coupling, QC lifting, girth."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .chain import ChainTranscript, CoupledChainSpec


class SpreadSumMismatch(ValueError):
    pass


class LiftingTooSmall(ValueError):
    pass


class InvalidLocality(ValueError):
    pass


class InvalidBaseMatrix(ValueError):
    pass


@dataclass(frozen=True)
class ProtographBaseMatrix:
    """Integer ``b_c x b_v`` base matrix; entries are edge multiplicities."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.entries, dtype=np.int64))
        if (a < 0).any():
            raise InvalidBaseMatrix("base matrix entries must be non-negative")
        object.__setattr__(self, "entries", a)
        a.setflags(write=False)

    @property
    def b_c(self) -> int:
        return self.entries.shape[0]

    @property
    def b_v(self) -> int:
        return self.entries.shape[1]

    @property
    def vn_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def cn_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def check_connected(self) -> None:
        """Require at least one edge on every row and column."""
        if (self.cn_degrees == 0).any() or (self.vn_degrees == 0).any():
            raise InvalidBaseMatrix("every row and column needs a positive entry")


def as_base(x) -> ProtographBaseMatrix:
    return x if isinstance(x, ProtographBaseMatrix) else ProtographBaseMatrix(x)


@dataclass(frozen=True)
class EdgeSpreading:
    components: tuple[ProtographBaseMatrix, ...]

    @property
    def m(self) -> int:
        return len(self.components) - 1

    @property
    def base(self) -> ProtographBaseMatrix:
        return ProtographBaseMatrix(sum(c.entries for c in self.components))


def edge_spread(base, components: Sequence) -> EdgeSpreading:
    """Validate that ``components`` decompose ``base`` entrywise.

    >>> edge_spread([[3, 3]], [[[2, 2]], [[1, 1]]]).m
    1
    """
    base = as_base(base)
    base.check_connected()
    comps = tuple(as_base(c) for c in components)
    if not comps:
        raise SpreadSumMismatch("need at least one component")
    for c in comps:
        if c.entries.shape != base.entries.shape:
            raise SpreadSumMismatch(
                f"component shape {c.entries.shape} != base shape {base.entries.shape}"
            )
    total = sum(c.entries for c in comps)
    if not np.array_equal(total, base.entries):
        raise SpreadSumMismatch(f"components sum to {total.tolist()}, base is {base.entries.tolist()}")
    return EdgeSpreading(comps)


@dataclass(frozen=True)
class CoupledBaseMatrix:
    """Banded coupled base matrix with ``L`` block columns and ``L+m`` block rows.

    Block ``(t+i, t)`` (0-based block indices) holds ``B_i``.
    """

    entries: np.ndarray
    L: int
    m: int
    b_c: int
    b_v: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def design_rate(self) -> Fraction:
        return 1 - Fraction((self.L + self.m) * self.b_c, self.L * self.b_v)

    @property
    def asymptotic_rate(self) -> Fraction:
        return 1 - Fraction(self.b_c, self.b_v)

    def block(self, r: int, c: int) -> np.ndarray:
        return self.entries[r * self.b_c:(r + 1) * self.b_c, c * self.b_v:(c + 1) * self.b_v]

    def vn_position(self, col: int) -> int:
        """0-based chain position of base column ``col``."""
        return col // self.b_v

    def cn_position(self, row: int) -> int:
        return row // self.b_c

    def transcript(self, M: int = 1, sent: Sequence[int] | None = None) -> ChainTranscript:
        """Bit accounting for the lifted code.

        The ``m`` extra check block-rows are charged one per tail position,
        so for ``b_v = 2 b_c`` the tail positions carry zero information.
        """
        tr = ChainTranscript(self.L)
        for t in range(1, self.L + 1):
            checks = self.b_c * M * (2 if t > self.L - self.m else 1)
            n_sent = self.b_v * M if sent is None else sent[t - 1]
            tr.record(t, self.b_v * M - checks, n_sent)
        return tr


def build_coupled_base(spread: EdgeSpreading, chain: CoupledChainSpec) -> CoupledBaseMatrix:
    if spread.m != chain.m:
        raise ValueError(f"spreading has memory {spread.m}, chain has m={chain.m}")
    b_c, b_v = spread.components[0].entries.shape
    L, m = chain.L, chain.m
    B = np.zeros(((L + m) * b_c, L * b_v), dtype=np.int64)
    for t in range(L):
        for i, comp in enumerate(spread.components):
            B[(t + i) * b_c:(t + i + 1) * b_c, t * b_v:(t + 1) * b_v] = comp.entries
    B.setflags(write=False)
    return CoupledBaseMatrix(B, L, m, b_c, b_v)


def uncoupled_base(base) -> CoupledBaseMatrix:
    """The block code itself as a length-1 chain with no coupling."""
    base = as_base(base)
    return build_coupled_base(EdgeSpreading((base,)), CoupledChainSpec(1, 0))


# ---------------------------------------------------------------------------
# Quasi-cyclic lifting


@dataclass(frozen=True)
class QCMatrix:
    """Binary parity-check matrix obtained by circulant lifting of a base matrix.

    ``edges`` holds one ``(row, col, shift)`` triple per protograph edge copy;
    a multiplicity-``w`` entry contributes ``w`` triples with distinct shifts.
    Block ``(row, col)`` row ``i`` connects to column ``(i + shift) % M``.
    """

    base: CoupledBaseMatrix
    M: int
    edges: tuple[tuple[int, int, int], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        r, c = self.base.shape
        return r * self.M, c * self.M

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column index of every nonzero of the lifted matrix."""
        if "edges" not in self._cache:
            M = self.M
            i = np.arange(M)
            rows, cols = [], []
            for r, c, s in self.edges:
                rows.append(r * M + i)
                cols.append(c * M + (i + s) % M)
            rr = np.concatenate(rows) if rows else np.zeros(0, np.int64)
            cc = np.concatenate(cols) if cols else np.zeros(0, np.int64)
            order = np.lexsort((cc, rr))
            self._cache["edges"] = (rr[order], cc[order])
        return self._cache["edges"]

    def to_dense(self) -> np.ndarray:
        H = np.zeros(self.shape, dtype=np.uint8)
        r, c = self.edge_arrays()
        np.add.at(H, (r, c), 1)
        return H

    def vn_positions(self) -> np.ndarray:
        """0-based chain position of every lifted column."""
        return np.arange(self.shape[1]) // (self.base.b_v * self.M)

    def cn_positions(self) -> np.ndarray:
        return np.arange(self.shape[0]) // (self.base.b_c * self.M)

    @property
    def component_length(self) -> int:
        """Codeword length of one chain position (``N`` in scaling analysis)."""
        return self.base.b_v * self.M


def _solve_shift(coef: int, const: int, M: int) -> list[int]:
    """All ``s`` in ``0..M-1`` with ``coef * s + const = 0 (mod M)``."""
    d = math.gcd(coef, M)
    if const % d:
        return []
    Md = M // d
    s0 = (-const // d) * pow(coef // d, -1, Md) % Md
    return [s0 + k * Md for k in range(d)]


def _apply_bans(allowed: np.ndarray, bans: list[set[int]]) -> np.ndarray:
    """Remove banned shifts, shortest cycles first, skipping a length that would leave nothing."""
    for bad in bans:
        trial = allowed.copy()
        trial[list(bad)] = False
        if trial.any():
            allowed = trial
    return allowed


def _cycle_shifts(r, c, row_adj, col_adj, M, max_len) -> list[set[int]]:
    """Shifts of a new edge ``(r, c)`` that close a cycle of length 4, 6, ... ``max_len``.

    Closed non-backtracking walks through the new edge are enumerated in the
    protograph of already placed edges; a walk closes a lifted cycle iff its
    alternating shift sum vanishes mod ``M``. The new edge may recur in the
    walk, so the condition is linear in its shift. Returns one set per length.
    """
    out = [set() for _ in range(4, max_len + 1, 2)]

    def cn_edges(row):
        return [(e, rr, cc, sh) for e, rr, cc, sh in row_adj[row]] + ([(-1, r, c, None)] if row == r else [])

    def vn_edges(col):
        return [(e, rr, cc, sh) for e, rr, cc, sh in col_adj[col]] + ([(-1, r, c, None)] if col == c else [])

    # state: at a VN (after an odd number of steps) or a CN
    def walk(node, at_vn, prev, depth, coef, const):
        if not at_vn and node == r and depth >= 4 and depth % 2 == 0 and prev != -1:
            if coef % M:
                out[(depth - 4) // 2].update(_solve_shift(coef % M, const % M, M))
        if depth == max_len:
            return
        if at_vn:  # VN -> CN subtracts the shift
            for e, rr, cc, sh in vn_edges(node):
                if e == prev:
                    continue
                walk(rr, False, e, depth + 1, coef - (e == -1), const - (0 if e == -1 else sh))
        else:
            for e, rr, cc, sh in cn_edges(node):
                if e == prev:
                    continue
                walk(cc, True, e, depth + 1, coef + (e == -1), const + (0 if e == -1 else sh))

    walk(c, True, -1, 1, 1, 0)
    return out


def lift(
    base: CoupledBaseMatrix,
    M: int,
    shifts: Iterable[tuple[int, int, int]] | None = None,
    seed: int | None = 0,
    min_girth: int = 8,
) -> QCMatrix:
    """Lift ``base`` by circulants of size ``M``.

    With explicit ``shifts`` (one ``(row, col, shift)`` per edge copy) the
    table is validated and used as is. Otherwise shifts are drawn uniformly
    from a seeded generator edge by edge, excluding shifts that would close a
    cycle shorter than ``min_girth`` with the edges placed so far. Lengths are
    banned shortest first; a length whose ban would leave no shift is skipped,
    so small ``M`` degrades gracefully instead of failing.
    """
    E = base.entries
    if M < 1 or M < E.max(initial=0):
        raise LiftingTooSmall(f"lifting factor M={M} below max base entry {E.max(initial=0)}")
    if shifts is not None:
        edges = tuple((int(r), int(c), int(s) % M) for r, c, s in shifts)
        count = np.zeros_like(E)
        seen = set()
        for r, c, s in edges:
            count[r, c] += 1
            if (r, c, s) in seen:
                raise LiftingTooSmall(f"repeated shift {s} at entry ({r}, {c})")
            seen.add((r, c, s))
        if not np.array_equal(count, E):
            raise ValueError("shift table does not match base matrix multiplicities")
        return QCMatrix(base, M, edges)

    rng = np.random.default_rng(seed)
    row_adj: dict[int, list] = {r: [] for r in range(E.shape[0])}
    col_adj: dict[int, list] = {c: [] for c in range(E.shape[1])}
    edges = []
    for c in range(E.shape[1]):
        for r in np.nonzero(E[:, c])[0]:
            used: set[int] = set()
            for _ in range(E[r, c]):
                allowed = np.ones(M, dtype=bool)
                allowed[list(used)] = False
                if min_girth > 4:
                    allowed = _apply_bans(allowed, _cycle_shifts(int(r), c, row_adj, col_adj, M, min_girth - 2))
                free = np.nonzero(allowed)[0]
                s = int(free[rng.integers(len(free))])
                used.add(s)
                e = (int(r), int(c), s)
                row_adj[int(r)].append((len(edges), int(r), int(c), s))
                col_adj[int(c)].append((len(edges), int(r), int(c), s))
                edges.append(e)
    return QCMatrix(base, M, tuple(edges))


# ---------------------------------------------------------------------------
# Girth


def _adjacency(rows: np.ndarray, cols: np.ndarray, n_rows: int, n_cols: int):
    """Node adjacency with edge ids; CNs are nodes ``0..n_rows-1``, VNs follow."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_rows + n_cols)]
    for e, (r, c) in enumerate(zip(rows.tolist(), cols.tolist())):
        adj[r].append((n_rows + c, e))
        adj[n_rows + c].append((r, e))
    return adj


def _shortest_cycle_through(adj, root: int, limit: float) -> float:
    """Shortest cycle found by BFS from ``root``, searching only below ``limit``."""
    dist = {root: 0}
    via = {root: -1}
    q = deque([root])
    best = limit
    while q:
        u = q.popleft()
        du = dist[u]
        if 2 * du + 1 >= best:
            break
        for w, e in adj[u]:
            if e == via[u]:
                continue
            if w in dist:
                best = min(best, du + dist[w] + 1)
            else:
                dist[w] = du + 1
                via[w] = e
                q.append(w)
    return best


def girth(H) -> float:
    """Length of the shortest cycle of the Tanner graph, ``math.inf`` for forests.

    ``H`` is a :class:`QCMatrix` or a 0/1 matrix. For a QC matrix the cyclic
    shift inside every circulant is a graph automorphism, so one BFS root per
    protograph node is enough.
    """
    if isinstance(H, QCMatrix):
        rows, cols = H.edge_arrays()
        n_rows, n_cols = H.shape
        roots = list(range(0, n_rows, H.M)) + [n_rows + c for c in range(0, n_cols, H.M)]
    else:
        A = np.asarray(H)
        if A.size == 0:
            raise ValueError("empty matrix")
        rows, cols = np.nonzero(A)
        n_rows, n_cols = A.shape
        roots = range(n_rows + n_cols)
    adj = _adjacency(rows, cols, n_rows, n_cols)
    best = math.inf
    for root in roots:
        best = _shortest_cycle_through(adj, root, best)
        if best == 2:
            break
    return best


# ---------------------------------------------------------------------------
# Sub-block locality


@dataclass(frozen=True)
class SubBlockLocalitySpec:
    d_v: int
    d_c: int
    s: int
    mixed_rows: tuple[tuple[int, ...], ...] | None = None

    def component_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        d_v, d_c, s = self.d_v, self.d_c, self.s
        if not 1 <= s <= d_v - 2:
            raise InvalidLocality(f"s={s} outside 1..{d_v - 2} (need d_v - s >= 2 local checks)")
        if self.mixed_rows is None:
            default = tuple(1 if j < math.ceil(d_c / 2) else 0 for j in range(d_c))
            mixed = [default] * s
        else:
            mixed = [tuple(r) for r in self.mixed_rows]
        if len(mixed) != s:
            raise InvalidLocality(f"expected {s} mixed rows, got {len(mixed)}")
        for row in mixed:
            if len(row) != d_c or set(row) != {0, 1}:
                raise InvalidLocality(f"mixed row {row} must have length {d_c} with both ones and zeros")
        B0 = np.vstack([np.ones((d_v - s, d_c), dtype=np.int64), np.array(mixed, dtype=np.int64)])
        return B0, 1 - B0


def subblock_construct(spec: SubBlockLocalitySpec, L: int) -> CoupledBaseMatrix:
    """Coupled chain whose sub-blocks are ``(d_v - s, d_c)``-regular local codes.

    The last ``s`` rows of ``B_0`` are the coupling checks; memory is one
    protograph.
    """
    B0, B1 = spec.component_matrices()
    spread = edge_spread(np.ones((spec.d_v, spec.d_c), dtype=np.int64), [B0, B1])
    return build_coupled_base(spread, CoupledChainSpec(L, 1))


# ---------------------------------------------------------------------------
# Text format


def dumps_qc(H: QCMatrix) -> str:
    """Serialize to the plain-text edge format (header ``rows cols M``)."""
    B = H.base
    rows, cols = B.shape
    lines = [
        f"# L={B.L} m={B.m} b_c={B.b_c} b_v={B.b_v}",
        f"{rows} {cols} {H.M}",
    ]
    lines += [f"{r} {c} {s}" for r, c, s in sorted(H.edges)]
    return "\n".join(lines) + "\n"


def loads_qc(text: str) -> QCMatrix:
    meta: dict[str, int] = {}
    body = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                k, _, v = tok.partition("=")
                if k in ("L", "m", "b_c", "b_v"):
                    meta[k] = int(v)
            continue
        body.append([int(x) for x in line.split()])
    if not body or len(body[0]) != 3:
        raise ValueError("missing 'rows cols M' header")
    n_rows, n_cols, M = body[0]
    E = np.zeros((n_rows, n_cols), dtype=np.int64)
    triples = []
    for r, c, s in body[1:]:
        E[r, c] += 1
        triples.append((r, c, s))
    L = meta.get("L", 1)
    m = meta.get("m", 0)
    b_c = meta.get("b_c", n_rows // (L + m))
    b_v = meta.get("b_v", n_cols // L)
    E.setflags(write=False)
    base = CoupledBaseMatrix(E, L, m, b_c, b_v)
    return lift(base, M, shifts=triples)


def dense_text(H) -> str:
    """Rows of 0/1 characters."""
    A = H.to_dense() if isinstance(H, QCMatrix) else np.asarray(H)
    return "\n".join("".join("1" if x else "0" for x in row) for row in A) + "\n"
