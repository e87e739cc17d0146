"""Zipper codes, staircase codes and windowed iterative hard-decision decoding.

A zipper code arranges bits in rows of length ``n``. Row ``i`` splits into a
virtual part (columns ``0..m_i-1``) whose bits are copies of earlier real
bits, located by the interleaver map ``phi``, and a real part (columns
``m_i..n-1``) holding fresh information followed by component parity. Every
row is a codeword of a systematic ``(n, k)`` component code. Rows before
index 0 are all-zero. Only real bits are transmitted.

The staircase code with blocks of size ``n/2 x n/2`` is the zipper code with
``m_i = n/2`` and ``phi((n/2) i + r, j) = ((n/2)(i-1) + j, n/2 + r)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numba
import numpy as np

from .bch import BCHCode, BCHSpec, _decode_word
from .chain import ChainTranscript


class ZipperSpecError(ValueError):
    pass


class NonCausalMap(ZipperSpecError):
    pass


class CollidingMap(ZipperSpecError):
    pass


class RangeViolation(ZipperSpecError):
    pass


@dataclass(frozen=True)
class ZipperSpec:
    """Zipping pair for rows of a systematic ``(n, k)`` component code.

    ``virtual`` gives ``m_i`` for row ``i``; ``phi(i, j)`` the real bit
    ``(i', j')`` copied into virtual column ``j`` of row ``i``. ``depth``
    bounds how far back ``phi`` may reach (``i - i' <= depth``).
    """

    n: int
    k: int
    virtual: Callable[[int], int]
    phi: Callable[[int, int], tuple[int, int]]
    depth: int

    def m_i(self, i: int) -> int:
        return int(self.virtual(i))


def zipper_validate(spec: ZipperSpec, rows: int) -> None:
    """Check rows ``0..rows-1``: causality, range membership and injectivity of ``phi``."""
    seen: dict[tuple[int, int], tuple[int, int]] = {}
    for i in range(rows):
        mi = spec.m_i(i)
        if not 0 <= mi <= spec.k:
            raise RangeViolation(f"row {i}: m_i={mi} outside 0..k={spec.k}")
        for j in range(mi):
            ip, jp = spec.phi(i, j)
            if ip >= i:
                raise NonCausalMap(f"phi({i},{j}) = ({ip},{jp}) is not in an earlier row")
            if i - ip > spec.depth:
                raise RangeViolation(f"phi({i},{j}) = ({ip},{jp}) reaches beyond depth {spec.depth}")
            if ip >= 0 and not spec.m_i(ip) <= jp < spec.n:
                raise RangeViolation(f"phi({i},{j}) = ({ip},{jp}) is not a real position")
            if (ip, jp) in seen and ip >= 0:
                raise CollidingMap(f"phi({i},{j}) and phi{seen[(ip, jp)]} both map to ({ip},{jp})")
            seen[(ip, jp)] = (i, j)


def staircase_phi(n: int) -> Callable[[int, int], tuple[int, int]]:
    h = n // 2

    def phi(i: int, j: int) -> tuple[int, int]:
        b, r = divmod(i, h)
        return h * (b - 1) + j, h + r

    return phi


def staircase_as_zipper(n: int, k: int) -> ZipperSpec:
    if n % 2:
        raise ValueError("staircase codes need an even component length")
    return ZipperSpec(n, k, lambda i: n // 2, staircase_phi(n), depth=n - 1)


@dataclass(frozen=True)
class StaircaseSpec:
    """Staircase code with BCH component ``(n, k, t)`` and ``blocks`` information blocks."""

    n: int
    k: int
    t: int
    blocks: int

    def __post_init__(self):
        if self.n % 2:
            raise ValueError(f"n={self.n} must be even")
        if not self.k > self.n // 2:
            raise ValueError(f"k={self.k} must exceed n/2={self.n // 2}")
        if self.blocks < 1:
            raise ValueError("need at least one block")

    @property
    def half(self) -> int:
        return self.n // 2

    @property
    def rate(self) -> Fraction:
        return Fraction(2 * self.k, self.n) - 1

    @property
    def component(self) -> BCHSpec:
        return BCHSpec.from_nkt(self.n, self.k, self.t)

    def zipper(self) -> ZipperSpec:
        return staircase_as_zipper(self.n, self.k)


# ---------------------------------------------------------------------------
# Encoding


def _row_index(spec: ZipperSpec, rows: int) -> np.ndarray:
    """``idx[i, j]``: flat index ``i' * n + j'`` of the bit at row ``i`` column ``j`` (``-1`` = zero)."""
    n = spec.n
    idx = np.empty((rows, n), dtype=np.int64)
    for i in range(rows):
        mi = spec.m_i(i)
        for j in range(mi):
            ip, jp = spec.phi(i, j)
            idx[i, j] = ip * n + jp if ip >= 0 else -1
        idx[i, mi:] = i * n + np.arange(mi, n)
    return idx


def zipper_encode(spec: ZipperSpec, info, component, rows: int | None = None,
                  zero_rows: int = 0) -> np.ndarray:
    """Encode a flat information stream row by row; returns the real bits in emission order.

    ``component`` provides ``encode(msg)`` for a systematic ``(n, k)`` code.
    ``zero_rows`` extra rows with zero information are appended (termination).
    """
    info = np.asarray(info, dtype=np.int8).ravel()
    n, k = spec.n, spec.k
    if rows is None:
        rows, used = 0, 0
        while used < len(info):
            used += k - spec.m_i(rows)
            rows += 1
        if used != len(info):
            raise ValueError("information length does not fill whole rows")
    total_rows = rows + zero_rows
    buf = np.zeros(total_rows * n, dtype=np.int8)
    idx = _row_index(spec, total_rows)
    out = []
    pos = 0
    for i in range(total_rows):
        mi = spec.m_i(i)
        row = np.zeros(k, dtype=np.int8)
        src = idx[i, :mi]
        row[:mi] = np.where(src >= 0, buf[np.maximum(src, 0)], 0)
        if i < rows:
            row[mi:k] = info[pos:pos + k - mi]
            pos += k - mi
        cw = component.encode(row)
        buf[i * n + mi:(i + 1) * n] = cw[mi:]
        out.append(cw[mi:])
    if pos != len(info):
        raise ValueError(f"{len(info)} information bits for {pos} slots")
    return np.concatenate(out)


def zipper_rows(spec: ZipperSpec, real: np.ndarray, rows: int) -> np.ndarray:
    """Reassemble the full ``(rows, n)`` row matrix from emitted real bits."""
    n = spec.n
    buf = np.zeros(rows * n, dtype=np.int8)
    pos = 0
    for i in range(rows):
        mi = spec.m_i(i)
        buf[i * n + mi:(i + 1) * n] = real[pos:pos + n - mi]
        pos += n - mi
    idx = _row_index(spec, rows)
    return np.where(idx >= 0, buf[np.maximum(idx, 0)], 0).astype(np.int8)


def staircase_encode(spec: StaircaseSpec, info, terminate: bool = False) -> list[np.ndarray]:
    """Encode ``blocks`` information blocks ``U_t`` (``n/2 x (k - n/2)`` each).

    Returns the blocks ``X_1..X_T`` with ``X_t = [U_t, P_t]``. With
    ``terminate`` one extra block with zero information is appended so the
    last information block is protected by two component rows per bit.
    """
    h, k = spec.half, spec.k
    comp = BCHCode(spec.component)
    info = np.asarray(info, dtype=np.int8).reshape(spec.blocks, h, k - h)
    prev = np.zeros((h, h), dtype=np.int8)
    out = []
    for t in range(spec.blocks + int(terminate)):
        U = info[t] if t < spec.blocks else np.zeros((h, k - h), np.int8)
        rows = comp.encode(np.hstack([prev.T, U]))
        X = rows[:, h:]
        out.append(X)
        prev = X
    return out


def staircase_transcript(spec: StaircaseSpec, terminate: bool = False) -> ChainTranscript:
    h = spec.half
    T = spec.blocks + int(terminate)
    tr = ChainTranscript(T)
    for t in range(1, T + 1):
        tr.record(t, h * (spec.k - h) if t <= spec.blocks else 0, h * h)
    return tr


# ---------------------------------------------------------------------------
# Windowed iterative hard-decision decoding


@numba.njit(cache=True)
def _ihdd(buf, idx, n, t, nfull, exp, log, window, slide, max_iters, first_row):
    rows = idx.shape[0]
    word = np.empty(n, np.int8)
    snap = np.empty_like(buf)
    dec = np.empty((window, n), np.int8)
    ok = np.empty(window, np.bool_)
    iters = 0
    events = 0
    start = first_row
    while start < rows:
        stop = min(start + window, rows)
        prev_unsat = rows + 1
        for it in range(max_iters):
            snap[:] = buf
            changed = False
            unsat = 0
            # decode every row from the snapshot
            for r in range(start, stop):
                for j in range(n):
                    s = idx[r, j]
                    word[j] = snap[s] if s >= 0 else 0
                nc = _decode_word(word, n, t, nfull, exp, log)
                ok[r - start] = nc > 0
                if nc != 0:
                    unsat += 1
                dec[r - start, :] = word
            # serialized write-back
            for r in range(start, stop):
                if not ok[r - start]:
                    continue
                # only bits this row flipped, so a miscorrecting row cannot undo other rows' fixes
                for j in range(n):
                    s = idx[r, j]
                    if s >= 0 and snap[s] != dec[r - start, j]:
                        buf[s] = dec[r - start, j]
                        changed = True
            if unsat > prev_unsat:
                events += 1
            prev_unsat = unsat
            iters += 1
            if not changed:
                break
        if stop == rows:
            break
        start += slide
    return iters, events


def _real_positions(spec: ZipperSpec, rows: int) -> np.ndarray:
    n = spec.n
    return np.concatenate([i * n + np.arange(spec.m_i(i), n) for i in range(rows)])


@dataclass
class IHDDResult:
    real: np.ndarray  # decided real bits in emission order
    iterations: int
    miscorrection_events: int  # iterations where the unsatisfied-row count grew


def ihdd_window_decode(spec: ZipperSpec | StaircaseSpec, received, window: int, max_iters: int,
                       component: BCHSpec | None = None, rows: int | None = None,
                       slide: int | None = None) -> IHDDResult:
    """Sliding-window iterative bounded-distance decoding of hard decisions.

    ``window`` is a number of rows; the window advances by ``slide`` rows
    (``n/2`` for staircase codes). Within the window, every row is decoded
    from a snapshot of the buffer and successful corrections are written
    back, virtual bits through ``phi`` to the real bits they copy, until no
    bit changes or ``max_iters`` iterations.
    """
    if isinstance(spec, StaircaseSpec):
        component = component or spec.component
        zspec = spec.zipper()
        slide = slide or spec.half
    else:
        zspec = spec
        if component is None:
            raise ValueError("a BCH component is required for a generic zipper spec")
        slide = slide or 1
    n = zspec.n
    received = np.asarray(received, dtype=np.int8)
    if rows is None:
        rows, used = 0, 0
        while used < len(received):
            used += n - zspec.m_i(rows)
            rows += 1
    if window < slide:
        raise ValueError(f"window of {window} rows is shorter than the slide of {slide}")
    real_pos = _real_positions(zspec, rows)
    if len(real_pos) != len(received):
        raise ValueError(f"{len(received)} received bits for {len(real_pos)} real positions")
    buf = np.zeros(rows * n, dtype=np.int8)
    buf[real_pos] = received
    idx = _row_index(zspec, rows)
    code = BCHCode(component)
    it, ev = _ihdd(buf, idx, n, component.t, code.nfull, code.exp, code.log, window, slide, max_iters, 0)
    return IHDDResult(buf[real_pos], int(it), int(ev))


def staircase_flatten(blocks: list[np.ndarray]) -> np.ndarray:
    """Emission order of staircase blocks: block by block, row-major (matches the zipper order)."""
    return np.concatenate([b.ravel() for b in blocks])


def staircase_info(spec: StaircaseSpec, real: np.ndarray) -> np.ndarray:
    """Information bits ``U_1..U_T`` from a decoded real-bit stream."""
    h, k = spec.half, spec.k
    X = real[: spec.blocks * h * h].reshape(spec.blocks, h, h)
    return X[:, :, : k - h].ravel()
