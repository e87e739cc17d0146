"""Memoryless binary-input channels, LLR conversion and random puncturing.

LLR sign convention: positive favours bit 0. BPSK maps 0 -> +1, 1 -> -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# LLR magnitude for "known" bits; every decoder clips to +-LLR_MAX
LLR_MAX = 38.0
ERASED = -1


def frame_rng(seed: int, frame: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, frame, stream)``; scheduling never matters."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(frame), int(stream)]))


@dataclass(frozen=True)
class ChannelSpec:
    kind: str  # "bec" | "bsc" | "biawgn"
    param: float  # erasure prob, crossover prob, or Eb/N0 in dB
    rate: float = 1.0  # code rate for Eb/N0 scaling (biawgn only)

    def __post_init__(self):
        if self.kind not in ("bec", "bsc", "biawgn"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "bec" and not 0.0 <= self.param <= 1.0:
            raise ValueError(f"erasure probability {self.param} outside [0, 1]")
        if self.kind == "bsc" and not 0.0 <= self.param <= 0.5:
            raise ValueError(f"crossover probability {self.param} outside [0, 1/2]")
        if self.kind == "biawgn" and not self.rate > 0:
            raise ValueError("code rate must be positive")

    @property
    def noise_var(self) -> float:
        """``sigma^2 = 1 / (2 R Eb/N0)`` for unit-energy BPSK."""
        if self.kind != "biawgn":
            raise AttributeError("noise variance is defined for biawgn only")
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.param / 10.0))


def bec(eps: float) -> ChannelSpec:
    return ChannelSpec("bec", eps)


def bsc(p: float) -> ChannelSpec:
    return ChannelSpec("bsc", p)


def biawgn(ebn0_db: float, rate: float) -> ChannelSpec:
    return ChannelSpec("biawgn", ebn0_db, float(rate))


def transmit(bits, channel: ChannelSpec, rng: np.random.Generator | int) -> np.ndarray:
    """Pass ``bits`` through ``channel``.

    Returns int8 symbols (``ERASED`` marks erasures) for BEC, flipped bits for
    BSC and real-valued observations for Bi-AWGN.
    """
    if not isinstance(rng, np.random.Generator):
        rng = frame_rng(rng)
    bits = np.asarray(bits, dtype=np.int8)
    n = bits.shape
    if channel.kind == "bec":
        out = bits.copy()
        out[rng.random(n) < channel.param] = ERASED
        return out
    if channel.kind == "bsc":
        return bits ^ (rng.random(n) < channel.param).astype(np.int8)
    x = 1.0 - 2.0 * bits
    return x + np.sqrt(channel.noise_var) * rng.standard_normal(n)


def to_llr(obs, channel: ChannelSpec) -> np.ndarray:
    obs = np.asarray(obs)
    if channel.kind == "bec":
        llr = np.where(obs == 0, LLR_MAX, -LLR_MAX)
        llr[obs == ERASED] = 0.0
        return llr.astype(float)
    if channel.kind == "bsc":
        p = channel.param
        mag = LLR_MAX if p == 0 else min(np.log((1 - p) / p), LLR_MAX)
        return np.where(obs == 0, mag, -mag).astype(float)
    var = channel.noise_var
    if var == 0:
        return np.clip(np.sign(obs) * LLR_MAX, -LLR_MAX, LLR_MAX)
    return np.clip(2.0 * obs / var, -LLR_MAX, LLR_MAX)


# ---------------------------------------------------------------------------
# Puncturing


@dataclass(frozen=True)
class PuncturePattern:
    rho: float
    indices: np.ndarray  # sorted punctured positions
    length: int

    @property
    def transmitted(self) -> int:
        return self.length - len(self.indices)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.length, dtype=bool)
        m[self.indices] = True
        return m


def puncture_fraction(rate, target) -> float:
    """Fraction to puncture so that rate ``rate`` becomes ``target``: ``1 - rate/target``."""
    rho = float(1 - rate / target)
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"cannot reach rate {target} from {rate} by puncturing")
    return rho


def make_puncture(length: int, rho: float, seed: int = 0,
                  candidates: np.ndarray | None = None) -> PuncturePattern:
    """Puncture ``round(rho * len(candidates))`` positions chosen uniformly from ``candidates``.

    ``candidates`` defaults to the whole frame; ``rho`` is then the fraction
    of all transmitted bits.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"puncture fraction {rho} outside [0, 1)")
    pool = np.arange(length) if candidates is None else np.asarray(candidates)
    k = int(round(rho * len(pool)))
    rng = frame_rng(seed, stream=0x50)
    idx = np.sort(rng.choice(pool, size=k, replace=False)) if k else np.zeros(0, np.int64)
    return PuncturePattern(rho, idx, length)


def apply_puncture(frame, pattern: PuncturePattern) -> np.ndarray:
    """Mark punctured positions untransmitted: ``ERASED`` for integer frames, LLR 0 otherwise."""
    frame = np.array(frame, copy=True)
    if len(frame) != pattern.length:
        raise ValueError(f"frame length {len(frame)} != pattern length {pattern.length}")
    frame[pattern.indices] = ERASED if np.issubdtype(frame.dtype, np.integer) else 0.0
    return frame
