"""Coupling-chain bookkeeping shared by every code family.

A terminated coupled chain has ``L`` positions and memory ``m``. Encoders
record, per position, how many information bits they consumed and how many
channel bits they put on the wire; the ratio of the totals is the rate that
actually went over the channel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


class ChainSpecError(ValueError):
    """Base class for invalid chain parameters."""


class EmptyChain(ChainSpecError):
    pass


class MemoryTooLarge(ChainSpecError):
    pass


class ZeroTransmitted(ValueError):
    pass


@dataclass(frozen=True)
class CoupledChainSpec:
    L: int
    m: int
    terminated: bool = True

    def __post_init__(self):
        validate_chain_spec(self)

    @property
    def positions(self) -> range:
        """1-based chain positions."""
        return range(1, self.L + 1)

    def is_tail(self, t: int) -> bool:
        """True for the positions that carry zero information in zero-padded families."""
        return t > self.L - self.m


def validate_chain_spec(spec: CoupledChainSpec) -> None:
    """Raise a :class:`ChainSpecError` subclass naming the violated bound."""
    if spec.L < 1:
        raise EmptyChain(f"coupling length L={spec.L} must be >= 1")
    if spec.m < 0:
        raise MemoryTooLarge(f"coupling memory m={spec.m} must be >= 0")
    if spec.m >= spec.L:
        raise MemoryTooLarge(f"coupling memory m={spec.m} must be < L={spec.L}")
    if not spec.terminated:
        raise ChainSpecError("only terminated chains are supported")


@dataclass
class ChainTranscript:
    """Per-position information and transmitted bit counts."""

    L: int
    info: list[int] = field(default_factory=list)
    sent: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.info:
            self.info = [0] * self.L
        if not self.sent:
            self.sent = [0] * self.L

    def record(self, t: int, info: int, sent: int) -> None:
        """Add counts at 1-based position ``t``."""
        self.info[t - 1] += info
        self.sent[t - 1] += sent

    @property
    def total_info(self) -> int:
        return sum(self.info)

    @property
    def total_sent(self) -> int:
        return sum(self.sent)


def measured_rate(transcript: ChainTranscript) -> Fraction:
    sent = transcript.total_sent
    if sent == 0:
        raise ZeroTransmitted("transcript records no transmitted bits")
    return Fraction(transcript.total_info, sent)
