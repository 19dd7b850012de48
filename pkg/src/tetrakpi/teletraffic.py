"""Analytic queued-call capacity model (Erlang B / Erlang C, M/M/n).

Blocking and wait probabilities are computed with the standard one-step
recursion rather than the factorial closed form, so channel counts in the
hundreds stay well inside double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, UnstableLoad


@dataclass(frozen=True)
class TrafficLoad:
    """Offered traffic: arrival rate (calls/s), mean holding time (s), Erlangs."""

    arrival_rate: float
    mean_holding: float
    offered: float

    def __post_init__(self):
        if self.arrival_rate <= 0 or self.mean_holding <= 0 or self.offered <= 0:
            raise DomainError("arrival rate, holding time and offered load must be positive")
        product = self.arrival_rate * self.mean_holding
        if abs(self.offered - product) > 1e-12 * max(abs(self.offered), abs(product)):
            raise DomainError(
                f"offered load {self.offered} inconsistent with "
                f"arrival_rate*mean_holding = {product}"
            )

    @classmethod
    def from_rates(cls, arrival_rate: float, mean_holding: float) -> "TrafficLoad":
        return cls(arrival_rate, mean_holding, arrival_rate * mean_holding)


def _check_domain(n_channels: int, offered: float) -> None:
    if isinstance(n_channels, bool) or not isinstance(n_channels, int) or n_channels < 1:
        raise DomainError(f"n_channels must be a positive integer, got {n_channels!r}")
    if not (offered > 0) or not math.isfinite(offered):
        raise DomainError(f"offered load must be positive and finite, got {offered!r}")


def erlang_b(n_channels: int, offered: float) -> float:
    """Blocking probability of an n-channel loss system at the given load.

    Uses the numerically stable recursion
    B(0) = 1,  B(k) = A*B(k-1) / (k + A*B(k-1)).
    """
    _check_domain(n_channels, offered)
    b = 1.0
    for k in range(1, n_channels + 1):
        b = offered * b / (k + offered * b)
    return b


def erlang_c(n_channels: int, offered: float) -> float:
    """Probability that a request must wait in an n-channel delay system.

    C = n*B / (n - A*(1 - B)) with B the Erlang B blocking probability.
    Requires a stable load (offered < n_channels), else ``UnstableLoad``.
    """
    b = erlang_b(n_channels, offered)
    if offered >= n_channels:
        raise UnstableLoad(
            f"offered load {offered} Erlangs needs more than {n_channels} channels"
        )
    return n_channels * b / (n_channels - offered * (1.0 - b))


def mean_wait(n_channels: int, load: TrafficLoad) -> float:
    """Unconditional mean waiting time (s) in the M/M/n delay system.

    W = C(n, A) * mean_holding / (n - A). The mean wait of the queued
    requests alone is W / C(n, A) = mean_holding / (n - A).
    """
    c = erlang_c(n_channels, load.offered)
    return c * load.mean_holding / (n_channels - load.offered)


def dimension_channels(load: TrafficLoad, max_wait_prob: float) -> int:
    """Smallest channel count whose wait probability is at most the target.

    The scan starts at the first stable channel count (floor(A)+1) and is
    guaranteed to stop: the wait probability is strictly decreasing in the
    channel count and tends to zero.
    """
    if not (0.0 < max_wait_prob < 1.0):
        raise DomainError(f"max_wait_prob must lie in (0, 1), got {max_wait_prob!r}")
    n = math.floor(load.offered) + 1
    while erlang_c(n, load.offered) > max_wait_prob:
        n += 1
    return n
