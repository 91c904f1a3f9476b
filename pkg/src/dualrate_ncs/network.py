"""Stochastic channel: truncated generalized-exponential round-trip delays and
Bernoulli dropouts with a hard cap on consecutive losses.

Seeding: every stream is ``np.random.default_rng(SeedSequence([seed, axis, link]))``
with link ids given by :class:`Link`. Variants compared under one seed therefore
see the same realization (common random numbers).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Link(enum.IntEnum):
    DELAY = 0
    LOCAL_TO_REMOTE = 1
    REMOTE_TO_LOCAL = 2


@dataclass(frozen=True)
class DelayModel:
    eta: float = 0.04
    phi: float = 0.012
    tau_max: float = 0.08

    def __post_init__(self):
        if not 0 <= self.eta < self.tau_max:
            raise ValueError("require 0 <= eta < tau_max")
        # phi == 0 is accepted as the degenerate (deterministic) limit
        if not self.phi >= 0:
            raise ValueError("phi must be non-negative")

    def truncated_mean(self) -> float:
        """Mean of the density restricted to [eta, tau_max]."""
        if self.phi == 0:
            return self.eta
        w = self.tau_max - self.eta
        ratio = math.exp(-w / self.phi)
        return self.eta + self.phi - w * ratio / (1.0 - ratio)


@dataclass(frozen=True)
class DropoutModel:
    p: float = 0.3
    M: int = 3

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise ValueError("dropout probability must lie in [0, 1)")
        if self.M < 1:
            raise ValueError("M must be at least 1")


@dataclass
class ChannelState:
    consecutive_drops: dict = field(default_factory=lambda: {
        Link.LOCAL_TO_REMOTE: 0, Link.REMOTE_TO_LOCAL: 0})
    last_seq_delivered: dict = field(default_factory=lambda: {
        Link.LOCAL_TO_REMOTE: -1, Link.REMOTE_TO_LOCAL: -1})
    cap_forced: int = 0


def stream(seed: int, link: Link, axis: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(axis), int(link)]))


def sample_delay(rng: np.random.Generator, dm: DelayModel) -> float:
    if dm.phi == 0:
        return dm.eta
    while True:
        tau = dm.eta + dm.phi * rng.standard_exponential()
        if tau <= dm.tau_max:
            return tau


def sample_delays(rng: np.random.Generator, dm: DelayModel, n: int) -> np.ndarray:
    """``n`` consecutive draws of :func:`sample_delay` (same stream consumption)."""
    return np.array([sample_delay(rng, dm) for _ in range(n)])


def delay_mode(dm: DelayModel) -> float:
    return dm.eta


def sample_dropout(rng: np.random.Generator, dm: DropoutModel, cs: ChannelState,
                   link: Link, seq: int | None = None) -> tuple[bool, bool]:
    """Draw one Bernoulli dropout on ``link``.

    Returns ``(delivered, forced)``; ``forced`` marks a loss overridden because it
    would have produced M+1 consecutive losses. The uniform is always drawn so the
    stream position does not depend on the cap.
    """
    dropped = rng.random() < dm.p
    forced = False
    if dropped and cs.consecutive_drops[link] >= dm.M:
        dropped = False
        forced = True
        cs.cap_forced += 1
    if dropped:
        cs.consecutive_drops[link] += 1
    else:
        cs.consecutive_drops[link] = 0
        if seq is not None:
            if seq <= cs.last_seq_delivered[link]:
                raise RuntimeError(f"out-of-order delivery on {link.name}: {seq}")
            cs.last_seq_delivered[link] = seq
    return not dropped, forced


def check_no_disorder(dm: DelayModel, NT: float) -> bool:
    return dm.tau_max < NT


def quantize_delay(tau: float, t_basic: float) -> int:
    """Ticks of the basic grid until a packet arriving at ``tau`` is visible."""
    if tau < 0 or t_basic <= 0:
        raise ValueError("require tau >= 0 and t_basic > 0")
    # tolerate representation error of exact multiples (0.07/0.01 = 7.000000000000001)
    return max(0, math.ceil(tau / t_basic - 1e-9))


@dataclass
class ChannelRealization:
    """Per-sensor-period channel outcomes, shared by all compared variants."""

    tau: np.ndarray
    delivered_lr: np.ndarray
    delivered_rl: np.ndarray
    forced_lr: np.ndarray
    forced_rl: np.ndarray

    @property
    def periods(self) -> int:
        return len(self.tau)


def realize(seed: int, n_periods: int, delay: DelayModel, dropout: DropoutModel,
            axis: int = 0) -> ChannelRealization:
    d_rng = stream(seed, Link.DELAY, axis)
    lr_rng = stream(seed, Link.LOCAL_TO_REMOTE, axis)
    rl_rng = stream(seed, Link.REMOTE_TO_LOCAL, axis)
    cs = ChannelState()
    tau = sample_delays(d_rng, delay, n_periods)
    d_lr = np.empty(n_periods, dtype=bool)
    d_rl = np.empty(n_periods, dtype=bool)
    f_lr = np.empty(n_periods, dtype=bool)
    f_rl = np.empty(n_periods, dtype=bool)
    for k in range(n_periods):
        d_lr[k], f_lr[k] = sample_dropout(lr_rng, dropout, cs, Link.LOCAL_TO_REMOTE, k)
        d_rl[k], f_rl[k] = sample_dropout(rl_rng, dropout, cs, Link.REMOTE_TO_LOCAL, k)
    return ChannelRealization(tau, d_lr, d_rl, f_lr, f_rl)


def ideal(n_periods: int) -> ChannelRealization:
    ones = np.ones(n_periods, dtype=bool)
    zeros = np.zeros(n_periods, dtype=bool)
    return ChannelRealization(np.zeros(n_periods), ones, ones.copy(), zeros, zeros.copy())


def longest_run(delivered) -> int:
    run = best = 0
    for ok in delivered:
        run = 0 if ok else run + 1
        best = max(best, run)
    return best
