"""Dual-rate PID split: slow PI at the remote side, fast PD at the local side."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PidDesign:
    Kp: float = 12.0
    Td: float = 0.01
    Ti: float = 3.5
    T: float = 0.1
    N: int = 2
    K_pi: float = 1.0
    K_pd: float | None = None  # defaults to Kp

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        if not (self.Td > 0 and self.Ti > 0 and self.T > 0):
            raise ValueError("Td, Ti and T must be positive")
        if not self.Ti > self.NT:
            raise ValueError("Ti must exceed the sensor period NT")

    @property
    def NT(self) -> float:
        return self.N * self.T

    @property
    def pd_gain(self) -> float:
        return self.Kp if self.K_pd is None else self.K_pd

    @property
    def pi_coef(self) -> float:
        """Weight of the previous error, 1 - NT/Ti."""
        return 1.0 - self.NT / self.Ti


@dataclass(frozen=True)
class PiState:
    u_prev: float = 0.0
    e_prev: float = 0.0


@dataclass(frozen=True)
class PdState:
    u_pi_prev: float = 0.0


@dataclass(frozen=True)
class ScheduledGains:
    Kpd_tau: float
    Td_tau: float


@dataclass(frozen=True)
class GainSchedule:
    """Affine retune law: K(tau) = k_slope tau + K_pd, Td(tau) = td_slope tau + Td."""

    k_slope: float = -50.0
    td_slope: float = 0.5
    tau_limit: float = 0.09


class DelayRangeError(ValueError):
    pass


def pi_update(u_prev: float, e: float, e_prev: float, coef: float, k: float = 1.0) -> float:
    # Every PI evaluation in the package goes through this expression so actual
    # and predicted actions round identically.
    return u_prev + k * e - k * coef * e_prev


def pd_output(kpd: float, td: float, T: float, u: float, u_prev: float) -> float:
    return kpd * (1.0 + td / T) * u - kpd * (td / T) * u_prev


def pi_step(state: PiState, r: float, y: float, design: PidDesign):
    e = r - y
    u = pi_update(state.u_prev, e, state.e_prev, design.pi_coef, design.K_pi)
    return u, PiState(u_prev=u, e_prev=e)


def expand_and_hold(u_pi_slow: float, N: int) -> list[float]:
    if N < 1:
        raise ValueError("N must be >= 1")
    return [u_pi_slow] * N


def pd_step_independent(state: PdState, u_pi_fast: float, design: PidDesign):
    u = pd_output(design.pd_gain, design.Td, design.T, u_pi_fast, state.u_pi_prev)
    return u, PdState(u_pi_prev=u_pi_fast)


def schedule_gains(tau: float, design: PidDesign,
                   law: GainSchedule = GainSchedule()) -> ScheduledGains:
    if not 0 <= tau <= law.tau_limit + 1e-12:
        raise DelayRangeError(
            f"delay {tau} outside the validated range [0, {law.tau_limit}]")
    return ScheduledGains(Kpd_tau=law.k_slope * tau + design.pd_gain,
                          Td_tau=law.td_slope * tau + design.Td)


def nominal_gains(design: PidDesign) -> ScheduledGains:
    return ScheduledGains(Kpd_tau=design.pd_gain, Td_tau=design.Td)


def pd_step_dependent(state: PdState, u_pi_fast: float, g: ScheduledGains, T: float):
    u = pd_output(g.Kpd_tau, g.Td_tau, T, u_pi_fast, state.u_pi_prev)
    return u, PdState(u_pi_prev=u_pi_fast)


def pd_actions(u_pi: float, u_pi_prev: float, g: ScheduledGains, T: float, N: int) -> list[float]:
    """The N fast-rate PD actions of one sensor period for a held PI input."""
    out = []
    prev = u_pi_prev
    for _ in range(N):
        out.append(pd_output(g.Kpd_tau, g.Td_tau, T, u_pi, prev))
        prev = u_pi
    return out
