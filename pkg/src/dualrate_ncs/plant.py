"""Double-integrator-with-pole plant: ZOH discretization, stepping, input nonlinearities."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


class InvalidPeriodError(ValueError):
    pass


@dataclass(frozen=True)
class ContinuousPlant:
    """G(s) = gain_num / (s (s + pole)), output in metres, input in c.a.u."""

    gain_num: float = 6.3
    pole: float = 17.7

    def __post_init__(self):
        if not self.pole > 0:
            raise ValueError(f"pole must be positive, got {self.pole}")
        if self.gain_num == 0:
            raise ValueError("gain_num must be non-zero")

    @property
    def static_gain(self) -> float:
        return self.gain_num / self.pole

    @property
    def time_constant(self) -> float:
        return 1.0 / self.pole

    @classmethod
    def from_gain_tau(cls, K: float, tau: float) -> ContinuousPlant:
        return cls(gain_num=K / tau, pole=1.0 / tau)

    def state_space(self):
        """Continuous realization (A_c, B_c, C) with state [position, velocity]."""
        A = np.array([[0.0, 1.0], [0.0, -self.pole]])
        B = np.array([0.0, self.gain_num])
        C = np.array([1.0, 0.0])
        return A, B, C


@dataclass(frozen=True)
class DiscretePlant:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    period: float

    def coefficients(self) -> tuple[float, ...]:
        """Flat (a00, a01, a10, a11, b0, b1, c0, c1) used by the compiled core."""
        A, B, C = self.A, self.B, self.C
        return (float(A[0, 0]), float(A[0, 1]), float(A[1, 0]), float(A[1, 1]),
                float(B[0]), float(B[1]), float(C[0]), float(C[1]))


@dataclass(frozen=True)
class InputNonlinearity:
    saturation: float = 1.0
    dead_zone: float = 0.06
    dead_zone_enabled: bool = False

    def __post_init__(self):
        if not self.saturation > self.dead_zone >= 0:
            raise ValueError("require saturation > dead_zone >= 0")


def discretize_zoh(plant: ContinuousPlant, h: float) -> DiscretePlant:
    """Exact zero-order-hold discretization at period ``h``.

    Closed form for A_c = [[0, 1], [0, -p]]:
        exp(A_c h) = [[1, (1 - e^{-ph})/p], [0, e^{-ph}]]
        B = g [(h - (1 - e^{-ph})/p)/p, (1 - e^{-ph})/p]
    """
    if not h >= 0:
        raise InvalidPeriodError(f"period must be non-negative, got {h}")
    p, g = plant.pole, plant.gain_num
    decay = math.exp(-p * h)
    one_minus = -math.expm1(-p * h)
    a01 = one_minus / p
    A = np.array([[1.0, a01], [0.0, decay]])
    B = np.array([g * (h - a01) / p, g * a01])
    C = np.array([1.0, 0.0])
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise InvalidPeriodError(f"non-finite discretization at h={h}")
    return DiscretePlant(A=A, B=B, C=C, period=h)


def step(dp: DiscretePlant, x, u: float):
    """One ZOH step; returns (x_next, y) with y read from x_next."""
    A, B, C = dp.A, dp.B, dp.C
    x0, x1 = float(x[0]), float(x[1])
    n0 = A[0, 0] * x0 + A[0, 1] * x1 + B[0] * u
    n1 = A[1, 0] * x0 + A[1, 1] * x1 + B[1] * u
    y = C[0] * n0 + C[1] * n1
    return np.array([n0, n1]), float(y)


def clamp_input(u: float, nl: InputNonlinearity) -> float:
    if u > nl.saturation:
        u = nl.saturation
    elif u < -nl.saturation:
        u = -nl.saturation
    if nl.dead_zone_enabled and abs(u) < nl.dead_zone:
        return 0.0
    return float(u)


NUMERATOR = "numerator"
STATIC_GAIN = "static_gain"


def perturb(plant: ContinuousPlant, q_pct: float, r_pct: float,
            basis: str = NUMERATOR) -> ContinuousPlant:
    """Plant with its gain decreased by q% and its time constant 1/pole by r%.

    ``basis`` picks which gain is scaled: the numerator constant of
    g / (s (s + p)) (default), or the velocity gain g / p, in which case the
    numerator also absorbs the time-constant change.
    """
    if not (0 <= q_pct < 100 and 0 <= r_pct < 100):
        raise ValueError("perturbation percentages must lie in [0, 100)")
    if basis not in (NUMERATOR, STATIC_GAIN):
        raise ValueError(f"unknown perturbation basis {basis!r}")
    if q_pct == 0 and r_pct == 0:
        return replace(plant)
    gain_scale = 1.0 - q_pct / 100.0
    tau_scale = 1.0 - r_pct / 100.0
    pole = plant.pole / tau_scale
    if basis == NUMERATOR:
        return ContinuousPlant(gain_num=plant.gain_num * gain_scale, pole=pole)
    # K' = K (1 - q), tau' = tau (1 - r)  =>  gain' = K' pole'
    return ContinuousPlant(gain_num=plant.gain_num * gain_scale / tau_scale, pole=pole)
