"""Reference signals: filtered square-wave steps and two-axis Lissajous paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

FILTERED_STEP = "filtered_step"
LISSAJOUS = "lissajous"


@dataclass(frozen=True)
class ReferenceSpec:
    kind: str = FILTERED_STEP
    # filtered step: +amplitude for half a period, -amplitude for the other half
    amplitude: float = 0.04
    period: float = 10.0
    filter_tau: float = 0.3
    # lissajous: x = ax sin(a w t + delta), y = ay sin(b w t)
    ax: float = 0.03
    ay: float = 0.03
    a: float = 1.0
    b: float = 2.0
    omega: float = 2 * math.pi / 20.0
    delta: float = math.pi / 2

    def __post_init__(self):
        if self.kind not in (FILTERED_STEP, LISSAJOUS):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == FILTERED_STEP and not (self.period > 0 and self.filter_tau >= 0):
            raise ValueError("filtered step needs period > 0 and filter_tau >= 0")

    @property
    def axes(self) -> int:
        return 2 if self.kind == LISSAJOUS else 1


def _filtered_square(spec: ReferenceSpec, time: float) -> float:
    half = spec.period / 2.0
    n_switch = int(math.floor(time / half))
    value = 0.0
    for j in range(n_switch + 1):
        jump = spec.amplitude if j == 0 else (-2.0 if j % 2 else 2.0) * spec.amplitude
        elapsed = time - j * half
        if spec.filter_tau == 0:
            value += jump
        else:
            value += jump * -math.expm1(-elapsed / spec.filter_tau)
    return value


def reference(spec: ReferenceSpec, time: float) -> tuple:
    """Reference value per axis at ``time`` (seconds)."""
    if time < 0:
        raise ValueError("time must be non-negative")
    if spec.kind == FILTERED_STEP:
        return (_filtered_square(spec, time),)
    return (spec.ax * math.sin(spec.a * spec.omega * time + spec.delta),
            spec.ay * math.sin(spec.b * spec.omega * time))
