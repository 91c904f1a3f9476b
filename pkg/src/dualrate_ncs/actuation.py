"""Actuation patterns inside one sensor period, on the basic-period grid."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIFORM = "uniform_3_17"
NONUNIFORM_INDEPENDENT = "nonuniform_3_13"
NONUNIFORM_DEPENDENT_DROPPED = "nonuniform_3_15"
NONUNIFORM_DEPENDENT = "nonuniform_3_10"
HOLD = "hold"

PATTERNS = (UNIFORM, NONUNIFORM_INDEPENDENT, NONUNIFORM_DEPENDENT_DROPPED,
            NONUNIFORM_DEPENDENT, HOLD)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ActuationSchedule:
    values: np.ndarray
    pattern_tag: str


def uniform(actions, L: int) -> np.ndarray:
    """Hold each of the N actions for L basic periods."""
    return np.repeat(np.asarray(actions, dtype=float), L)


def held_then_slots(prev_action: float, actions, ticks: int, L: int) -> np.ndarray:
    """Previous action until tick ``ticks``, then action j over the rest of slot j."""
    values = uniform(actions, L)
    values[:ticks] = prev_action
    return values


def build_schedule(dependent: bool, delivered: bool, tau_ticks: int, new_actions,
                   stored_estimates, last_prev_action: float, L: int, N: int
                   ) -> ActuationSchedule:
    """Assemble the per-tick control values of one sensor period.

    ``new_actions`` are the N PD actions built from the packet of this period
    (ignored when ``delivered`` is false). ``stored_estimates`` are the N PD
    actions built from the stored packet, or ``None`` when no estimate covers
    this period. For the dependent controller a dropped period uses
    ``tau_ticks`` as the dropout-detection wait and ``stored_estimates`` as the
    actions applied after it.
    """
    LN = L * N
    if not 0 <= tau_ticks < LN:
        raise ScheduleError(f"tau_ticks={tau_ticks} outside [0, {LN})")
    if dependent and tau_ticks >= L:
        raise ScheduleError("delay-dependent pattern needs the delay below one actuation period")
    if delivered and len(new_actions) != N:
        raise ScheduleError(f"expected {N} new actions, got {len(new_actions)}")
    if stored_estimates is not None and len(stored_estimates) != N:
        raise ScheduleError(f"expected {N} estimated actions, got {len(stored_estimates)}")

    if dependent:
        if delivered:
            return ActuationSchedule(held_then_slots(last_prev_action, new_actions, tau_ticks, L),
                                     NONUNIFORM_DEPENDENT)
        if stored_estimates is None:
            return ActuationSchedule(np.full(LN, float(last_prev_action)), HOLD)
        return ActuationSchedule(held_then_slots(last_prev_action, stored_estimates, tau_ticks, L),
                                 NONUNIFORM_DEPENDENT_DROPPED)

    if not delivered:
        if stored_estimates is None:
            return ActuationSchedule(np.full(LN, float(last_prev_action)), HOLD)
        return ActuationSchedule(uniform(stored_estimates, L), UNIFORM)
    values = uniform(new_actions, L)
    if tau_ticks == 0:
        return ActuationSchedule(values, UNIFORM)
    if stored_estimates is None:
        values[:tau_ticks] = last_prev_action
    else:
        values[:tau_ticks] = uniform(stored_estimates, L)[:tau_ticks]
    return ActuationSchedule(values, NONUNIFORM_INDEPENDENT)
