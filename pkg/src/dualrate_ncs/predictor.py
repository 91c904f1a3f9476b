"""Remote-side prediction cascade with state and PI-integrator resetting.

Each sensor period the remote node resets the model state to the measured one
(or to its own previous estimate when the measurement was lost), then chains
one-period-ahead predictions: PD actions for the period, model propagation over
the period, PI action for the next period. The resulting future PI actions are
shipped to the local side in a :class:`ControlPacket`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core
from .actuation import held_then_slots
from .controllers import (PdState, PidDesign, PiState, ScheduledGains, pd_actions,
                          pi_step, pi_update)
from .plant import DiscretePlant, step

INDEPENDENT = "independent"
DEPENDENT = "dependent"


@dataclass(frozen=True)
class ControlPacket:
    seq: int
    u_pi_current: float
    u_pi_future: tuple = ()
    estimated_flag: bool = False

    def value_for(self, k: int):
        """PI action this packet holds for sensor period ``k``, or None."""
        i = k - self.seq
        if i == 0:
            return self.u_pi_current
        if 1 <= i <= len(self.u_pi_future):
            return self.u_pi_future[i - 1]
        return None

    def csv_row(self) -> list[str]:
        return ([str(self.seq), f"{self.u_pi_current:.17g}"]
                + [f"{v:.17g}" for v in self.u_pi_future]
                + [str(int(self.estimated_flag))])


@dataclass(frozen=True)
class PredictorState:
    """What the remote node carries from one sensor period to the next."""

    x_hat: tuple = (0.0, 0.0)
    y_hat: float = 0.0
    u_pi_hat: float = 0.0
    pi_state: PiState = field(default_factory=PiState)
    pd_state: PdState = field(default_factory=PdState)
    last_action: float = 0.0


@dataclass(frozen=True)
class CascadeConfig:
    variant: str
    horizon: int
    design: PidDesign
    model_T: DiscretePlant
    model_t: DiscretePlant
    L: int
    gains_first: ScheduledGains
    gains_rest: ScheduledGains
    ticks_first: int = 0
    ticks_rest: int = 0

    @property
    def dependent(self) -> bool:
        return self.variant == DEPENDENT


# -- individual cascade steps ------------------------------------------------

def reset_initial_state(i: int, x_source) -> np.ndarray:
    """Initial model state of iteration ``i``: a copy of the actual/estimated
    slow-rate state for i = 1, or of the previous iteration's estimate."""
    if i < 1:
        raise ValueError("iterations are numbered from 1")
    return np.array([float(x_source[0]), float(x_source[1])])


def predict_pd_actions_independent(u_pi_seq, design: PidDesign) -> list[float]:
    current, previous = u_pi_seq
    g = ScheduledGains(design.pd_gain, design.Td)
    return pd_actions(current, previous, g, design.T, design.N)


def predict_pd_actions_dependent(u_pi_seq, gains_first: ScheduledGains,
                                 gains_rest: ScheduledGains, i: int,
                                 design: PidDesign) -> list[float]:
    current, previous = u_pi_seq
    g = gains_first if i == 1 else gains_rest
    return pd_actions(current, previous, g, design.T, design.N)


def propagate_state(x, pd_actions_, variant: str, model_t: DiscretePlant,
                    model_T: DiscretePlant, L: int = 1, ticks: int = 0,
                    prev_action: float = 0.0):
    """Propagate the model over one sensor period.

    Independent: N steps of the period-T model with uniform actions.
    Dependent: L*N steps of the period-t model, ``prev_action`` held for
    ``ticks`` basic periods and then the N actions.
    """
    x = np.asarray(x, dtype=float)
    y = float(model_T.C @ x)
    if variant == INDEPENDENT:
        for u in pd_actions_:
            x, y = step(model_T, x, u)
        return x, y
    if ticks >= L:
        raise ValueError("non-uniform pattern needs ticks < L")
    for u in held_then_slots(prev_action, pd_actions_, ticks, L):
        x, y = step(model_t, x, float(u))
    return x, y


def predict_pi_action(u_now: float, r_now: float, r_next: float, y_now: float,
                      y_next_hat: float, design: PidDesign) -> float:
    return pi_update(u_now, r_next - y_next_hat, r_now - y_now, design.pi_coef, design.K_pi)


def cascade_reference(x, u_pi: float, e_now: float, u_pd_prev: float, last_action: float,
                      refs, cfg: CascadeConfig):
    """Step-by-step composition of the cascade (readable counterpart of the kernel).

    Returns (future PI actions, estimated states, estimated outputs, last actions).
    """
    futures, states, outputs, lasts = [], [], [], []
    x_src = x
    prev_pi = u_pd_prev
    e_prev = e_now
    prev_action = last_action
    for i in range(1, cfg.horizon + 1):
        x_i = reset_initial_state(i, x_src)
        if cfg.dependent:
            acts = predict_pd_actions_dependent((u_pi, prev_pi), cfg.gains_first,
                                                cfg.gains_rest, i, cfg.design)
            ticks = cfg.ticks_first if i == 1 else cfg.ticks_rest
            x_next, y_next = propagate_state(x_i, acts, DEPENDENT, cfg.model_t, cfg.model_T,
                                             cfg.L, ticks, prev_action)
        else:
            acts = predict_pd_actions_independent((u_pi, prev_pi), cfg.design)
            x_next, y_next = propagate_state(x_i, acts, INDEPENDENT, cfg.model_t, cfg.model_T)
        e_next = refs[i] - y_next
        u_next = pi_update(u_pi, e_next, e_prev, cfg.design.pi_coef, cfg.design.K_pi)
        futures.append(u_next)
        states.append(x_next)
        outputs.append(y_next)
        lasts.append(acts[-1])
        x_src = x_next
        prev_pi, u_pi, e_prev = u_pi, u_next, e_next
        prev_action = acts[-1]
    return futures, states, outputs, lasts


# -- packet generation -------------------------------------------------------

def run_cascade(x, u_pi: float, e_now: float, u_pd_prev: float, last_action: float,
                refs, cfg: CascadeConfig):
    """Kernel-backed cascade; same outputs as :func:`cascade_reference`."""
    H = cfg.horizon
    refs = np.ascontiguousarray(refs, dtype=float)
    if len(refs) != H + 1:
        raise ValueError(f"reference window must hold {H + 1} samples")
    u_out = np.empty(H)
    x_out = np.empty(2 * H)
    y_out = np.empty(H)
    last_out = np.empty(H)
    model = cfg.model_t if cfg.dependent else cfg.model_T
    d = cfg.design
    core.cascade(cfg.dependent, H, d.N, cfg.L, np.array(model.coefficients()),
                 float(x[0]), float(x[1]), u_pi, e_now, u_pd_prev, last_action,
                 refs, d.K_pi, d.pi_coef, d.T,
                 cfg.gains_first.Kpd_tau, cfg.gains_first.Td_tau, cfg.ticks_first,
                 cfg.gains_rest.Kpd_tau, cfg.gains_rest.Td_tau, cfg.ticks_rest,
                 u_out, x_out, y_out, last_out)
    return u_out, x_out.reshape(H, 2), y_out, last_out


def build_packet(k: int, refs, state: PredictorState, cfg: CascadeConfig,
                 measurement=None):
    """One remote-side period: PI action (actual or estimated) plus cascade.

    ``refs`` holds r_k .. r_{k+horizon}. ``measurement`` is ``(x_k, y_k)`` when
    the sensor packet arrived, ``None`` when it was lost. Returns the packet and
    the predictor state for period k+1.
    """
    r_now = refs[0]
    if measurement is not None:
        x_dot, y_dot = measurement
        u_dot, pi_state = pi_step(state.pi_state, r_now, y_dot, cfg.design)
        estimated = False
    else:
        x_dot, y_dot = state.x_hat, state.y_hat
        u_dot = state.u_pi_hat
        pi_state = PiState(u_prev=u_dot, e_prev=r_now - y_dot)
        estimated = True
    e_dot = r_now - y_dot
    u_out, x_out, y_out, last_out = run_cascade(
        x_dot, u_dot, e_dot, state.pd_state.u_pi_prev, state.last_action, refs, cfg)
    packet = ControlPacket(seq=k, u_pi_current=float(u_dot),
                           u_pi_future=tuple(float(v) for v in u_out),
                           estimated_flag=estimated)
    new_state = PredictorState(
        x_hat=(float(x_out[0, 0]), float(x_out[0, 1])),
        y_hat=float(y_out[0]),
        u_pi_hat=float(u_out[0]),
        pi_state=pi_state,
        pd_state=PdState(u_pi_prev=float(u_dot)),
        last_action=float(last_out[0]),
    )
    return packet, new_state


def pi_only_packet(k: int, r_now: float, state: PiState, design: PidDesign,
                   y_latest: float, fresh: bool = True):
    """Remote behaviour without a prediction stage.

    The PI runs every sensor period on the latest measurement it holds; when the
    sensor packet was lost that is the previous one (``fresh`` false).
    """
    u, new_state = pi_step(state, r_now, y_latest, design)
    return ControlPacket(seq=k, u_pi_current=float(u), estimated_flag=not fresh), new_state
