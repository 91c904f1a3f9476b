"""Fixed-step simulation of the networked dual-rate loop on the basic-period grid.

One sensor period k spans ticks [k*L*N, (k+1)*L*N). At its first tick the sensor
samples the plant state; the channel realization decides whether the sensor
packet reaches the remote node and whether the control packet comes back, and
when. The local node then applies one value per tick according to the
controller variant's actuation pattern.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import core, network
from .actuation import build_schedule
from .controllers import (GainSchedule, PidDesign, PiState, nominal_gains, pd_actions,
                          schedule_gains)
from .network import ChannelRealization, DelayModel, DropoutModel
from .plant import ContinuousPlant, InputNonlinearity, discretize_zoh, perturb
from .predictor import (DEPENDENT, INDEPENDENT, CascadeConfig, ControlPacket,
                        PredictorState, build_packet, pi_only_packet)
from .reference import ReferenceSpec, reference

DELAY_DEPENDENT = "delay_dependent"
DELAY_INDEPENDENT = "delay_independent"
NOMINAL = "nominal"

# short names of the four compared loops -> (variant, prediction_enabled)
VARIANTS = {
    "nominal": (NOMINAL, False),
    "dd_np": (DELAY_DEPENDENT, False),
    "dd_p": (DELAY_DEPENDENT, True),
    "di_p": (DELAY_INDEPENDENT, True),
}
AXIS_NAMES = ("x", "y")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    # plant G(s) = gain_num / (s (s + pole)); the true plant is perturbed by
    # (q_pct, r_pct), the controller/predictor model is not
    gain_num: float = 6.3
    pole: float = 17.7
    q_pct: float = 0.0
    r_pct: float = 0.0
    perturb_basis: str = "numerator"
    # dual-rate PID
    Kp: float = 12.0
    Td: float = 0.01
    Ti: float = 3.5
    T: float = 0.1
    N: int = 2
    K_pi: float = 1.0
    sched_k_slope: float = -50.0
    sched_td_slope: float = 0.5
    # channel
    eta: float = 0.04
    phi: float = 0.012
    tau_max: float = 0.08
    p: float = 0.3
    M: int = 3
    alpha: float = 0.5
    tau_max_lr: Optional[float] = None  # default alpha * tau_max
    dd_wait: Optional[float] = None  # default T - t_basic
    prediction_horizon: Optional[int] = None  # default M + 1
    # loop
    variant: str = DELAY_INDEPENDENT
    prediction_enabled: bool = True
    t_basic: float = 0.01
    horizon: float = 30.0
    seed: int = 1
    saturation: float = 1.0
    dead_zone: float = 0.06
    dead_zone_enabled: bool = False
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    # metrics
    window_start: Optional[float] = None  # default 5 filter time constants
    metric_grid: str = "sensor"

    # -- derived quantities --
    @property
    def NT(self) -> float:
        return self.N * self.T

    @property
    def L(self) -> int:
        return int(round(self.T / self.t_basic))

    @property
    def ticks_per_period(self) -> int:
        return self.L * self.N

    @property
    def n_periods(self) -> int:
        return int(round(self.horizon / self.NT))

    @property
    def tau_max_lr_value(self) -> float:
        return self.alpha * self.tau_max if self.tau_max_lr is None else self.tau_max_lr

    @property
    def dd_wait_value(self) -> float:
        return self.T - self.t_basic if self.dd_wait is None else self.dd_wait

    @property
    def horizon_steps(self) -> int:
        return self.M + 1 if self.prediction_horizon is None else self.prediction_horizon

    @property
    def window_start_value(self) -> float:
        if self.window_start is not None:
            return self.window_start
        if self.reference.kind == "filtered_step":
            return 5.0 * self.reference.filter_tau
        return 0.0

    def design(self) -> PidDesign:
        return PidDesign(Kp=self.Kp, Td=self.Td, Ti=self.Ti, T=self.T, N=self.N, K_pi=self.K_pi)

    def law(self) -> GainSchedule:
        return GainSchedule(self.sched_k_slope, self.sched_td_slope, self.dd_wait_value)

    def delay_model(self) -> DelayModel:
        return DelayModel(self.eta, self.phi, self.tau_max)

    def dropout_model(self) -> DropoutModel:
        return DropoutModel(self.p, self.M)

    def model_plant(self) -> ContinuousPlant:
        return ContinuousPlant(self.gain_num, self.pole)

    def true_plant(self) -> ContinuousPlant:
        return perturb(self.model_plant(), self.q_pct, self.r_pct, self.perturb_basis)

    def nonlinearity(self) -> InputNonlinearity:
        return InputNonlinearity(self.saturation, self.dead_zone, self.dead_zone_enabled)

    def with_variant(self, name: str) -> ScenarioConfig:
        variant, pred = VARIANTS[name]
        return replace(self, variant=variant, prediction_enabled=pred)

    def validate(self) -> None:
        """Raise :class:`ConfigError` naming the first violated invariant."""
        def fail(msg):
            raise ConfigError(msg)

        if self.variant not in (DELAY_DEPENDENT, DELAY_INDEPENDENT, NOMINAL):
            fail(f"unknown variant {self.variant!r}")
        if not self.t_basic > 0:
            fail("t_basic must be positive")
        if self.L < 1 or abs(self.L * self.t_basic - self.T) > 1e-9:
            fail(f"T ({self.T}) must be an integer multiple L of t_basic ({self.t_basic})")
        try:
            self.design()
            self.delay_model()
            self.dropout_model()
            self.model_plant()
            self.true_plant()
            self.nonlinearity()
        except ValueError as exc:
            fail(str(exc))
        if not network.check_no_disorder(self.delay_model(), self.NT):
            fail(f"packet disorder condition violated: tau_max ({self.tau_max}) "
                 f"must be < NT ({self.NT})")
        if not 0 <= self.alpha <= 1:
            fail("alpha (one-way delay split) must lie in [0, 1]")
        if self.tau_max_lr_value < self.alpha * self.tau_max - 1e-12:
            fail("tau_max_lr must not be shorter than the longest local-to-remote delay")
        worst_arrival = self.tau_max_lr_value + (1 - self.alpha) * self.tau_max
        if worst_arrival >= self.NT:
            fail(f"control packets may arrive after the sensor period ends "
                 f"({worst_arrival} >= NT={self.NT})")
        if self.horizon < self.NT:
            fail("horizon shorter than one sensor period")
        if self.horizon_steps < 1:
            fail("prediction_horizon must be >= 1")
        if self.variant == DELAY_INDEPENDENT and not self.prediction_enabled:
            fail("the delay-independent controller requires the prediction stage")
        if self.variant == DELAY_DEPENDENT:
            wait_ticks = network.quantize_delay(self.dd_wait_value, self.t_basic)
            if wait_ticks >= self.L:
                fail(f"dd_wait ({self.dd_wait_value}) must be shorter than T ({self.T})")
            if worst_arrival > self.dd_wait_value + 1e-12:
                fail(f"delay-dependent controller needs every round trip "
                     f"({worst_arrival}) within its waiting time ({self.dd_wait_value})")
        if self.metric_grid not in ("sensor", "tick"):
            fail("metric_grid must be 'sensor' or 'tick'")


@dataclass
class PeriodEvent:
    axis: int
    k: int
    time: float
    tau: float
    tau_lr: float
    tau_rl: float
    delivered_lr: bool
    delivered_rl: bool
    forced_lr: bool
    forced_rl: bool
    arrival: float  # round trip seen by the local node (send at kNT)
    tau_ticks: int
    pattern: str
    packet: Optional[ControlPacket]
    applied: bool  # whether the packet reached the local node


@dataclass
class SimTrace:
    config: ScenarioConfig
    time: np.ndarray  # (n,)
    reference: np.ndarray  # (axes, n)
    output: np.ndarray
    u_cmd: np.ndarray
    u_applied: np.ndarray
    events: list = field(default_factory=list)

    @property
    def axes(self) -> int:
        return self.reference.shape[0]

    def sensor_samples(self) -> np.ndarray:
        return self.output[:, ::self.config.ticks_per_period]


def _cascade_config(cfg: ScenarioConfig) -> CascadeConfig:
    design = cfg.design()
    model = cfg.model_plant()
    dependent = cfg.variant == DELAY_DEPENDENT
    if dependent:
        law = cfg.law()
        tau_m = network.delay_mode(cfg.delay_model())
        first = schedule_gains(tau_m, design, law)
        rest = schedule_gains(cfg.dd_wait_value, design, law)
        ticks_first = network.quantize_delay(tau_m, cfg.t_basic)
        ticks_rest = network.quantize_delay(cfg.dd_wait_value, cfg.t_basic)
    else:
        first = rest = nominal_gains(design)
        ticks_first = ticks_rest = 0
    return CascadeConfig(
        variant=DEPENDENT if dependent else INDEPENDENT,
        horizon=cfg.horizon_steps, design=design,
        model_T=discretize_zoh(model, cfg.T), model_t=discretize_zoh(model, cfg.t_basic),
        L=cfg.L, gains_first=first, gains_rest=rest,
        ticks_first=ticks_first, ticks_rest=ticks_rest)


def channel_for(cfg: ScenarioConfig, axis: int = 0) -> ChannelRealization:
    if cfg.variant == NOMINAL:
        return network.ideal(cfg.n_periods)
    return network.realize(cfg.seed, cfg.n_periods, cfg.delay_model(), cfg.dropout_model(), axis)


def _run_axis(cfg: ScenarioConfig, axis: int, channel: ChannelRealization,
              ref_ticks: np.ndarray, out_y, out_u, out_ua, events: list):
    design = cfg.design()
    L, N, LN = cfg.L, cfg.N, cfg.ticks_per_period
    H = cfg.horizon_steps
    nominal = cfg.variant == NOMINAL
    dependent = cfg.variant == DELAY_DEPENDENT
    predicting = cfg.prediction_enabled and not nominal
    law = cfg.law()
    nl = cfg.nonlinearity()
    plant_t = discretize_zoh(cfg.true_plant(), cfg.t_basic)
    plant_coef = np.array(plant_t.coefficients())
    C = plant_t.C
    wait_ticks = network.quantize_delay(cfg.dd_wait_value, cfg.t_basic)
    g_nominal = nominal_gains(design)
    g_wait = schedule_gains(cfg.dd_wait_value, design, law) if dependent else None

    K = cfg.n_periods
    refs = np.array([reference(cfg.reference, k * cfg.NT)[axis] for k in range(K + H + 1)])

    x0, x1 = 0.0, 0.0
    pi_state = PiState()
    cascade_cfg = _cascade_config(cfg) if predicting else None
    stored: Optional[ControlPacket] = None
    pred_state = None
    if predicting:
        # the initial state is known to both nodes: seed the local store and the
        # remote estimates with a cascade run on it before the loop starts
        y_init = C[0] * x0 + C[1] * x1
        boot = PredictorState(x_hat=(x0, x1), y_hat=y_init)
        stored, _ = build_packet(0, refs[0:H + 1], boot, cascade_cfg, ((x0, x1), y_init))
        pred_state = replace(boot, u_pi_hat=stored.u_pi_current)
    y_held = C[0] * x0 + C[1] * x1
    pd_prev = 0.0
    last_action = 0.0
    y_buf = np.empty(LN)
    u_buf = np.empty(LN)

    for k in range(K):
        y_k = C[0] * x0 + C[1] * x1
        measured = ((x0, x1), y_k)
        tau = float(channel.tau[k])
        ok_lr = bool(channel.delivered_lr[k])
        ok_rl = bool(channel.delivered_rl[k])
        tau_lr = cfg.alpha * tau
        tau_rl = tau - tau_lr
        send = tau_lr if ok_lr else cfg.tau_max_lr_value
        arrival = send + tau_rl

        # remote node
        if predicting:
            packet, pred_state = build_packet(k, refs[k:k + H + 1], pred_state, cascade_cfg,
                                              measured if ok_lr else None)
        else:
            if ok_lr:
                y_held = y_k
            packet, pi_state = pi_only_packet(k, refs[k], pi_state, design, y_held, ok_lr)
        applied = ok_rl and packet is not None
        tau_ticks = network.quantize_delay(arrival, cfg.t_basic) if applied else 0

        # local node
        est_pi = stored.value_for(k) if stored is not None else None
        new_actions = None
        if dependent:
            if applied:
                g = schedule_gains(arrival, design, law)
                new_actions = pd_actions(packet.u_pi_current, pd_prev, g, design.T, N)
            else:
                tau_ticks = wait_ticks
            estimates = (pd_actions(est_pi, pd_prev, g_wait, design.T, N)
                         if est_pi is not None else None)
        else:
            if applied:
                new_actions = pd_actions(packet.u_pi_current, pd_prev, g_nominal, design.T, N)
            estimates = (pd_actions(est_pi, pd_prev, g_nominal, design.T, N)
                         if est_pi is not None else None)
        schedule = build_schedule(dependent, applied, tau_ticks, new_actions, estimates,
                                  last_action, L, N)
        if applied:
            pd_prev = packet.u_pi_current
            if predicting:
                stored = packet
        elif est_pi is not None:
            pd_prev = est_pi
        last_action = float(schedule.values[-1])

        x0, x1 = core.run_ticks(plant_coef, x0, x1, schedule.values, nl.saturation,
                                nl.dead_zone, nl.dead_zone_enabled, y_buf, u_buf)
        if not (math.isfinite(x0) and math.isfinite(x1)):
            raise FloatingPointError(f"plant state diverged in sensor period {k}")
        sl = slice(k * LN, (k + 1) * LN)
        out_y[sl] = y_buf
        out_u[sl] = schedule.values
        out_ua[sl] = u_buf
        events.append(PeriodEvent(
            axis=axis, k=k, time=k * cfg.NT, tau=tau, tau_lr=tau_lr, tau_rl=tau_rl,
            delivered_lr=ok_lr, delivered_rl=ok_rl,
            forced_lr=bool(channel.forced_lr[k]), forced_rl=bool(channel.forced_rl[k]),
            arrival=arrival, tau_ticks=tau_ticks, pattern=schedule.pattern_tag,
            packet=packet, applied=applied))


def run(cfg: ScenarioConfig, channels: Optional[list] = None) -> SimTrace:
    """Simulate ``cfg.horizon`` seconds; ``channels`` overrides the per-axis
    channel realizations (used to share one realization between variants)."""
    cfg.validate()
    axes = cfg.reference.axes
    n = cfg.n_periods * cfg.ticks_per_period
    time = np.arange(n) * cfg.t_basic
    ref = np.array([[reference(cfg.reference, float(tt))[a] for tt in time] for a in range(axes)])
    out_y = np.empty((axes, n))
    out_u = np.empty((axes, n))
    out_ua = np.empty((axes, n))
    events: list = []
    for a in range(axes):
        channel = channels[a] if channels is not None else channel_for(cfg, a)
        if cfg.variant == NOMINAL:
            channel = network.ideal(cfg.n_periods)
        _run_axis(cfg, a, channel, ref[a], out_y[a], out_u[a], out_ua[a], events)
    return SimTrace(cfg, time, ref, out_y, out_u, out_ua, events)


def run_comparison(cfg: ScenarioConfig, names=("nominal", "dd_np", "dd_p", "di_p"),
                   plant_override: Optional[dict] = None) -> dict:
    """Run several variants against one channel realization per axis."""
    channels = [network.realize(cfg.seed, cfg.n_periods, cfg.delay_model(),
                                cfg.dropout_model(), a)
                for a in range(cfg.reference.axes)]
    traces = {}
    for name in names:
        vcfg = cfg.with_variant(name)
        if plant_override and name in plant_override:
            vcfg = replace(vcfg, **plant_override[name])
        traces[name] = run(vcfg, channels)
    grids = {(t.config.t_basic, t.config.ticks_per_period, len(t.time)) for t in traces.values()}
    if len(grids) != 1:
        raise ConfigError("compared variants do not share a timing grid")
    return traces


# -- CSV export --------------------------------------------------------------

def _f(v: float) -> str:
    return f"{float(v):.17g}"


def trace_header(axes: int) -> list[str]:
    cols = ["tick", "time"]
    for a in range(axes):
        s = AXIS_NAMES[a]
        cols += [f"reference_{s}", f"output_{s}", f"u_cmd_{s}", f"u_applied_{s}"]
    return cols


def write_trace_csv(trace: SimTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(trace.axes))
        for n in range(len(trace.time)):
            row = [str(n), _f(trace.time[n])]
            for a in range(trace.axes):
                row += [_f(trace.reference[a, n]), _f(trace.output[a, n]),
                        _f(trace.u_cmd[a, n]), _f(trace.u_applied[a, n])]
            w.writerow(row)


def events_header(horizon: int) -> list[str]:
    return (["axis", "k", "time", "tau", "tau_lr", "tau_rl", "delivered_lr", "delivered_rl",
             "forced_lr", "forced_rl", "arrival", "tau_ticks", "pattern", "applied",
             "packet_seq", "u_pi_current"]
            + [f"future_{i + 1}" for i in range(horizon)] + ["estimated_flag"])


def write_events_csv(trace: SimTrace, path) -> None:
    H = trace.config.horizon_steps
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(events_header(H))
        for ev in trace.events:
            row = [AXIS_NAMES[ev.axis], str(ev.k), _f(ev.time), _f(ev.tau), _f(ev.tau_lr),
                   _f(ev.tau_rl), str(int(ev.delivered_lr)), str(int(ev.delivered_rl)),
                   str(int(ev.forced_lr)), str(int(ev.forced_rl)), _f(ev.arrival),
                   str(ev.tau_ticks), ev.pattern, str(int(ev.applied))]
            if ev.packet is None:
                row += [""] * (H + 3)
            else:
                pkt = ev.packet.csv_row()
                future = pkt[2:-1] + [""] * (H - len(ev.packet.u_pi_future))
                row += pkt[:2] + future + [pkt[-1]]
            w.writerow(row)


def read_trace_csv(path) -> dict:
    """Columns of a trace CSV as float arrays keyed by header name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: empty trace")
    header, body = rows[0], rows[1:]
    if header[:2] != ["tick", "time"]:
        raise ValueError(f"{path}: not a trace file")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed trace ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    return {name: data[:, i] for i, name in enumerate(header)}


def config_fields() -> list[str]:
    return [f.name for f in fields(ScenarioConfig)]
