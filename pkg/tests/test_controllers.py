import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.signal import lfilter

from dualrate_ncs.controllers import (DelayRangeError, GainSchedule, PdState, PidDesign,
                                      PiState, ScheduledGains, expand_and_hold, nominal_gains,
                                      pd_actions, pd_step_dependent, pd_step_independent,
                                      pi_step, schedule_gains)

DESIGN = PidDesign()


def test_pi_zero_error():
    u, s = pi_step(PiState(), 0.3, 0.3, DESIGN)
    assert u == 0.0 and s == PiState(0.0, 0.0)


def test_pi_two_steps():
    u1, s = pi_step(PiState(), 1.0, 0.0, DESIGN)
    u2, _ = pi_step(s, 1.0, 0.0, DESIGN)
    assert u1 == 1.0
    assert u2 == pytest.approx(1 + 1 - (1 - 0.2 / 3.5), abs=1e-15)
    assert u2 == pytest.approx(1.057143, abs=1e-6)


def test_pi_integrates_constant_error():
    s = PiState()
    us = []
    for _ in range(50):
        u, s = pi_step(s, 0.5, 0.0, DESIGN)
        us.append(u)
    slopes = np.diff(us)
    np.testing.assert_allclose(slopes, 0.5 * 0.2 / 3.5, rtol=1e-12)


def test_expand_and_hold_examples():
    assert expand_and_hold(5.0, 2) == [5.0, 5.0]
    assert expand_and_hold(0.0, 3) == [0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        expand_and_hold(1.0, 0)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8), st.integers(1, 5))
def test_expand_and_hold_matches_upsample_convolution(slow, N):
    up = np.zeros(len(slow) * N)
    up[::N] = slow
    oracle = np.convolve(up, np.ones(N))[:len(up)]
    held = np.concatenate([expand_and_hold(v, N) for v in slow])
    np.testing.assert_array_equal(held, oracle)


def test_pd_independent_first_action():
    u, s = pd_step_independent(PdState(0.0), 1.0, DESIGN)
    assert u == pytest.approx(12 * 1.1)
    assert s.u_pi_prev == 1.0
    u2, _ = pd_step_independent(s, 1.0, DESIGN)
    assert u2 == pytest.approx(12.0)


@pytest.mark.parametrize("tau,K,Td", [(0.0, 12.0, 0.01), (0.04, 10.0, 0.03), (0.08, 8.0, 0.05)])
def test_gain_schedule_spot_values(tau, K, Td):
    g = schedule_gains(tau, DESIGN)
    assert g.Kpd_tau == pytest.approx(K, abs=1e-12)
    assert g.Td_tau == pytest.approx(Td, abs=1e-12)


@pytest.mark.parametrize("tau", [-0.001, 0.1])
def test_gain_schedule_range(tau):
    with pytest.raises(DelayRangeError):
        schedule_gains(tau, DESIGN)


@given(st.floats(0, 0.09))
def test_scheduled_gain_stays_positive(tau):
    assert schedule_gains(tau, DESIGN, GainSchedule()).Kpd_tau > 0


def test_dependent_pd_at_zero_delay_equals_independent():
    g = schedule_gains(0.0, DESIGN)
    a, _ = pd_step_dependent(PdState(0.2), 0.7, g, DESIGN.T)
    b, _ = pd_step_independent(PdState(0.2), 0.7, DESIGN)
    assert a == b


def test_pd_actions_first_uses_previous_input():
    g = ScheduledGains(10.0, 0.03)
    acts = pd_actions(1.0, 0.5, g, 0.1, 3)
    assert acts[0] == pytest.approx(10 * 1.3 * 1.0 - 10 * 0.3 * 0.5)
    assert acts[1] == acts[2] == pytest.approx(10.0)


def test_single_rate_case_is_series_pid():
    """With N = 1 the split controller is PI(z) PD(z) in series."""
    design = PidDesign(N=1, T=0.2)
    rng = np.random.default_rng(0)
    e = rng.normal(size=60)
    c = design.pi_coef
    a = design.Td / design.T
    K = design.pd_gain
    num = np.convolve([1.0, -c], [K * (1 + a), -K * a])
    oracle = lfilter(num, [1.0, -1.0], e)
    pi, pd = PiState(), PdState()
    out = []
    for ek in e:
        u, pi = pi_step(pi, ek, 0.0, design)
        v, pd = pd_step_independent(pd, u, design)
        out.append(v)
    np.testing.assert_allclose(out, oracle, rtol=1e-12, atol=1e-12)


def test_design_invariants():
    assert DESIGN.NT == pytest.approx(0.2, abs=1e-12)
    assert 0 < DESIGN.pi_coef < 1
    assert nominal_gains(DESIGN) == ScheduledGains(12.0, 0.01)
    with pytest.raises(ValueError):
        PidDesign(Ti=0.1)
    with pytest.raises(ValueError):
        PidDesign(N=0)
    with pytest.raises(ValueError):
        PidDesign(Td=0.0)
