from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dualrate_ncs.engine import ScenarioConfig, run_comparison
from dualrate_ncs.metrics import (GridMismatchError, accumulated_error, comparison_report,
                                  index_report, j_improvement, mean_report, overshoot,
                                  read_summary, robustness_grid, window_samples,
                                  write_comparison_table, write_grid_table, write_summary)

arrays = st.lists(st.floats(-1, 1), min_size=1, max_size=50).map(np.array)


def test_error_of_nominal_is_zero():
    y = np.sin(np.linspace(0, 3, 40))
    assert accumulated_error(y, y) == 0.0
    assert overshoot(y, y) == 0.0


def test_constant_offset():
    y = np.sin(np.linspace(0, 3, 40))
    assert accumulated_error(y + 0.5, y) == pytest.approx(40 * 0.5)
    assert overshoot(y + 0.007, y) == pytest.approx(0.007)


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        accumulated_error(np.zeros(3), np.zeros(4))
    with pytest.raises(GridMismatchError):
        overshoot(np.zeros(0), np.zeros(0))


@pytest.mark.parametrize("value,worst,expected", [(5.0, 5.0, 0.0), (0.0, 5.0, 100.0),
                                                  (2.5, 5.0, 50.0), (0.0, 0.0, 100.0)])
def test_j_examples(value, worst, expected):
    assert j_improvement(value, worst) == expected


def test_j_rejects_negative():
    with pytest.raises(ValueError):
        j_improvement(-1.0, 2.0)
    with pytest.raises(ValueError):
        j_improvement(1.0, 0.0)


@given(st.floats(1e-300, 1e300))
def test_worst_scores_exactly_zero(w):
    assert j_improvement(w, w) == 0.0


@given(arrays, arrays)
def test_errors_nonnegative(a, b):
    n = min(len(a), len(b))
    assert accumulated_error(a[:n], b[:n]) >= 0
    assert overshoot(a[:n], b[:n]) >= 0


# scaling must not underflow, so nonzero magnitudes stay well inside the normal range
@given(st.lists(st.just(0.0) | st.floats(1e-300, 10), min_size=2, max_size=6),
       st.floats(1e-3, 1e3))
def test_j_scale_invariance(vals, c):
    worst = max(vals)
    if worst == 0:
        return
    a = [j_improvement(v, worst) for v in vals]
    b = [j_improvement(v * c, worst * c) for v in vals]
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_report_flags_degenerate():
    y = np.zeros(5)
    rep = index_report({"nominal": y, "a": y}, y, "a")
    assert rep.degenerate
    assert rep.rows["a"].J_E == 100.0


def test_comparison_window_and_report():
    cfg = ScenarioConfig(horizon=12.0, seed=4)
    traces = run_comparison(cfg)
    w = window_samples(traces["nominal"])
    assert w.shape == (1, cfg.n_periods - int(round(1.5 / cfg.NT)))
    rep = comparison_report(traces)
    assert rep.rows["dd_np"].J_E == 0.0 and rep.rows["dd_np"].J_O == 0.0
    assert rep.rows["nominal"].J_E == 100.0
    assert rep.rows["di_p"].J_E >= 99.9
    ticks = window_samples(replace(traces["nominal"], config=replace(cfg, metric_grid="tick")))
    assert ticks.shape[1] > w.shape[1]


def test_robustness_grid_corners():
    g = robustness_grid(ScenarioConfig(horizon=12.0, seed=2), (0, 20, 30), (0, 8, 12))
    assert g.J3[0, 0] == 100.0 and g.J4[0, 0] == 100.0
    assert g.J3[-1, -1] == 0.0 and g.J4[-1, -1] == 0.0
    assert g.E[0, 0] == 0.0 and not g.degenerate
    assert np.all(np.diff(g.J3, axis=0) <= 0) and np.all(np.diff(g.J3, axis=1) <= 0)


def test_robustness_grid_validation():
    with pytest.raises(ValueError):
        robustness_grid(ScenarioConfig(horizon=2.0), (), (0,))
    with pytest.raises(ValueError):
        robustness_grid(ScenarioConfig(horizon=2.0), (10, 20), (0,))
    g = robustness_grid(ScenarioConfig(horizon=2.0), (0,), (0,))
    assert g.degenerate and g.J3[0, 0] == 100.0


def test_exports(tmp_path):
    traces = run_comparison(ScenarioConfig(horizon=6.0))
    reps = [comparison_report(traces)] * 2
    write_comparison_table(mean_report(reps), tmp_path / "t.csv", mean_over=reps)
    head = (tmp_path / "t.csv").read_text().splitlines()[0].split(",")
    assert head[:5] == ["trace", "E", "J1_pct", "O", "J2_pct"] and "E_std" in head
    g = robustness_grid(ScenarioConfig(horizon=4.0), (0, 20), (0, 8))
    write_grid_table([g, g], "E", "J3", tmp_path / "g.csv")
    rows = (tmp_path / "g.csv").read_text().splitlines()
    assert len(rows) == 5 and rows[0].startswith("q_pct,r_pct,E_mean,E_std")
    write_summary({"b": 1.5, "a": "x"}, tmp_path / "s.txt")
    assert (tmp_path / "s.txt").read_text() == "a=x\nb=1.5\n"
    assert read_summary(tmp_path / "s.txt") == {"a": "x", "b": "1.5"}
