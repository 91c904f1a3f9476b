"""Acceptance checks. Each test records one PASS/FAIL line, printed in the
terminal summary (and directly when the module is run as a script)."""
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import quad

from dualrate_ncs import cli, core, metrics, network
from dualrate_ncs.controllers import PidDesign, schedule_gains
from dualrate_ncs.engine import run, run_comparison
from dualrate_ncs.network import DelayModel, DropoutModel, Link
from dualrate_ncs.plant import ContinuousPlant, discretize_zoh, step

RESULTS = []
SEEDS = range(1, 11)


def record(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def scenario(name):
    return cli.load_scenario(name)[1]


@pytest.fixture(scope="module")
def comparisons():
    cfg = scenario("paper_sec4")
    return {s: run_comparison(replace(cfg, seed=s)) for s in range(1, 21)}


def test_1_nominal_equivalence(comparisons):
    worst_dev, j1_min, j2_min = 0.0, 100.0, 100.0
    for s in SEEDS:
        tr = comparisons[s]
        worst_dev = max(worst_dev, float(np.max(np.abs(tr["di_p"].output - tr["nominal"].output))))
        rep = metrics.comparison_report(tr)
        j1_min = min(j1_min, rep.rows["di_p"].J_E)
        j2_min = min(j2_min, round(rep.rows["di_p"].J_O, 2))
    cfg = replace(scenario("paper_sec4"), seed=1).with_variant("di_p")
    run(cfg)
    t0 = time.perf_counter()
    run(cfg)
    elapsed = time.perf_counter() - t0
    ok = worst_dev < 1e-6 and j1_min >= 99.9 and j2_min == 100.0 and elapsed < 1.0
    assert record("1 nominal equivalence", ok,
                  f"max|y_DI-P - y_nom| = {worst_dev:.2e} m over {len(SEEDS)} seeds, "
                  f"min J1 = {j1_min:.6f}, min J2 (2 dp) = {j2_min:.2f}, "
                  f"run time {elapsed * 1e3:.1f} ms ({core.BACKEND} core)")


def test_2_ordering(comparisons):
    ordered, j1 = [], []
    for s, tr in comparisons.items():
        rep = metrics.comparison_report(tr)
        e = {k: r.E for k, r in rep.rows.items()}
        ordered.append(e["di_p"] < e["dd_p"] < e["dd_np"])
        j1.append(rep.rows["dd_p"].J_E)
    mean = float(np.mean(j1))
    ok = all(ordered) and 20.0 <= mean <= 70.0
    assert record("2 variant ordering", ok,
                  f"E(DI-P) < E(DD-P) < E(DD-NP) on {sum(ordered)}/{len(ordered)} seeds, "
                  f"mean J1(DD-P) = {mean:.2f}% (band [20, 70])")


@pytest.fixture(scope="module")
def grids():
    cfg = scenario("robustness")
    return [metrics.robustness_grid(cfg, (0, 20, 30), (0, 8, 12), seed=s) for s in SEEDS]


def monotone(m):
    return bool(np.all(np.diff(m, axis=0) <= 0) and np.all(np.diff(m, axis=1) <= 0))


def test_3_robustness_corners_and_error_index(grids):
    corners = all(g.J3[0, 0] == 100.0 and g.J4[0, 0] == 100.0 and
                  g.J3[-1, -1] == 0.0 and g.J4[-1, -1] == 0.0 for g in grids)
    mono = [monotone(g.J3) for g in grids]
    mean = np.mean([g.J3 for g in grids], axis=0)
    ok = corners and all(mono)
    assert record("3a robustness grid corners + J3 monotone", ok,
                  f"corners exact on all seeds: {corners}; J3 non-increasing on "
                  f"{sum(mono)}/{len(mono)} seeds; seed-mean J3 rows(q) = "
                  f"{np.round(mean, 1).tolist()}")


@pytest.mark.xfail(strict=True, reason="overshoot index is not monotone on every seed; "
                                       "dropout excursions outweigh the small r-steps")
def test_3_robustness_overshoot_index(grids):
    mono = [monotone(g.J4) for g in grids]
    bad = [g.seed for g, m in zip(grids, mono) if not m]
    assert record("3b robustness grid J4 monotone", all(mono),
                  f"J4 non-increasing on {sum(mono)}/{len(mono)} seeds"
                  + (f" (violations on seeds {bad})" if bad else ""))


def rk4(plant, x, u, h, dt=1e-6):
    p, g = plant.pole, plant.gain_num
    pos, vel = float(x[0]), float(x[1])
    n = int(round(h / dt))
    dt = h / n
    for _ in range(n):
        k1v = -p * vel + g * u
        v2 = vel + 0.5 * dt * k1v
        k2v = -p * v2 + g * u
        v3 = vel + 0.5 * dt * k2v
        k3v = -p * v3 + g * u
        v4 = vel + dt * k3v
        k4v = -p * v4 + g * u
        pos += dt / 6.0 * (vel + 2 * v2 + 2 * v3 + v4)
        vel += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return pos


def test_4_discretization():
    plant = ContinuousPlant()
    x, u = np.array([0.012, -0.03]), 0.7
    errs = {h: abs(step(discretize_zoh(plant, h), x, u)[1] - rk4(plant, x, u, h))
            for h in (0.01, 0.1, 0.2)}
    comp = float(np.max(np.abs(discretize_zoh(plant, 0.2).A
                               - np.linalg.matrix_power(discretize_zoh(plant, 0.1).A, 2))))
    ok = max(errs.values()) < 1e-8 and comp < 1e-12
    assert record("4 discretization oracle", ok,
                  "step vs RK4 " + ", ".join(f"h={h}: {e:.1e} m" for h, e in errs.items())
                  + f"; |A_NT - A_T^N| = {comp:.1e}")


def test_5_channel_statistics(comparisons):
    dm = DelayModel()
    tau = network.sample_delays(network.stream(2024, Link.DELAY), dm, 100_000)
    pdf = lambda t: np.exp(-(t - dm.eta) / dm.phi)
    oracle = quad(lambda t: t * pdf(t), dm.eta, dm.tau_max)[0] / quad(pdf, dm.eta, dm.tau_max)[0]
    rel = abs(tau.mean() - oracle) / oracle
    support = bool(tau.min() >= dm.eta and tau.max() <= dm.tau_max)

    rng = network.stream(2024, Link.LOCAL_TO_REMOTE)
    cs = network.ChannelState()
    uncapped = DropoutModel(p=0.3, M=10**9)
    rate = sum(not network.sample_dropout(rng, uncapped, cs, Link.LOCAL_TO_REMOTE)[0]
               for _ in range(100_000)) / 100_000

    cfg = scenario("paper_sec4")
    longest, monotone_seq = 0, True
    for tr in comparisons.values():
        for name in ("dd_np", "dd_p", "di_p"):
            ev = tr[name].events
            longest = max(longest, network.longest_run([e.delivered_lr for e in ev]),
                          network.longest_run([e.delivered_rl for e in ev]))
            got = [(e.packet.seq, e.k * cfg.NT + e.arrival) for e in ev if e.applied]
            seqs = [g[0] for g in got]
            arrivals = [g[1] for g in got]
            monotone_seq &= all(np.diff(seqs) > 0) and all(np.diff(arrivals) > 0)
    ok = support and rel < 0.02 and abs(rate - 0.3) <= 0.01 and longest <= cfg.M and monotone_seq
    assert record("5 channel statistics", ok,
                  f"delays in support: {support}, mean rel. error {rel:.2%}; "
                  f"dropout rate {rate:.4f}; longest loss run {longest} (M={cfg.M}); "
                  f"delivered seqs strictly monotone: {monotone_seq}")


def test_6_gain_schedule():
    design = PidDesign()
    got = {t: schedule_gains(t, design) for t in (0.0, 0.04, 0.08)}
    want = {0.0: (12.0, 0.01), 0.04: (10.0, 0.03), 0.08: (8.0, 0.05)}
    ok = all((g.Kpd_tau, g.Td_tau) == want[t] for t, g in got.items())
    assert record("6 gain schedule", ok,
                  ", ".join(f"tau={t} -> ({g.Kpd_tau:g}, {g.Td_tau:g})" for t, g in got.items()))


def test_7_determinism(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ["run", "--scenario", "paper_sec4", "--seed", "7"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert cli.main(["run", "--manifest", str(a / "manifest.json"), "--out", str(c)]) == 0
    files = sorted(p.name for p in a.glob("trace_*.csv"))
    same = all((a / f).read_bytes() == (b / f).read_bytes() == (c / f).read_bytes()
               for f in files)
    assert record("7 determinism", same and len(files) == 4,
                  f"{len(files)} trace CSVs byte-identical across two runs and a manifest replay")


def test_8_degenerate_channel():
    cfg = scenario("nominal")
    tr = run_comparison(cfg)
    nom = tr["nominal"]
    same = {k: bool(np.array_equal(t.output, nom.output) and
                    np.array_equal(t.u_applied, nom.u_applied)) for k, t in tr.items()}
    assert record("8 degenerate channel collapse", all(same.values()),
                  "bitwise equal to nominal: " + ", ".join(f"{k}={v}" for k, v in same.items()))


def test_experiment_like_ordering():
    cfg = scenario("experiment_like")
    rows = []
    for s in SEEDS:
        rep = metrics.comparison_report(run_comparison(replace(cfg, seed=s)))
        rows.append((rep.rows["di_p"].J_E, rep.rows["dd_p"].J_E))
    per_seed = [di > dd > 0 and di < 100 for di, dd in rows]
    di, dd = np.mean(rows, axis=0)
    assert record("experiment-like ordering", all(per_seed),
                  f"J1(DI-P) > J1(DD-P) > 0 and J1(DI-P) < 100 on {sum(per_seed)}/{len(rows)} "
                  f"seeds; mean J1 DI-P {di:.2f}%, DD-P {dd:.2f}%")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
