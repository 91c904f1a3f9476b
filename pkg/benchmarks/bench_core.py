"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_core.py [--repeat 5]

Times the plant tick loop on a long input, repeated prediction cascades, and a
full four-variant comparison with each backend swapped in.
"""
import argparse
import timeit

import numpy as np

from dualrate_ncs import core
from dualrate_ncs.controllers import PidDesign
from dualrate_ncs.engine import ScenarioConfig, run_comparison
from dualrate_ncs.plant import ContinuousPlant, discretize_zoh


def bench_ticks(mod, n=200_000):
    coef = np.array(discretize_zoh(ContinuousPlant(), 0.01).coefficients())
    u = np.sin(np.arange(n) * 1e-3)
    y, ua = np.empty(n), np.empty(n)
    return lambda: mod.run_ticks(coef, 0.0, 0.0, u, 1.0, 0.06, True, y, ua)


def bench_cascade(mod, calls=2_000, H=4):
    coef = np.array(discretize_zoh(ContinuousPlant(), 0.01).coefficients())
    refs = np.full(H + 1, 0.04)
    bufs = [np.empty(H), np.empty(2 * H), np.empty(H), np.empty(H)]
    pi_coef = PidDesign().pi_coef

    def go():
        for _ in range(calls):
            mod.cascade(True, H, 2, 10, coef, 0.01, 0.0, 0.3, 0.01, 0.2, 0.1, refs, 1.0,
                        pi_coef, 0.1, 10.0, 0.03, 4, 7.5, 0.055, 9, *bufs)
    return go


def bench_run(mod):
    cfg = ScenarioConfig()

    def go():
        saved = core.run_ticks, core.cascade
        core.run_ticks, core.cascade = mod.run_ticks, mod.cascade
        try:
            run_comparison(cfg)
        finally:
            core.run_ticks, core.cascade = saved
    return go


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    found = core.backends()
    cases = {"ticks (2e5 steps)": bench_ticks, "cascade (2000 calls, H=4)": bench_cascade,
             "comparison run (4 variants, 30 s)": bench_run}
    print(f"{'case':<36}" + "".join(f"{b:>14}" for b in found) + "   speedup")
    for name, make in cases.items():
        best = {}
        for b, mod in found.items():
            fn = make(mod)
            fn()
            best[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        speed = (f"{best['python'] / best['compiled']:8.1f}x" if "compiled" in best else "     n/a")
        print(f"{name:<36}" + "".join(f"{best[b] * 1e3:>11.2f} ms" for b in found) + speed)


if __name__ == "__main__":
    main()
