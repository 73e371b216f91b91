"""Compare the compiled (FFTW) and pure-Python SSFM kernels.

Usage: python benchmarks/bench_ssfm.py [--samples 262144] [--steps 16] [--repeat 3]
"""

import argparse
import math
import time

import numpy as np

from psalink.config import load_config
from psalink.core import SimulationGrid
from psalink.modulation import synthesize_link_input
from psalink.propagation import StepConfig, available_backends, ssfm_propagate


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=2**18)
    ap.add_argument("--steps", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = load_config()
    base = cfg.grid()
    grid = SimulationGrid(args.samples, base.df)
    env = synthesize_link_input(cfg.plan.with_(theta=1.0), grid)
    steps = StepConfig(args.steps)

    print(f"grid {grid.n_samples} samples, {args.steps} steps, best of {args.repeat}")
    results = {}
    for name in available_backends():
        ssfm_propagate(env, cfg.fiber, StepConfig(1), backend=name)  # warm-up (FFTW plans)
        t, out = best_time(lambda: ssfm_propagate(env, cfg.fiber, steps, backend=name), args.repeat)
        results[name] = (t, out)
        print(f"{name:>9}: {t * 1e3:9.1f} ms/propagation  {t / args.steps * 1e3:7.2f} ms/step")
    if len(results) == 2:
        (tc, a), (tp, b) = results["compiled"], results["python"]
        diff = float(np.max(np.abs(a.samples - b.samples)) / np.max(np.abs(a.samples)))
        print(f"speed-up {tp / tc:.2f}x, max relative difference {diff:.1e}")
        if not math.isfinite(diff) or diff > 1e-10:
            raise SystemExit("backends disagree")


if __name__ == "__main__":
    main()
