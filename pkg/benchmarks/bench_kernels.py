"""Compiled kernel vs pure-Python fallback.

Times one closed-loop RK4 run three ways: the numba kernel, the kernel's
outer loop run as plain Python (``.py_func``; its helpers stay compiled) and
the object-level Python engine. Run with ``RELROCKET_DISABLE_NUMBA=1`` to time
the fully interpreted fallback.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

from relrocket import _kernels as K
from relrocket import NUMBA_ENABLED, RocketParams, StateFeedbackLaw, place_poles
from relrocket.simulation import SimConfig, initial_state, run_closed_loop


def _kernel_args(params, law, n, dt):
    rows = np.zeros((n + 1, K.N_COLS))
    flags = np.zeros(n + 1, dtype=np.bool_)
    state0 = np.array([0.0, 0.0, 1.0, 0.0, params.m0])
    return (state0, law, n, dt, params.kernel_model, params.c, params.vbar, params.m0,
            params.half_exponent, params.m_dry, False, 1e-9, 0, rows, flags)


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    params = RocketParams.natural(m0=1.0, vbar=1.0)
    spec = StateFeedbackLaw(place_poles(params, (-1.0, -1.0)))
    law = spec.law_array()
    dt = 1e-3
    n = args.steps
    kernel_args = _kernel_args(params, law, n, dt)

    results = {}
    if NUMBA_ENABLED:
        start = time.perf_counter()
        K.integrate(*kernel_args)
        results["numba (first call, incl. compile/cache load)"] = time.perf_counter() - start
        results["numba kernel"] = _best(lambda: K.integrate(*kernel_args), args.repeat)
    py_kernel = getattr(K.integrate, "py_func", K.integrate)
    results["kernel loop as Python"] = _best(lambda: py_kernel(*kernel_args), args.repeat)
    config = SimConfig(dt=dt, horizon=n * dt)
    start_state = initial_state(params, p=1.0)
    results["Python engine"] = _best(
        lambda: run_closed_loop(params, start_state, spec, config, engine="python"), args.repeat)

    print(f"{n} RK4 steps, state feedback, best of {args.repeat}")
    for name, seconds in results.items():
        print(f"  {name:48s} {seconds * 1e3:10.2f} ms")
    if "numba kernel" in results:
        speedup = results["kernel loop as Python"] / results["numba kernel"]
        print(f"  speedup of compiled kernel over its Python loop: {speedup:.0f}x")


if __name__ == "__main__":
    main()
