"""Benchmark the compiled time-stepping core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [M] [repeats]

Times the three hot kernels on a production-sized problem (default M=1024,
the step count implied by the acceptance configuration) and prints the
per-kernel speedup.  The compiled section is skipped when the extension is
not built.
"""

import sys
import time

import numpy as np
from scipy.interpolate import PchipInterpolator

import lagctrl.kernels._numpy as knp

try:
    import lagctrl.kernels._core as kc
except ImportError:
    kc = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    M = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
    repeats = int(sys.argv[2]) if len(sys.argv) > 2 else 3
    c, gamma, cfl, floor = 1.3, 1.4, 0.5, 0.1
    dx = np.pi / M
    dt = cfl * dx / (c + 0.1)
    steps = int(np.ceil(2.0 / dt))
    dt = 2.0 / steps

    rng = np.random.default_rng(0)
    f = 0.01 * rng.standard_normal((steps, M + 1))
    f[:, 0] = f[:, -1] = 0.0
    g = np.zeros((steps, M))

    u_hist = knp.nonlinear_run(f, dt, dx, c, gamma, cfl, floor)[0]
    x = np.linspace(0.0, np.pi, M + 1)
    d_hist = np.ascontiguousarray(PchipInterpolator(x, u_hist, axis=1).derivative()(x))
    seeds = np.linspace(0.05, 3.05, 64)

    cases = {
        "linear_run": lambda k: k.linear_run(f, g, dt, dx, c, cfl),
        "nonlinear_run": lambda k: k.nonlinear_run(f, dt, dx, c, gamma, cfl, floor),
        "advect_rk4": lambda k: k.advect_rk4(u_hist, d_hist, seeds, dt, dx, 1),
    }

    print(f"M={M}, steps={steps}, repeats={repeats} (best-of timing)")
    print(f"{'kernel':<15} {'python':>10} {'compiled':>10} {'speedup':>9}")
    for name, call in cases.items():
        t_py = best_of(lambda: call(knp), repeats)
        if kc is None:
            print(f"{name:<15} {t_py:>9.3f}s {'n/a':>10} {'n/a':>9}")
            continue
        t_cy = best_of(lambda: call(kc), repeats)
        out_py, out_cy = call(knp), call(kc)
        worst = max(
            float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
            for a, b in zip(out_py, out_cy)
            if isinstance(a, np.ndarray)
        )
        print(f"{name:<15} {t_py:>9.3f}s {t_cy:>9.3f}s {t_py / t_cy:>8.1f}x"
              f"   (max |diff| {worst:.1e})")


if __name__ == "__main__":
    main()
