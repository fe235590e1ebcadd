"""Compare the compiled and pure-Python RK4 kernels.

Usage: python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]

Times one long hold integration of the two-tank Lur'e model per backend,
checks the two agree, and reports the speedup. A full closed-loop run
(600k steps at dt = 1e-5) is timed with whichever backend is active.
"""
import argparse
import time

import numpy as np

from qstc import kernels
from qstc.plant import TwoTank, lqr_gain, lure_from_two_tank


def bench(mod, p, q, steps, repeat):
    bias = p.B @ p.g(q)
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = mod.lure_rk4(p.A, bias, p.xi, p.eta, p.phi.kind, p.phi.params, q, 1e-5, steps)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    A = [[-1.0, 1.0], [1.0, -1.0]]
    B = [[1.0], [0.0]]
    p = lure_from_two_tank(TwoTank(), lqr_gain(A, B), 0.45)
    q = np.array([0.1, -0.2])

    results = {}
    for name, mod in kernels.backends().items():
        t, out = bench(mod, p, q, args.steps, args.repeat)
        results[name] = (t, out)
        print(f"{name:>7}: {t:.4f} s for {args.steps} steps ({t / args.steps * 1e6:.3f} us/step)")
    if "cython" in results:
        diff = np.max(np.abs(results["cython"][1] - results["python"][1]))
        print(f"speedup: {results['python'][0] / results['cython'][0]:.1f}x, max |difference| {diff:.2e}")
    else:
        print("compiled backend not built; only the fallback was timed")

    from qstc.config import ExperimentConfig, bundled_config
    from qstc.simulate import run_log

    cfg = ExperimentConfig.load(bundled_config("two_tank.cfg"))
    cert = cfg.certificate()
    quant, stm, _ = cfg.log_setup(cert)
    t0 = time.perf_counter()
    run_log(cfg.plant(), cert, quant, stm, cfg.x0, cfg.horizon, cfg.dt, cfg.dt_pred)
    print(f"full log-scheme run with backend '{kernels.BACKEND}': {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
