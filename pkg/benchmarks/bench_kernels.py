"""Compare the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is timed on
both paths (after one warm-up call so compile time is excluded) and the
outputs are checked for agreement.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from zipsim import _kernels as K


def _best(fn, repeat: int) -> float:
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(scale: float):
    rng = np.random.default_rng(0)
    n = int(1500 * scale)
    a, b = rng.normal(size=n), rng.normal(size=n)
    yield "dtw", lambda u: K.dtw_raw(a, b, use_numba=u)

    phi = np.array([[0.99, 0.004], [0.001, 0.998]])
    gamma = np.eye(2) * 0.5
    u = rng.normal(size=(int(36000 * scale), 2))
    x0 = np.array([420.0, 455.0])
    yield "lti_run", lambda use: K.lti_run(phi, gamma, u, x0, use_numba=use)

    x = rng.normal(size=int(44100 * 60 * scale)).astype(np.float32)
    yield "one_pole", lambda use: K.one_pole_lowpass(x.copy(), 2000.0, 44100.0, use_numba=use)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not K.NUMBA_AVAILABLE:
        print("numba unavailable (or ZIPSIM_DISABLE_NUMBA set): only the numpy path is timed")
    print(f"{'kernel':10s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speed-up':>9s}  max|diff|")
    for name, run in cases(args.scale):
        t_np = _best(lambda: run(False), args.repeat)
        if K.NUMBA_AVAILABLE:
            t_nb = _best(lambda: run(True), args.repeat)
            diff = float(np.max(np.abs(np.asarray(run(True)) - np.asarray(run(False)))))
            print(f"{name:10s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x  {diff:.2e}")
        else:
            print(f"{name:10s} {'-':>10s} {t_np:10.4f} {'-':>9s}")


if __name__ == "__main__":
    main()
