"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once per backend to warm up (numba compiles on first call),
then the best of ``--repeat`` runs is reported with the max deviation.
"""
import argparse
import time

import numpy as np

from spikering import _accel, kernels
from spikering.groundstate import psi_and_derivative, solve_ground_state


def best_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(np.asarray(o)) for o in out])
    return np.ravel(np.asarray(out))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    prof = solve_ground_state()
    table = prof.table()
    rng = np.random.default_rng(0)
    r = rng.uniform(0, 60, 200_000)
    px, py = rng.uniform(-20, 20, (2, 16))
    gx, gy = rng.uniform(-40, 40, (2, 100_000))
    sig = rng.standard_normal(400)
    cases = {
        "radial_eval (2e5 radii)": lambda: kernels.radial_eval(r, *table),
        "psi quadrature (s = 14)": lambda: psi_and_derivative(prof, 14.0),
        "spike_field (16 spikes x 1e5 pts)": lambda: kernels.spike_field(px, py, gx, gy, *table),
        "dft_direct (K = 400)": lambda: kernels.dft_direct(sig),
    }
    print(f"{'kernel':36s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for name, fn in cases.items():
        prev = _accel.set_backend("numba")
        t_nb, out_nb = best_time(fn, args.repeat)
        _accel.set_backend("numpy")
        t_np, out_np = best_time(fn, args.repeat)
        _accel.set_backend(prev)
        diff = np.max(np.abs(flat(out_nb) - flat(out_np)))
        print(f"{name:36s} {1e3 * t_nb:11.2f} {1e3 * t_np:11.2f} {t_np / t_nb:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
