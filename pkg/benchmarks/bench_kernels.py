"""Compare the numba and pure-numpy window-sampling kernels.

    python3 benchmarks/bench_kernels.py [--windows N] [--repeat R]

Both paths run in this process: the numpy kernel is called directly, so no
environment flag is needed. Reports per-window time and whether the sampled
state indices agree.
"""
import argparse
import time

import numpy as np

from pixelveil import _accel, kernels
from pixelveil.image import sample_image
from pixelveil.metrics import DEFAULT_PARAMS
from pixelveil.pixel import PixelMechanismConfig, exponential_obfuscate


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--windows", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--eps", type=float, default=50.0)
    args = ap.parse_args(argv)

    tab = kernels.state_table(3, 4)
    rng = np.random.default_rng(0)
    origs = rng.uniform(0, 255, (args.windows, 9))
    u = rng.random(args.windows)
    c1, c2 = DEFAULT_PARAMS.c1, DEFAULT_PARAMS.c2
    call = (origs, tab.values, tab.means, tab.variances, c1, c2, args.eps, u)

    print(f"states per window: {tab.size}, windows: {args.windows}, numba available: {_accel.HAS_NUMBA}")
    t_np, picks_np = best_of(lambda: kernels.sample_windows_numpy(*call), args.repeat)
    print(f"numpy           {1e3 * t_np / args.windows:8.2f} ms/window")
    if not _accel.HAS_NUMBA:
        return
    kernels.sample_windows_numba(*call, parallel=False)  # compile / load cache
    kernels.sample_windows_numba(*call, parallel=True)
    t_ser, picks_ser = best_of(lambda: kernels.sample_windows_numba(*call, parallel=False), args.repeat)
    t_par, picks_par = best_of(lambda: kernels.sample_windows_numba(*call, parallel=True), args.repeat)
    print(f"numba serial    {1e3 * t_ser / args.windows:8.2f} ms/window  ({t_np / t_ser:.1f}x)")
    print(f"numba parallel  {1e3 * t_par / args.windows:8.2f} ms/window  ({t_np / t_par:.1f}x, {_accel.set_threads()} threads)")
    print(f"picks identical: numpy/serial {np.array_equal(picks_np, picks_ser)}, serial/parallel {np.array_equal(picks_ser, picks_par)}")

    img = sample_image()
    cfg = PixelMechanismConfig(epsilon=1e4, seed=1)
    t_img, _ = best_of(lambda: exponential_obfuscate(img, cfg), 1)
    print(f"64x64 exponential obfuscation (b=1, {img.width // 3 * (img.height // 3)} windows): {t_img:.2f} s")


if __name__ == "__main__":
    main()
