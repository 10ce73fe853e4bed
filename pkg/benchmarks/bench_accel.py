"""Throughput comparison of the paired-shift-sum backends.

Times the jit-compiled loop (when numba is available), the pure-numpy roll
loop, and the FFT-diagonalized evaluation on single-photon and two-photon
kernels.  Run with IPFE_DISABLE_NUMBA=1 to see the fallback path timing for
the dispatched entry point.

Usage: python3 benchmarks/bench_accel.py [--sizes 32,64,128] [--repeats 5]
"""

import argparse
import time

import numpy as np

from ipfe._accel import (numba_enabled, pair_shift_sum, pair_shift_sum_fft,
                         pair_shift_sum_loop)
from ipfe.grid import FrequencyGrid
from ipfe.spectrum import SpectrumKind, TurbulenceModel, psd_lattice


def time_call(fn, repeats):
    fn()  # warm up (jit compilation, FFT plan)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_case(label, values, axes_i, axes_j, phi, repeats):
    rows = []
    rows.append(("dispatch" + (" (jit)" if numba_enabled() else " (loop)"),
                 time_call(lambda: pair_shift_sum(values, axes_i, axes_j,
                                                  phi, -1), repeats)))
    rows.append(("numpy roll loop",
                 time_call(lambda: pair_shift_sum_loop(values, axes_i,
                                                       axes_j, phi, -1),
                           repeats)))
    rows.append(("fft diagonalized",
                 time_call(lambda: pair_shift_sum_fft(values, axes_i,
                                                      axes_j, phi, -1),
                           repeats)))
    print(f"\n{label}")
    base = rows[0][1]
    for name, t in rows:
        print(f"  {name:24s} {t * 1e3:10.3f} ms   x{base / t:6.2f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="32,64,128",
                        help="comma-separated grid sizes (powers of 2)")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    model = TurbulenceModel(SpectrumKind.VON_KARMAN, 9.2e-15, 1.0)
    rng = np.random.default_rng(0)
    print(f"numba backend active: {numba_enabled()}")

    for n in (int(s) for s in args.sizes.split(",")):
        grid = FrequencyGrid(1, n, 0.25, 1.55e-6)
        phi = psd_lattice(model, grid)
        h = (rng.standard_normal((n, n))
             + 1j * rng.standard_normal((n, n))).astype(np.complex128)
        bench_case(f"single-photon kernel, n = {n}", h, (0,), (1,), phi,
                   args.repeats)

    n = 16
    grid = FrequencyGrid(1, n, 0.25, 1.55e-6)
    phi = psd_lattice(model, grid)
    f = (rng.standard_normal((n,) * 4)
         + 1j * rng.standard_normal((n,) * 4)).astype(np.complex128)
    bench_case(f"two-photon kernel bra-ket pair, n = {n}", f, (0,), (2,),
               phi, args.repeats)


if __name__ == "__main__":
    main()
