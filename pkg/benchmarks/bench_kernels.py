"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. Covers the three hot paths:
radial profile evaluation, radiation-intensity maps, and the free-decay
master-equation right-hand side, plus the Jacobi eigensolver against LAPACK.
"""

import time

import numpy as np

from purcell_lab import _kernels as k
from purcell_lab._backend import NUMBA_AVAILABLE
from purcell_lab.dipole import coupling_kernels, dipole_frame, linear_chain
from purcell_lab.oracle import lowering_index_maps


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm up (JIT compile, caches)
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def row(name, t_numba, t_numpy):
    speedup = t_numpy / t_numba if t_numba > 0 else float("nan")
    print(f"{name:34s} numba {t_numba * 1e3:9.2f} ms   numpy {t_numpy * 1e3:9.2f} ms"
          f"   speedup {speedup:5.1f}x")


def main():
    if not NUMBA_AVAILABLE:
        print("numba not importable; nothing to compare")
        return

    rng = np.random.default_rng(0)

    kr = rng.uniform(1e-4, 40.0, 2_000_000)
    row("radial profiles (2e6 points)",
        timeit(k.radial_profiles_numba, kr),
        timeit(k.radial_profiles_numpy, kr))

    ens = linear_chain(6, 0.3, gamma=1.0)
    frame = dipole_frame(ens.dipole)
    xs = np.linspace(-4.0, 4.0, 201)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, 2.0)])
    coeffs = np.sin(np.pi * 6 * np.arange(1, 7) / 7.0)
    coherence = np.outer(coeffs, coeffs).astype(complex)
    row("radiation map (201x201, N=6)",
        timeit(k.radiation_intensity_numba, points, ens.positions, frame,
               ens.k_e, np.ascontiguousarray(coherence.real),
               np.ascontiguousarray(coherence.imag), 1e-9),
        timeit(k.radiation_intensity_numpy, points, ens.positions, frame,
               ens.k_e, coherence, 1e-9))

    gamma_m = coupling_kernels(ens).gamma_matrix
    src, dst = lowering_index_maps(6)
    dim = 64
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = np.ascontiguousarray(raw + raw.conj().T)
    h_eff = np.ascontiguousarray(rng.normal(size=(dim, dim))
                                 + 1j * rng.normal(size=(dim, dim)))

    def rhs_many(fn):
        def run():
            for _ in range(200):
                fn(h_eff, gamma_m, src, dst, rho)
        return run

    row("free-decay rhs (N=6, 200 calls)",
        timeit(rhs_many(k.free_decay_rhs_numba)),
        timeit(rhs_many(k.free_decay_rhs_numpy)))

    sym = rng.normal(size=(40, 40))
    sym = sym + sym.T

    def eigh_many(fn):
        def run():
            for _ in range(50):
                fn(sym)
        return run

    row("symmetric eigh (40x40, 50 calls)",
        timeit(eigh_many(k.symmetric_eigh_numba)),
        timeit(eigh_many(k.symmetric_eigh_numpy)))


if __name__ == "__main__":
    main()
