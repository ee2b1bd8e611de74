"""Compare the compiled and numpy trajectory kernels on the same uniforms.

    python benchmarks/bench_trajectories.py [--shots N] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from c4sim import aim
from c4sim import circuits as cc
from c4sim import noise as nm
from c4sim import tomography as tm
from c4sim.sim import kernels
from c4sim.sim.program import compile_program


def cases() -> dict:
    corpus = cc.LogicalCircuit(cc.PrepKind.PREP_BELL, ("CX", "HH", "CZ", "XC"))
    return {
        "unencoded 4-layer": cc.compile_unencoded(corpus),
        "encoded 4-layer": cc.compile_encoded(corpus),
        "AIM encoded X": aim.build("logical", aim.AnsatzAngles(0.7, 1.1), "X"),
        "tomo setting XYZY": cc.merge_rotations(tm.default_prep().extend(tm.setting_gates("XYZY"))),
    }


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.compiled_kernel is None:
        print("compiled kernel not built; only the numpy kernel is available")
    noise = nm.NoiseParams()
    print(f"{'circuit':<20} {'sites':>5} {'numpy shots/s':>14} {'cython shots/s':>15} {'speedup':>8}  same")
    for name, circuit in cases().items():
        prog = compile_program(circuit, noise)
        u = np.random.default_rng(0).random((args.shots, prog.n_uniforms))
        t_py = best_of(lambda: kernels.python_kernel(prog, u), args.repeat)
        if kernels.compiled_kernel is None:
            print(f"{name:<20} {circuit.n_sites:>5} {args.shots / t_py:>14.0f} {'-':>15} {'-':>8}  -")
            continue
        t_cy = best_of(lambda: kernels.compiled_kernel(prog, u), args.repeat)
        same = np.array_equal(np.asarray(kernels.python_kernel(prog, u)), np.asarray(kernels.compiled_kernel(prog, u)))
        print(
            f"{name:<20} {circuit.n_sites:>5} {args.shots / t_py:>14.0f} {args.shots / t_cy:>15.0f}"
            f" {t_py / t_cy:>7.1f}x  {'yes' if same else 'NO'}"
        )


if __name__ == "__main__":
    main()
