"""Shot sampling from either backend.

Trajectory shots are produced in fixed-size blocks.  Block ``b`` draws its
uniforms from the stream ``(seed, shots-namespace, *key, b)``, so the
records are the same whichever kernel runs them and however many worker
processes share the blocks.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from c4sim import _rng
from c4sim import noise as nm
from c4sim.circuits import NativeCircuit
from c4sim.sim import exact, kernels
from c4sim.sim.program import Program, compile_program
from c4sim.sim.states import ShotRecord, SimulationError

BLOCK = 4096
BACKENDS = ("auto", "exact", "trajectory")


def pick_backend(backend: str, n_sites: int) -> str:
    if backend not in BACKENDS:
        raise SimulationError(f"unknown backend {backend!r}")
    if backend == "auto":
        return "exact" if n_sites <= exact.MAX_SITES else "trajectory"
    if backend == "exact" and n_sites > exact.MAX_SITES:
        raise SimulationError(f"exact backend handles at most {exact.MAX_SITES} sites")
    return backend


def _block(prog: Program, seed: int, key: tuple, b: int, size: int, kernel: str) -> np.ndarray:
    u = _rng.stream(seed, _rng.KEY_SHOTS, *key, b).random((size, prog.n_uniforms))
    fn = kernels.python_kernel if kernel == "numpy" else kernels.run_shots
    return np.asarray(fn(prog, u), dtype=np.int8)


def trajectory_codes(
    circuit: NativeCircuit,
    noise: nm.NoiseParams | None,
    n_shots: int,
    seed: int,
    key: Sequence[int] = (),
    workers: int = 1,
    kernel: str = "auto",
) -> np.ndarray:
    """Readout codes ``(n_shots, n_sites)`` from Monte Carlo trajectories."""
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    prog = compile_program(circuit, noise)
    key = tuple(int(k) for k in key)
    sizes = [min(BLOCK, n_shots - s) for s in range(0, n_shots, BLOCK)]
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_block, prog, seed, key, b, m, kernel) for b, m in enumerate(sizes)]
            parts = [f.result() for f in futs]
    else:
        parts = [_block(prog, seed, key, b, m, kernel) for b, m in enumerate(sizes)]
    return np.concatenate(parts, axis=0)


def codes_to_counts(codes: np.ndarray, n_sites: int) -> np.ndarray:
    flat = np.ravel_multi_index(tuple(codes.T.astype(np.int64)), (3,) * n_sites)
    return np.bincount(flat, minlength=3**n_sites).reshape((3,) * n_sites)


def sample_counts(
    circuit: NativeCircuit,
    noise: nm.NoiseParams | None,
    n_shots: int,
    seed: int,
    backend: str = "auto",
    key: Sequence[int] = (),
    workers: int = 1,
) -> np.ndarray:
    """Histogram of ``n_shots`` readouts, shape ``(3,)*n``."""
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    n = circuit.n_sites
    if pick_backend(backend, n) == "exact":
        p = exact.exact_distribution(circuit, noise).reshape(-1)
        rng = _rng.stream(seed, _rng.KEY_SHOTS, *key)
        return rng.multinomial(n_shots, p / p.sum()).reshape((3,) * n)
    return codes_to_counts(trajectory_codes(circuit, noise, n_shots, seed, key, workers), n)


def sample_shots(
    circuit: NativeCircuit,
    noise: nm.NoiseParams | None,
    n_shots: int,
    seed: int,
    backend: str = "trajectory",
    key: Sequence[int] = (),
    workers: int = 1,
) -> list:
    """I.i.d. :class:`ShotRecord` samples, deterministic in ``seed``."""
    n = circuit.n_sites
    if pick_backend(backend, n) == "exact":
        p = exact.exact_distribution(circuit, noise).reshape(-1)
        rng = _rng.stream(seed, _rng.KEY_SHOTS, *key)
        idx = rng.choice(p.size, size=n_shots, p=p / p.sum())
        return [ShotRecord.from_index(int(i), n) for i in idx]
    codes = trajectory_codes(circuit, noise, n_shots, seed, key, workers)
    from c4sim.sim.states import Readout

    return [ShotRecord(tuple(Readout(int(c)) for c in row)) for row in codes]
