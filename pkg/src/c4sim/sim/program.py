"""Flat opcode programs consumed by the trajectory kernels.

A :class:`Program` is a handful of contiguous arrays so that the compiled
kernel can run without touching Python objects.  Each random decision reads
one pre-drawn uniform; ``n_uniforms`` is the number a single shot consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from c4sim import noise as nm
from c4sim.circuits import CZGate, GlobalRotation, LocalZ, NativeCircuit, Relabel, resolve_virtual_z

OP_PREP = 0
OP_GR = 1
OP_U1 = 2
OP_CZ = 3
OP_DEPHASE = 4
OP_JUMP = 5
OP_RELABEL = 6
OP_MEASURE = 7


@dataclass(frozen=True)
class Program:
    n_sites: int
    codes: np.ndarray  # int32 (n_ops,)
    iargs: np.ndarray  # int32 (n_ops, 2): site / second site / table index
    fargs: np.ndarray  # float64 (n_ops, 2)
    mats: np.ndarray  # complex128 (n_ops, 2, 2)
    jumps: np.ndarray  # float64 (n_tables, 5, 5), column = source
    perms: np.ndarray  # int32 (n_perms, n_sites)
    prep: np.ndarray  # float64 (5,)
    n_uniforms: int


def _uniforms_for(code: int, n: int) -> int:
    return {OP_PREP: n, OP_DEPHASE: 1, OP_JUMP: 1, OP_MEASURE: n + 1}.get(code, 0)


def compile_program(circuit: NativeCircuit, noise: nm.NoiseParams | None = None) -> Program:
    p = nm.resolve(noise)
    n = circuit.n_sites
    rows: list = []
    perms: list = []
    cz_m = p.matrix("cz_transition_matrix")
    rz_m = p.matrix("rz_transition_matrix")
    jumps = [cz_m, rz_m]
    eye = np.eye(2, dtype=complex)

    def add(code, a=0, b=0, f0=0.0, f1=0.0, mat=eye):
        rows.append((code, a, b, f0, f1, mat))

    add(OP_PREP)
    add(OP_GR, mat=nm.noisy_gr(math.pi, 0.0, p))
    for g in resolve_virtual_z(circuit).gates:
        if isinstance(g, GlobalRotation):
            add(OP_GR, mat=nm.noisy_gr(g.theta, g.phi, p))
        elif isinstance(g, LocalZ):
            add(OP_U1, g.site, mat=nm.rz_matrix((1 + p.rz_relative_overrotation) * g.theta))
            if rz_m.any():
                add(OP_JUMP, g.site, 1)
        elif isinstance(g, CZGate):
            add(OP_CZ, g.site_a, g.site_b)
            for s in (g.site_a, g.site_b):
                if p.cz_phase_error > 0:
                    add(OP_DEPHASE, s, f0=p.cz_phase_error)
                if cz_m.any():
                    add(OP_JUMP, s, 0)
        elif isinstance(g, Relabel):
            add(OP_RELABEL, len(perms))
            perms.append(g.perm)
    add(OP_MEASURE, f0=p.meas_eps0, f1=p.meas_eps1)

    codes = np.array([r[0] for r in rows], dtype=np.int32)
    return Program(
        n_sites=n,
        codes=codes,
        iargs=np.array([[r[1], r[2]] for r in rows], dtype=np.int32),
        fargs=np.array([[r[3], r[4]] for r in rows], dtype=np.float64),
        mats=np.ascontiguousarray(np.array([r[5] for r in rows], dtype=np.complex128)),
        jumps=np.ascontiguousarray(np.array(jumps, dtype=np.float64)),
        perms=np.array(perms, dtype=np.int32).reshape(len(perms), n),
        prep=nm.prep_populations(p).astype(np.float64),
        n_uniforms=int(sum(_uniforms_for(int(c), n) for c in codes)),
    )
