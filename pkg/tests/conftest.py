"""Shared helpers: an independent dense density-matrix reference simulator."""

from __future__ import annotations

import math

import numpy as np
import pytest

from c4sim import noise as nm
from c4sim.circuits import CZGate, GlobalRotation, LocalZ, NativeCircuit, Relabel, resolve_virtual_z
from c4sim.sim import states as st


def dense_reference(circuit: NativeCircuit, noise: nm.NoiseParams | None) -> np.ndarray:
    """Readout table from brute-force ``5**n`` density-matrix evolution."""
    p = nm.resolve(noise)
    n = circuit.n_sites
    rho = nm.prep_state(n, p)
    rz_jump = nm.jump_channel(p.matrix("rz_transition_matrix"))
    cz_site = nm.channel_for_cz(p)
    for g in resolve_virtual_z(circuit).gates:
        if isinstance(g, GlobalRotation):
            u = st.lift_qubit_operator(nm.noisy_gr(g.theta, g.phi, p))
            for s in range(n):
                rho = st.apply_unitary(rho, u, [s])
        elif isinstance(g, LocalZ):
            u = st.lift_qubit_operator(nm.rz_matrix((1 + p.rz_relative_overrotation) * g.theta))
            rho = st.apply_unitary(rho, u, [g.site])
            rho = st.apply_channel(rho, rz_jump, g.site)
        elif isinstance(g, CZGate):
            rho = st.apply_cz(rho, g.site_a, g.site_b)
            rho = st.apply_channel(rho, cz_site, g.site_a)
            rho = st.apply_channel(rho, cz_site, g.site_b)
        elif isinstance(g, Relabel):
            t = rho.data.reshape((st.DIM,) * (2 * n))
            t = np.transpose(t, list(g.perm) + [n + q for q in g.perm])
            rho = st.DensityMatrix(n, t.reshape(st.DIM**n, st.DIM**n))
    return st.measure_terminal(rho, p.meas_eps0, p.meas_eps1)


@pytest.fixture
def default_noise() -> nm.NoiseParams:
    return nm.NoiseParams()


@pytest.fixture
def zero_noise() -> nm.NoiseParams:
    return nm.NoiseParams.zero()


HALF = math.pi / 2
