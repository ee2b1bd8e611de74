"""Exact density-matrix simulation in a block-compressed representation.

Native gates are block diagonal (identity off the qubit pair) and every
noise jump is ``|d><s|``.  Starting from a diagonal initial state, the only
non-zero single-site blocks are therefore the 2x2 qubit block and the three
diagonal leak/lost populations.  Each site is stored as seven "superlevels"

    (0,0) (0,1) (1,0) (1,1) (l0,l0) (l1,l1) (L,L)

and an ``n``-site register as a real-or-complex tensor of shape ``(7,)*n``.
That is exact, and small enough for six sites.  :func:`to_density_matrix`
scatters the tensor back into the dense ``5**n`` matrix for small registers.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from c4sim import noise as nm
from c4sim.circuits import CZGate, GlobalRotation, LocalZ, NativeCircuit, Relabel, resolve_virtual_z
from c4sim.sim.states import DIM, DensityMatrix, KrausChannel, SimulationError, lift_qubit_operator

MAX_SITES = 6
SUPER = 7
# (ket, bra) level pair per superlevel, and its position in a row-major 5x5 vec
PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (3, 3), (4, 4))
_FLAT = np.array([a * DIM + b for a, b in PAIRS])
_QQ = np.array([[1, 1, 1, 1, 0, 0, 0]], dtype=bool)


def superop(ch: KrausChannel) -> np.ndarray:
    """7x7 restriction of the Liouville superoperator of a 5-level channel."""
    s = sum(np.kron(k, k.conj()) for k in ch.operators)
    mask = np.ones(DIM * DIM, dtype=bool)
    mask[_FLAT] = False
    if np.max(np.abs(s[np.ix_(mask, _FLAT)]), initial=0.0) > 1e-12:
        raise SimulationError("channel creates coherences outside the qubit block")
    return s[np.ix_(_FLAT, _FLAT)]


def unitary_superop(u2: np.ndarray) -> np.ndarray:
    return superop(KrausChannel.unitary(lift_qubit_operator(u2)))


@lru_cache(maxsize=64)
def _noise_superops(params: nm.NoiseParams) -> dict:
    rz_jump = superop(nm.jump_channel(params.matrix("rz_transition_matrix")))
    cz_site = superop(nm.channel_for_cz(params))
    return {"rz_jump": rz_jump, "cz_site": cz_site}


def _apply_site(t: np.ndarray, op: np.ndarray, site: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, t, axes=([1], [site])), 0, site)


def _cz_sign(n: int, a: int, b: int) -> np.ndarray:
    # ket bits are 1 for superlevels 2,3; bra bits for 1,3
    ket1 = np.array([0, 0, 1, 1, 0, 0, 0], dtype=bool)
    bra1 = np.array([0, 1, 0, 1, 0, 0, 0], dtype=bool)
    shape_a = [1] * n
    shape_b = [1] * n
    shape_a[a] = SUPER
    shape_b[b] = SUPER
    ka, kb = ket1.reshape(shape_a), ket1.reshape(shape_b)
    ba, bb = bra1.reshape(shape_a), bra1.reshape(shape_b)
    flip = (ka & kb) ^ (ba & bb)
    return np.where(flip, -1.0, 1.0)


def initial_tensor(n_sites: int, params: nm.NoiseParams) -> np.ndarray:
    pops = nm.prep_populations(params)
    site = np.zeros(SUPER, dtype=complex)
    site[0], site[3], site[4], site[5], site[6] = pops
    pulse = unitary_superop(nm.noisy_gr(math.pi, 0.0, params))
    site = pulse @ site
    t = np.ones((), dtype=complex)
    for _ in range(n_sites):
        t = np.multiply.outer(t, site)
    return t


def evolve(circuit: NativeCircuit, noise: nm.NoiseParams | None = None) -> np.ndarray:
    """Pre-readout register state as a ``(7,)*n`` superlevel tensor."""
    n = circuit.n_sites
    if n > MAX_SITES:
        raise SimulationError(f"exact backend handles at most {MAX_SITES} sites, got {n}")
    p = nm.resolve(noise)
    sops = _noise_superops(p)
    t = initial_tensor(n, p)
    for g in resolve_virtual_z(circuit).gates:
        if isinstance(g, GlobalRotation):
            op = unitary_superop(nm.noisy_gr(g.theta, g.phi, p))
            for s in range(n):
                t = _apply_site(t, op, s)
        elif isinstance(g, LocalZ):
            op = sops["rz_jump"] @ unitary_superop(nm.rz_matrix((1 + p.rz_relative_overrotation) * g.theta))
            t = _apply_site(t, op, g.site)
        elif isinstance(g, CZGate):
            t = t * _cz_sign(n, g.site_a, g.site_b)
            t = _apply_site(t, sops["cz_site"], g.site_a)
            t = _apply_site(t, sops["cz_site"], g.site_b)
        elif isinstance(g, Relabel):
            t = np.transpose(t, g.perm)
    return t


def readout_matrix(eps0: float, eps1: float) -> np.ndarray:
    """3x7 map from superlevel populations to dark / bright / lost."""
    return np.array(
        [
            [1 - eps0, 0, 0, eps1, 1 - eps0, eps1, 0],
            [eps0, 0, 0, 1 - eps1, eps0, 1 - eps1, 0],
            [0, 0, 0, 0, 0, 0, 1],
        ]
    )


def readout(t: np.ndarray, eps0: float, eps1: float) -> np.ndarray:
    r = readout_matrix(eps0, eps1)
    out = t.real
    for site in range(t.ndim):
        out = _apply_site(out, r, site)
    return np.clip(out, 0.0, None)


def exact_distribution(circuit: NativeCircuit, noise: nm.NoiseParams | None = None) -> np.ndarray:
    """Outcome probabilities, shape ``(3,)*n``, indexed dark=0, bright=1, lost=2."""
    p = nm.resolve(noise)
    probs = readout(evolve(circuit, p), p.meas_eps0, p.meas_eps1)
    return probs / probs.sum()


def to_density_matrix(t: np.ndarray) -> DensityMatrix:
    """Scatter a superlevel tensor into the dense ``5**n`` density matrix."""
    n = t.ndim
    if n > 5:
        raise SimulationError("dense density matrices are limited to 5 sites")
    ket = np.zeros(1, dtype=np.int64)
    bra = np.zeros(1, dtype=np.int64)
    ka = np.array([a for a, _ in PAIRS])
    kb = np.array([b for _, b in PAIRS])
    for _ in range(n):
        ket = (ket[:, None] * DIM + ka[None, :]).reshape(-1)
        bra = (bra[:, None] * DIM + kb[None, :]).reshape(-1)
    rho = np.zeros((DIM**n, DIM**n), dtype=complex)
    rho[ket, bra] = t.reshape(-1)
    return DensityMatrix(n, rho)


def exact_density(circuit: NativeCircuit, noise: nm.NoiseParams | None = None) -> DensityMatrix:
    """Dense pre-readout density matrix (at most 5 sites)."""
    return to_density_matrix(evolve(circuit, noise))


def qubit_density(t: np.ndarray, sites) -> np.ndarray:
    """Unnormalised ``2**k`` qubit block on ``sites``; other sites traced out.

    Tracing keeps every superlevel population of the discarded sites (qubit
    diagonal and leak/lost levels).
    """
    n = t.ndim
    sites = list(sites)
    rest = [s for s in range(n) if s not in sites]
    trace_vec = np.array([1, 0, 0, 1, 1, 1, 1], dtype=complex)
    red = np.transpose(t, sites + rest)
    for _ in rest:
        red = np.tensordot(red, trace_vec, axes=([red.ndim - 1], [0]))
    red = red[(slice(0, 4),) * len(sites)]  # keep qubit superlevels only
    k = len(sites)
    red = red.reshape((2, 2) * k)
    # axes are (ket0, bra0, ket1, bra1, ...) -> (ket..., bra...)
    red = np.transpose(red, [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)])
    return red.reshape(2**k, 2**k)


# leaked atoms folded onto the qubit level they read as; lost atoms dropped
_DETECTED = np.zeros((SUPER, 4))
_DETECTED[[0, 1, 2, 3], [0, 1, 2, 3]] = 1
_DETECTED[4, 0] = 1
_DETECTED[5, 3] = 1


def detected_qubit_density(t: np.ndarray, sites) -> np.ndarray:
    """Qubit state on ``sites`` as terminal detection sees it, unnormalised.

    A ``leak0`` population counts as ``|0><0|`` and ``leak1`` as ``|1><1|``;
    shots with a lost atom on ``sites`` are dropped.  Other sites are traced.
    """
    n = t.ndim
    sites = list(sites)
    rest = [s for s in range(n) if s not in sites]
    trace_vec = np.array([1, 0, 0, 1, 1, 1, 1], dtype=complex)
    red = np.transpose(t, sites + rest)
    for _ in rest:
        red = np.tensordot(red, trace_vec, axes=([red.ndim - 1], [0]))
    for _ in sites:
        red = np.tensordot(red, _DETECTED, axes=([0], [0]))
    k = len(sites)
    red = red.reshape((2, 2) * k)
    red = np.transpose(red, [2 * i for i in range(k)] + [2 * i + 1 for i in range(k)])
    return red.reshape(2**k, 2**k)
