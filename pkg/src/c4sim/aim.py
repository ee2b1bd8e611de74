"""Anderson impurity model at half filling: Hamiltonian, ansatz, circuits, energies.

Qubit ordering for every 2-qubit object here is (q0, q2) with q0 the most
significant bit, which is also the logical-qubit order of the code block.
The reduced Hamiltonian is symmetric under exchanging the two, so energies do
not depend on this choice.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from c4sim import _rng
from c4sim import circuits as cc
from c4sim import code422
from c4sim import noise as nm
from c4sim.gottesman import physical_counts, tvd
from c4sim.sim import exact, trajectory

U_GRID = (1.0, 5.0, 9.0)
V_GRID = (-9.0, -1.0, 7.0)
BASES = ("Z", "X")
ARMS = ("logical", "physical")
TOP, BOTTOM = 4, 5  # ancilla sites of the encoded circuit

_I = np.eye(2)
_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_Z = np.diag([1.0, -1.0])
_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)


class AimError(RuntimeError):
    """Optimizer failure or an empty post-selected sample."""


@dataclass(frozen=True)
class SiamParams:
    U: float
    V: float


@dataclass(frozen=True)
class AnsatzAngles:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", float(self.alpha) % (2 * math.pi))
        object.__setattr__(self, "beta", float(self.beta) % (2 * math.pi))


@dataclass(frozen=True)
class EnergyResult:
    estimate: float
    exact: float
    arm: str
    sem: float = 0.0
    shots_z: float = 0.0
    shots_x: float = 0.0
    retained_z: float = 1.0
    retained_x: float = 1.0

    @property
    def relative_error(self) -> float:
        return abs(self.estimate - self.exact) / abs(self.exact)


def grid() -> list:
    return [SiamParams(u, v) for u in U_GRID for v in V_GRID]


# ------------------------------------------------------------ Hamiltonians


def _kron(*ops) -> np.ndarray:
    out = np.eye(1)
    for o in ops:
        out = np.kron(out, o)
    return out


def bk_hamiltonian(params: SiamParams) -> np.ndarray:
    """Four-qubit Bravyi-Kitaev form, qubit 0 most significant."""
    U, V = params.U, params.V
    zz = _kron(_Z, _I, _Z, _I)
    hop = _kron(_X, _I, _I, _I) - _kron(_X, _Z, _I, _I) - _kron(_I, _Z, _X, _Z) + _kron(_I, _I, _X, _I)
    return U / 4 * (zz - np.eye(16)) + V / 2 * hop


def half_filling_block(h16: np.ndarray) -> np.ndarray:
    """Restriction to qubit 1 set and qubit 3 clear, ordered by (q0, q2)."""
    idx = [(z0 << 3) | (1 << 2) | (z2 << 1) for z0 in (0, 1) for z2 in (0, 1)]
    return h16[np.ix_(idx, idx)]


def h2q_matrix(params: SiamParams) -> np.ndarray:
    U, V = params.U, params.V
    return U * (_kron(_Z, _Z) - np.eye(4)) / 4 + V * (_kron(_X, _I) + _kron(_I, _X))


def exact_ground_energy(params: SiamParams) -> float:
    U, V = params.U, params.V
    return -U / 4 - math.sqrt(U * U / 16 + 4 * V * V)


# ----------------------------------------------------------------- ansatz

_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
_X0 = _kron(_X, _I)
_ZZ = _kron(_Z, _Z)


def ansatz_state(angles: AnsatzAngles | Sequence[float]) -> np.ndarray:
    a, b = (angles.alpha, angles.beta) if isinstance(angles, AnsatzAngles) else angles
    rx = math.cos(a / 2) * np.eye(4) - 1j * math.sin(a / 2) * _X0
    zz = np.exp(-0.5j * b * np.diag(_ZZ))
    return zz * (rx @ _PHI_PLUS)


def ansatz_energy(angles, params: SiamParams) -> float:
    psi = ansatz_state(angles)
    return float(np.real(np.vdot(psi, h2q_matrix(params) @ psi)))


def ansatz_gradient(angles, params: SiamParams) -> np.ndarray:
    """Exact gradient by the parameter-shift rule (both generators are Paulis)."""
    x = np.array(angles if not isinstance(angles, AnsatzAngles) else (angles.alpha, angles.beta), dtype=float)
    g = np.empty(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = math.pi / 2
        g[k] = 0.5 * (ansatz_energy(x + e, params) - ansatz_energy(x - e, params))
    return g


def optimize(params: SiamParams, seed: int = 0, restarts: int = 8, tol: float = 1e-8) -> AnsatzAngles:
    """BFGS from ``restarts`` uniform starting points; raises if none reaches the exact energy."""
    rng = _rng.stream(seed, _rng.KEY_OPTIMIZE)
    target = exact_ground_energy(params)
    best = None
    for x0 in rng.uniform(0, 2 * math.pi, size=(restarts, 2)):
        res = minimize(
            ansatz_energy, x0, args=(params,), jac=ansatz_gradient, method="BFGS", options={"gtol": 1e-12}
        )
        if best is None or res.fun < best.fun:
            best = res
    if best.fun - target > tol:
        raise AimError(f"optimizer stuck at {best.fun:.12g}, exact {target:.12g} for {params}")
    return AnsatzAngles(*best.x)


def ideal_distribution(angles: AnsatzAngles, basis: str) -> np.ndarray:
    psi = ansatz_state(angles)
    if basis == "X":
        psi = _kron(_H, _H) @ psi
    return np.abs(psi) ** 2


# --------------------------------------------------------------- circuits


def _lower(ops: Sequence[tuple]) -> list:
    gates: list = []
    for op in ops:
        kind = op[0]
        if kind == "H":
            gates += cc.h_sandwich(op[1])
        elif kind == "CX":
            _, c, t = op
            gates += [*cc.h_sandwich((t,)), cc.CZGate(c, t), *cc.h_sandwich((t,))]
        elif kind == "RX":
            gates += cc.rx_sandwich(op[1], op[2])
        elif kind == "RZ":
            gates.append(cc.LocalZ(op[1], op[2]))
        else:
            raise ValueError(f"unknown op {kind}")
    return gates


def build_physical(angles: AnsatzAngles, basis: str = "Z") -> cc.NativeCircuit:
    """Bell pair, RX(alpha) on q0, the ZZ(beta) block in the X basis only, then readout."""
    ops = [("RX", 0, angles.alpha)]
    if basis == "X":
        ops += [("CX", 0, 1), ("RZ", 1, angles.beta), ("CX", 0, 1)]
    gates = list(cc.UNENCODED_PREP[cc.PrepKind.PREP_BELL]) + _lower(ops)
    if basis == "X":
        gates += cc.x_readout(2)
    c = cc.NativeCircuit(2, tuple(gates), (0, 1), (), len(cc.UNENCODED_PREP[cc.PrepKind.PREP_BELL]))
    return cc.merge_rotations(c)


def build_encoded(angles: AnsatzAngles, basis: str = "Z") -> cc.NativeCircuit:
    """Code block on sites 0..3, RX ancilla on site 4, ZZ ancilla on site 5 (X basis only).

    The RX gadget copies X0 X2 onto the top ancilla, rotates it and uncopies.
    The ZZ gadget accumulates Z1 Z2 on the bottom ancilla, applies RZ(beta)
    and then adds Z0 Z3, leaving it flipped exactly when ZZZZ is odd.
    """
    n = 6 if basis == "X" else 5
    prep = list(cc.ENCODED_PREP[cc.PrepKind.PREP_BELL])
    ops = [
        ("H", (TOP,)),
        ("CX", TOP, 0),
        ("CX", TOP, 2),
        ("RX", TOP, angles.alpha),
        ("CX", TOP, 0),
        ("CX", TOP, 2),
        ("H", (TOP,)),
    ]
    if basis == "X":
        ops += [("CX", 1, BOTTOM), ("CX", 2, BOTTOM), ("RZ", BOTTOM, angles.beta), ("CX", 0, BOTTOM), ("CX", 3, BOTTOM)]
    gates = prep + _lower(ops)
    flags = tuple(range(4, n))
    if basis == "X":
        gates += cc.x_readout(n, keep=flags)
    c = cc.NativeCircuit(n, tuple(gates), (0, 1, 2, 3), flags, len(prep))
    return cc.merge_rotations(c)


def build(arm: str, angles: AnsatzAngles, basis: str) -> cc.NativeCircuit:
    if arm == "logical":
        return build_encoded(angles, basis)
    if arm == "physical":
        return build_physical(angles, basis)
    raise ValueError(f"unknown arm {arm!r}")


def gadget_windows(circuit: cc.NativeCircuit) -> dict:
    """Ancilla site -> half-open range of FT-sweep locations around its rotation.

    Each gadget touches its ancilla with two entanglers, the rotation, then two
    more.  Faults on the ancilla between the second and third entangler look
    exactly like a shifted angle, so no check can catch them.
    """
    out = {}
    for site in circuit.flag_sites:
        touches = [
            k + 1 for k, g in enumerate(circuit.gates) if isinstance(g, cc.CZGate) and site in (g.site_a, g.site_b)
        ]
        if len(touches) == 4:
            out[site] = (touches[1], touches[2])
    return out


def ft_check_encoded(angles: AnsatzAngles, basis: str) -> tuple:
    """FT sweep of one encoded circuit; returns ``(report, violations outside the gadget windows)``."""
    c = build_encoded(angles, basis)
    report = code422.ft_check_circuit(c, basis, ideal_distribution(angles, basis))
    windows = gadget_windows(c)
    stray = [
        v
        for v in report.violations
        if not (v["site"] in windows and windows[v["site"]][0] <= v["gate_index"] < windows[v["site"]][1])
    ]
    return report, stray


# ------------------------------------------------------------- estimation


def _parity_signs() -> tuple:
    l1 = np.array([1, 1, -1, -1], dtype=float)
    l2 = np.array([1, -1, 1, -1], dtype=float)
    return l1, l2


def estimate_energy(counts_z, counts_x, params: SiamParams, arm: str = "logical") -> EnergyResult:
    """Energy from decoded Z- and X-basis counts over ``00, 01, 10, 11``."""
    cz = np.asarray(counts_z, dtype=float)
    cx = np.asarray(counts_x, dtype=float)
    nz, nx = cz.sum(), cx.sum()
    if nz <= 0 or nx <= 0:
        raise AimError("empty post-selected sample")
    s1, s2 = _parity_signs()
    pz, px = cz / nz, cx / nx
    zz = float(pz @ (s1 * s2))
    x_sum = float(px @ (s1 + s2))
    x_sq = float(px @ ((s1 + s2) ** 2))
    U, V = params.U, params.V
    energy = U * (zz - 1) / 4 + V * x_sum
    var = (U / 4) ** 2 * max(0.0, 1 - zz * zz) / nz + V * V * max(0.0, x_sq - x_sum * x_sum) / nx
    return EnergyResult(energy, exact_ground_energy(params), arm, math.sqrt(var), nz, nx)


def _decoded(table: np.ndarray, circuit: cc.NativeCircuit, arm: str, basis: str):
    if arm == "logical":
        return code422.postselect_table(table, circuit.data_sites, circuit.flag_sites, basis)
    return physical_counts(table)


def circuit_counts(
    arm: str,
    angles: AnsatzAngles,
    basis: str,
    noise: nm.NoiseParams | None,
    shots: int | None = None,
    seed: int = 0,
    backend: str = "auto",
    key: Sequence[int] = (),
):
    """Post-selected counts of one circuit; exact probabilities when ``shots`` is None."""
    c = build(arm, angles, basis)
    if shots is None:
        table = exact.exact_distribution(c, noise)
    else:
        table = trajectory.sample_counts(c, noise, shots, seed, backend, key=key)
    return _decoded(table, c, arm, basis)


@dataclass(frozen=True)
class GridRow:
    params: SiamParams
    angles: AnsatzAngles
    result: EnergyResult


def _point_job(args) -> list:
    params, k, noise, shots, seed, backend = args
    angles = optimize(params, seed)
    rows = []
    for a, arm in enumerate(ARMS):
        tables = {}
        for b, basis in enumerate(BASES):
            tables[basis] = circuit_counts(arm, angles, basis, noise, shots, seed, backend, key=(k, a, b))
        res = estimate_energy(tables["Z"].counts, tables["X"].counts, params, arm)
        n = shots if shots is not None else 0
        res = EnergyResult(
            res.estimate,
            res.exact,
            arm,
            res.sem if shots is not None else 0.0,
            n,
            n,
            tables["Z"].retained_fraction,
            tables["X"].retained_fraction,
        )
        rows.append(GridRow(params, angles, res))
    return rows


def run_grid(
    noise: nm.NoiseParams | None,
    shots_per_circuit: int | None = None,
    seed: int = 0,
    backend: str = "auto",
    workers: int = 1,
) -> tuple:
    """Both arms over the 3x3 grid; returns ``(rows, {arm: geometric-mean relative error})``."""
    jobs = [(p, k, noise, shots_per_circuit, seed, backend) for k, p in enumerate(grid())]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_point_job, jobs))
    else:
        parts = [_point_job(j) for j in jobs]
    rows = [r for part in parts for r in part]
    return rows, summarize(rows)


def geometric_mean(values: Sequence[float], floor: float = 1e-15) -> float:
    v = np.maximum(np.asarray(values, dtype=float), floor)
    return float(np.exp(np.mean(np.log(v))))


def summarize(rows: Sequence[GridRow]) -> dict:
    return {arm: geometric_mean([r.result.relative_error for r in rows if r.result.arm == arm]) for arm in ARMS}


# ------------------------------------------------------------- GR scan


@dataclass(frozen=True)
class ScanRow:
    gr_overrotation: float
    U: float
    V: float
    basis: str
    arm: str
    tvd: float


def circuit_tvd(arm: str, angles: AnsatzAngles, basis: str, noise: nm.NoiseParams | None) -> float:
    ct = circuit_counts(arm, angles, basis, noise)
    return tvd(ct.distribution(), ideal_distribution(angles, basis))


def _scan_job(args) -> list:
    delta, params, angles, noise = args
    base = noise if noise is not None else nm.NoiseParams()
    tuned = nm.scaled(base, {"gr_overrotation": delta})
    return [
        ScanRow(delta, params.U, params.V, basis, arm, circuit_tvd(arm, angles, basis, tuned))
        for basis in BASES
        for arm in ARMS
    ]


def gr_scan(
    deltas: Sequence[float],
    noise: nm.NoiseParams | None = None,
    seed: int = 0,
    workers: int = 1,
) -> list:
    """Exact TVD of every grid circuit in both arms at each GR over-rotation (radians)."""
    points = [(p, optimize(p, seed)) for p in grid()]
    jobs = [(float(d), p, a, noise) for d in deltas for p, a in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_job, jobs))
    else:
        parts = [_scan_job(j) for j in jobs]
    return [r for part in parts for r in part]


def reversed_circuits(rows: Sequence[ScanRow], delta: float) -> list:
    """(U, V, basis) triples whose logical TVD exceeds the physical one at ``delta``."""
    by = {(r.U, r.V, r.basis, r.arm): r.tvd for r in rows if r.gr_overrotation == delta}
    return sorted(
        (u, v, b) for (u, v, b, arm), t in by.items() if arm == "logical" and t > by[(u, v, b, "physical")]
    )
