"""The [[4,2,2]] code: codewords, decoding, post-selection, FT sweeps.

Logical Pauli frame on the four data sites::

    Z1 = Z0 Z1    Z2 = Z0 Z2    X1 = X0 X2    X2 = X0 X1

None of these touch site 3, so together with ``Z3`` and the stabiliser
``XXXX`` they split the even-``ZZZZ`` subspace into a logical factor and a
parity factor.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from c4sim import circuits as cc
from c4sim.circuits import CZGate, GlobalRotation, LocalZ, NativeCircuit, Relabel, resolve_virtual_z
from c4sim.noise import gr_matrix, rz_matrix

LOGICAL_LABELS = ("00", "01", "10", "11")

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"I": _I, "X": _X, "Y": _Y, "Z": _Z}


def pauli_string(spec: str) -> np.ndarray:
    """Kronecker product of single-site Paulis, site 0 first."""
    out = np.ones((1, 1), dtype=complex)
    for ch in spec:
        out = np.kron(out, PAULI[ch])
    return out


XXXX = pauli_string("XXXX")
ZZZZ = pauli_string("ZZZZ")

_CODE_SUPPORT = {
    (0, 0): ("0000", "1111"),
    (0, 1): ("0011", "1100"),
    (1, 0): ("0101", "1010"),
    (1, 1): ("0110", "1001"),
}


def codeword(l1: int, l2: int) -> np.ndarray:
    """Physical 16-dim state of the logical basis state ``|l1 l2>``."""
    v = np.zeros(16, dtype=complex)
    for b in _CODE_SUPPORT[(l1, l2)]:
        v[int(b, 2)] = 1 / math.sqrt(2)
    return v


def encode(logical: np.ndarray) -> np.ndarray:
    """Map a 2-qubit state (q0 most significant) into the code space."""
    logical = np.asarray(logical, dtype=complex)
    return sum(logical[2 * a + b] * codeword(a, b) for a, b in itertools.product((0, 1), repeat=2))


def logical_bell_codeword() -> np.ndarray:
    return encode(np.array([1, 0, 0, 1]) / math.sqrt(2))


# ------------------------------------------------------------------ decoding


class DecodeStatus(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED_PARITY = "rejected_parity"
    REJECTED_FLAG = "rejected_flag"
    REJECTED_LOSS = "rejected_loss"


@dataclass(frozen=True)
class DecodeResult:
    status: DecodeStatus
    logical: tuple | None = None

    @property
    def accepted(self) -> bool:
        return self.status is DecodeStatus.ACCEPTED


def _bits(bits) -> tuple:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    out = tuple(int(b) for b in bits)
    if len(out) != 4 or any(b not in (0, 1) for b in out):
        raise ValueError(f"expected four bits, got {bits!r}")
    return out


def decode_z(bits) -> DecodeResult:
    b = _bits(bits)
    if sum(b) % 2:
        return DecodeResult(DecodeStatus.REJECTED_PARITY)
    return DecodeResult(DecodeStatus.ACCEPTED, (b[0] ^ b[1], b[0] ^ b[2]))


def decode_x(bits) -> DecodeResult:
    b = _bits(bits)
    if sum(b) % 2:
        return DecodeResult(DecodeStatus.REJECTED_PARITY)
    return DecodeResult(DecodeStatus.ACCEPTED, (b[0] ^ b[2], b[0] ^ b[1]))


def decode_shot(outcomes: Sequence[int], data_sites: Sequence[int], flag_sites: Sequence[int], basis: str) -> DecodeResult:
    """Classify one readout (codes 0 dark, 1 bright, 2 lost), in check order."""
    if any(int(o) == 2 for o in outcomes):
        return DecodeResult(DecodeStatus.REJECTED_LOSS)
    if any(int(outcomes[f]) == 1 for f in flag_sites):
        return DecodeResult(DecodeStatus.REJECTED_FLAG)
    bits = [int(outcomes[s]) for s in data_sites]
    return (decode_x if basis == "X" else decode_z)(bits)


@dataclass
class CountsTable:
    """Post-selected logical outcome weights with rejection bookkeeping.

    ``counts`` may hold integers (sampled shots) or probabilities (exact).
    """

    counts: np.ndarray
    total: float
    rejected_loss: float = 0.0
    rejected_flag: float = 0.0
    rejected_parity: float = 0.0
    labels: tuple = LOGICAL_LABELS

    @property
    def kept(self) -> float:
        return float(np.sum(self.counts))

    @property
    def retained_fraction(self) -> float:
        return self.kept / self.total if self.total > 0 else 0.0

    def distribution(self) -> np.ndarray:
        k = self.kept
        if k <= 0:
            raise ValueError("no shots survived post-selection")
        return np.asarray(self.counts, dtype=float) / k


def postselect_table(table: np.ndarray, data_sites, flag_sites, basis: str = "Z") -> CountsTable:
    """Post-select a ``(3,)*n`` readout histogram or probability table."""
    table = np.asarray(table)
    if table.sum() <= 0:
        raise ValueError("empty input")
    out = np.zeros(4)
    rej = {DecodeStatus.REJECTED_LOSS: 0.0, DecodeStatus.REJECTED_FLAG: 0.0, DecodeStatus.REJECTED_PARITY: 0.0}
    for idx in zip(*np.nonzero(table)):
        w = table[idx]
        r = decode_shot(idx, data_sites, flag_sites, basis)
        if r.accepted:
            out[2 * r.logical[0] + r.logical[1]] += w
        else:
            rej[r.status] += w
    return CountsTable(
        out,
        float(table.sum()),
        rej[DecodeStatus.REJECTED_LOSS],
        rej[DecodeStatus.REJECTED_FLAG],
        rej[DecodeStatus.REJECTED_PARITY],
    )


def postselect(records: Iterable, prep: cc.PrepKind, basis: str = "Z") -> tuple:
    """Decode ShotRecords from an encoded run; returns ``(CountsTable, retained_fraction)``."""
    records = list(records)
    if not records:
        raise ValueError("empty input")
    n = records[0].n_sites
    table = np.zeros((3,) * n)
    for r in records:
        table[tuple(int(o) for o in r.outcomes)] += 1
    flags = (4,) if cc.PrepKind(prep) is cc.PrepKind.PREP_00 else tuple(range(4, n))
    ct = postselect_table(table, (0, 1, 2, 3), flags, basis)
    return ct, ct.retained_fraction


# ----------------------------------------------------------- noiseless qubits


def _site_op(u: np.ndarray, site: int, n: int) -> np.ndarray:
    return np.kron(np.kron(np.eye(2**site), u), np.eye(2 ** (n - site - 1)))


def gate_unitary(g, n: int) -> np.ndarray:
    """Ideal ``2**n`` qubit unitary of one resolved native gate."""
    if isinstance(g, GlobalRotation):
        u = gr_matrix(g.theta, g.phi)
        out = np.ones((1, 1), dtype=complex)
        for _ in range(n):
            out = np.kron(out, u)
        return out
    if isinstance(g, LocalZ):
        return _site_op(rz_matrix(g.theta), g.site, n)
    if isinstance(g, CZGate):
        idx = np.arange(2**n)
        both = ((idx >> (n - 1 - g.site_a)) & 1) & ((idx >> (n - 1 - g.site_b)) & 1)
        return np.diag(np.where(both, -1.0, 1.0)).astype(complex)
    if isinstance(g, Relabel):
        m = np.zeros((2**n, 2**n), dtype=complex)
        for i in range(2**n):
            j = 0
            for s in range(n):
                j = j * 2 + ((i >> (n - 1 - g.perm[s])) & 1)
            m[j, i] = 1
        return m
    raise TypeError(f"unsupported gate {g!r}")


def statevector(circuit: NativeCircuit) -> np.ndarray:
    """Noiseless qubit-only final state from ``|0...0>``."""
    n = circuit.n_sites
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for g in resolve_virtual_z(circuit).gates:
        psi = gate_unitary(g, n) @ psi
    return psi


def decode_matrix(n: int, data_sites, flag_sites, basis: str) -> np.ndarray:
    """0/1 matrix mapping ``2**n`` loss-free bitstrings to accepted logical slots."""
    m = np.zeros((4, 2**n))
    for i in range(2**n):
        r = decode_shot([(i >> (n - 1 - s)) & 1 for s in range(n)], data_sites, flag_sites, basis)
        if r.accepted:
            m[2 * r.logical[0] + r.logical[1], i] = 1
    return m


def _decoded_mass(probs: np.ndarray, n: int, data_sites, flag_sites, basis: str) -> np.ndarray:
    return decode_matrix(n, tuple(data_sites), tuple(flag_sites), basis) @ probs


def ideal_decoded(circuit: NativeCircuit, basis: str = "Z") -> np.ndarray:
    """Noiseless post-selected logical distribution of an encoded circuit."""
    probs = np.abs(statevector(circuit)) ** 2
    mass = _decoded_mass(probs, circuit.n_sites, circuit.data_sites, circuit.flag_sites, basis)
    return mass / mass.sum()


# ------------------------------------------------------------------ FT sweep


@dataclass
class FtReport:
    n_locations: int
    n_insertions: int
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(self.violations, indent=2)


FT_TOL = 1e-9


def ft_check_circuit(circuit: NativeCircuit, basis: str = "Z", ideal: np.ndarray | None = None) -> FtReport:
    """Insert every single-site Pauli at every location and look for silent logical errors.

    Location 0 is before the first gate; location ``k`` is after the ``k``-th
    non-relabel gate of the resolved circuit.  A (location, site, Pauli)
    triple is a violation when the accepted branch carries more than
    ``FT_TOL`` probability on logical outcomes beyond what the ideal
    distribution allows.
    """
    c = resolve_virtual_z(circuit)
    n = c.n_sites
    if ideal is None:
        ideal = ideal_decoded(c, basis)
    gates = list(c.gates)
    unitaries = [gate_unitary(g, n) for g in gates]
    # prefix states after each gate and suffix unitaries from each point on
    prefix = [np.zeros(2**n, dtype=complex)]
    prefix[0][0] = 1
    for u in unitaries:
        prefix.append(u @ prefix[-1])
    suffix = [np.eye(2**n, dtype=complex)]
    for u in reversed(unitaries):
        suffix.append(suffix[-1] @ u)
    suffix.reverse()  # suffix[k] applies gates k.. to the end
    points = [0] + [k + 1 for k, g in enumerate(gates) if not isinstance(g, Relabel)]
    paulis = {p: [_site_op(PAULI[p], s, n) for s in range(n)] for p in "XYZ"}
    dec = decode_matrix(n, c.data_sites, c.flag_sites, basis)
    violations = []
    for loc, k in enumerate(points):
        for s in range(n):
            for p in "XYZ":
                final = suffix[k] @ (paulis[p][s] @ prefix[k])
                acc = dec @ (np.abs(final) ** 2)
                wrong = float(np.sum(np.clip(acc - acc.sum() * ideal, 0.0, None)))
                if wrong > FT_TOL:
                    violations.append(
                        {
                            "location_index": loc,
                            "gate_index": k,
                            "site": s,
                            "pauli": p,
                            "accepted_error_probability": wrong,
                        }
                    )
    return FtReport(len(points), len(points) * n * 3, violations)


def ft_check(lc: cc.LogicalCircuit) -> FtReport:
    """Exhaustive single-Pauli sweep of the compiled encoded circuit."""
    return ft_check_circuit(cc.compile_encoded(lc), lc.basis)


# ------------------------------------------------------------ logical states


def _logical_ops() -> dict:
    z1, z2 = pauli_string("ZZII"), pauli_string("ZIZI")
    x1, x2 = pauli_string("XIXI"), pauli_string("XXII")
    y1, y2 = 1j * x1 @ z1, 1j * x2 @ z2
    return {"I": (np.eye(16), np.eye(16)), "X": (x1, x2), "Y": (y1, y2), "Z": (z1, z2)}


_LOGICAL = _logical_ops()


def _project(rho: np.ndarray, stab: np.ndarray) -> np.ndarray:
    p = 0.5 * (np.eye(16) + stab)
    out = p @ rho @ p
    tr = np.trace(out).real
    if tr <= 1e-12:
        raise ValueError("projection onto a zero-probability subspace")
    return out / tr


def logical_density(rho_phys: np.ndarray, project_zzzz: bool = True, xxxx_mode: str = "trace") -> np.ndarray:
    """Two-qubit logical state from a 16x16 physical qubit density matrix.

    ``xxxx_mode='project'`` conditions on ``XXXX=+1``; ``'trace'`` keeps both
    parity sectors and traces the parity factor out.
    """
    rho = np.asarray(rho_phys, dtype=complex)
    if rho.shape != (16, 16):
        raise ValueError("expected a 16x16 density matrix")
    tr = np.trace(rho).real
    if tr <= 1e-12:
        raise ValueError("zero-trace input")
    rho = rho / tr
    if project_zzzz:
        rho = _project(rho, ZZZZ)
    if xxxx_mode == "project":
        rho = _project(rho, XXXX)
    elif xxxx_mode != "trace":
        raise ValueError(f"xxxx_mode must be 'project' or 'trace', got {xxxx_mode!r}")
    out = np.zeros((4, 4), dtype=complex)
    for a, b in itertools.product("IXYZ", repeat=2):
        op = _LOGICAL[a][0] @ _LOGICAL[b][1]
        out += np.trace(op @ rho) * np.kron(PAULI[a], PAULI[b])
    out /= 4
    return 0.5 * (out + out.conj().T)
