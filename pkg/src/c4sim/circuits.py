"""Native-gate circuits and lowering of logical [[4,2,2]] programs.

The native gateset is a global rotation ``GR(theta, phi)`` that acts on
every site, site-local ``RZ``, ``CZ``, free site relabelling, and a virtual
global Z that flips the sign of every later ``GR``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

PI = math.pi
HALF = math.pi / 2
QUARTER = math.pi / 4


class LogicalGateLabel(str, enum.Enum):
    XI = "XI"
    IX = "IX"
    ZI = "ZI"
    IZ = "IZ"
    HH = "HH"
    CZ = "CZ"
    CX = "CX"
    XC = "XC"


class PrepKind(str, enum.Enum):
    PREP_00 = "PREP_00"
    PREP_0PLUS = "PREP_0PLUS"
    PREP_BELL = "PREP_BELL"

    @classmethod
    def parse(cls, text: str) -> "PrepKind":
        key = text.strip().upper().replace("+", "PLUS")
        if not key.startswith("PREP_"):
            key = "PREP_" + key
        return cls(key)

    @property
    def short(self) -> str:
        return {"PREP_00": "00", "PREP_0PLUS": "0+", "PREP_BELL": "BELL"}[self.value]


ALPHABET = tuple(LogicalGateLabel)


# ------------------------------------------------------------------ gates


@dataclass(frozen=True)
class GlobalRotation:
    theta: float
    phi: float


@dataclass(frozen=True)
class LocalZ:
    site: int
    theta: float


@dataclass(frozen=True)
class CZGate:
    site_a: int
    site_b: int


@dataclass(frozen=True)
class Relabel:
    """After this gate, site ``i`` refers to the atom previously at ``perm[i]``."""

    perm: tuple

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"relabel {self.perm} is not a permutation")


@dataclass(frozen=True)
class VirtualGlobalZ:
    """Frame change equivalent to Z on every site; flips later GR angles."""


NativeGate = Union[GlobalRotation, LocalZ, CZGate, Relabel, VirtualGlobalZ]


@dataclass(frozen=True)
class LogicalCircuit:
    prep: PrepKind
    layers: tuple = ()
    basis: str = "Z"

    def __post_init__(self) -> None:
        object.__setattr__(self, "prep", PrepKind(self.prep))
        object.__setattr__(self, "layers", tuple(LogicalGateLabel(g) for g in self.layers))
        if self.basis not in ("Z", "X"):
            raise ValueError(f"basis must be Z or X, got {self.basis!r}")


@dataclass(frozen=True)
class NativeCircuit:
    """Ordered native gates on ``n_sites`` atoms, ending in terminal readout.

    ``data_sites`` and ``flag_sites`` are positions in the final frame (after
    every relabel).  ``prep_length`` counts the gates of the state-preparation
    section.
    """

    n_sites: int
    gates: tuple
    data_sites: tuple = ()
    flag_sites: tuple = ()
    prep_length: int = 0
    measured: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            sites: tuple = ()
            if isinstance(g, LocalZ):
                sites = (g.site,)
            elif isinstance(g, CZGate):
                sites = (g.site_a, g.site_b)
                if g.site_a == g.site_b:
                    raise ValueError("CZ on a single site")
            elif isinstance(g, Relabel):
                if len(g.perm) != self.n_sites:
                    raise ValueError("relabel length differs from register size")
            elif not isinstance(g, (GlobalRotation, VirtualGlobalZ)):
                raise TypeError(f"not a native gate: {g!r}")
            if any(not 0 <= s < self.n_sites for s in sites):
                raise ValueError(f"gate {g} addresses a site outside 0..{self.n_sites - 1}")

    def count(self, kind: type) -> int:
        return sum(isinstance(g, kind) for g in self.gates)

    def extend(self, gates: Iterable[NativeGate]) -> "NativeCircuit":
        return _replace(self, gates=self.gates + tuple(gates))


def _replace(c: NativeCircuit, **kw) -> NativeCircuit:
    d = dict(
        n_sites=c.n_sites,
        gates=c.gates,
        data_sites=c.data_sites,
        flag_sites=c.flag_sites,
        prep_length=c.prep_length,
        measured=c.measured,
    )
    d.update(kw)
    return NativeCircuit(**d)


def _wrap(phi: float) -> float:
    """Map an angle into (-pi, pi]."""
    w = math.remainder(phi, 2 * math.pi)
    return math.pi if w == -math.pi else w


def resolve_virtual_z(circuit: NativeCircuit) -> NativeCircuit:
    """Drop virtual-Z markers by shifting the phase of every later GR by pi.

    GR(t, phi + pi) equals GR(-t, phi), so this is the sign flip of the
    rotation angle.  Keeping the programmed angle and moving the axis means
    a noisy pulse over-rotates along its own direction.
    """
    out: list = []
    sign = 1.0
    prep_len = circuit.prep_length
    for i, g in enumerate(circuit.gates):
        if isinstance(g, VirtualGlobalZ):
            sign = -sign
            if i < circuit.prep_length:
                prep_len -= 1
            continue
        if isinstance(g, GlobalRotation) and sign < 0:
            g = GlobalRotation(g.theta, _wrap(g.phi + math.pi))
        out.append(g)
    return _replace(circuit, gates=tuple(out), prep_length=prep_len)


def _same_axis(a: float, b: float) -> int:
    """+1 for equal axes, -1 for opposite axes, 0 otherwise."""
    d = _wrap(a - b)
    if abs(d) < 1e-12:
        return 1
    if abs(abs(d) - math.pi) < 1e-12:
        return -1
    return 0


def _is_diagonal(g) -> bool:
    return isinstance(g, (LocalZ, CZGate))


def merge_rotations(circuit: NativeCircuit) -> NativeCircuit:
    """Peephole pass: fuse neighbouring GR pulses and same-site Z rotations.

    Diagonal gates commute, so a LocalZ is folded into an earlier LocalZ on
    its site anywhere inside the current run of diagonal gates.  Rotations
    that reduce to a multiple of 2 pi are dropped.  Assumes virtual Z has
    been resolved.
    """
    out: list = []
    for g in resolve_virtual_z(circuit).gates:
        if isinstance(g, GlobalRotation) and out and isinstance(out[-1], GlobalRotation):
            sign = _same_axis(g.phi, out[-1].phi)
            if sign:
                prev = out.pop()
                theta = _wrap_turn(prev.theta + sign * g.theta, 4 * math.pi)
                if abs(_wrap(theta)) > 1e-12:
                    out.append(GlobalRotation(theta, prev.phi))
                continue
        if isinstance(g, LocalZ):
            j = len(out) - 1
            while j >= 0 and _is_diagonal(out[j]) and not (isinstance(out[j], LocalZ) and out[j].site == g.site):
                j -= 1
            if j >= 0 and isinstance(out[j], LocalZ) and out[j].site == g.site:
                theta = _wrap(out[j].theta + g.theta)
                if abs(theta) > 1e-12:
                    out[j] = LocalZ(g.site, theta)
                else:
                    del out[j]
                continue
            if abs(_wrap(g.theta)) < 1e-12:
                continue
        out.append(g)
    prep_len = min(circuit.prep_length, len(out))
    return _replace(circuit, gates=tuple(out), prep_length=prep_len)


def _wrap_turn(theta: float, period: float) -> float:
    w = math.remainder(theta, period)
    return period / 2 if w == -period / 2 else w


# --------------------------------------------------------------- templates


def _gr(theta: float, phi: float) -> GlobalRotation:
    return GlobalRotation(theta, phi)


def _rz(sites: Iterable[int], theta: float) -> list:
    return [LocalZ(s, theta) for s in sites]


def x_sandwich(sites: Sequence[int]) -> list:
    """Bit flip on ``sites``; idle sites see two cancelling pulses."""
    return [_gr(-HALF, HALF), *_rz(sites, PI), _gr(HALF, HALF)]


def h_sandwich(sites: Sequence[int]) -> list:
    """Hadamard on ``sites``; idle sites see two cancelling pulses."""
    return [_gr(-QUARTER, HALF), *_rz(sites, PI), _gr(QUARTER, HALF)]


def rx_sandwich(site: int, angle: float) -> list:
    """RX(angle) on one site."""
    return [_gr(-HALF, HALF), LocalZ(site, angle), _gr(HALF, HALF)]


ENCODED_PREP = {
    PrepKind.PREP_00: [
        _gr(HALF, HALF),
        CZGate(1, 2),
        CZGate(0, 1),
        LocalZ(0, -HALF),
        LocalZ(3, HALF),
        _gr(HALF, HALF),
        CZGate(2, 3),
        LocalZ(1, -HALF),
        LocalZ(4, -HALF),
        _gr(HALF, PI),
        CZGate(0, 4),
        CZGate(3, 4),
        _gr(HALF, HALF),
        LocalZ(2, HALF),
        LocalZ(4, HALF),
        _gr(-HALF, HALF),
    ],
    PrepKind.PREP_0PLUS: [
        _gr(HALF, HALF),
        CZGate(0, 1),
        CZGate(2, 3),
        _gr(HALF, 0.0),
        LocalZ(0, HALF),
        LocalZ(2, HALF),
        _gr(HALF, -HALF),
    ],
    PrepKind.PREP_BELL: [
        _gr(HALF, HALF),
        CZGate(0, 3),
        CZGate(1, 2),
        _gr(HALF, 0.0),
        LocalZ(0, HALF),
        LocalZ(1, HALF),
        _gr(HALF, -HALF),
    ],
}


def _with_flag(perm: Sequence[int], n_sites: int) -> tuple:
    return tuple(perm) + tuple(range(len(perm), n_sites))


def encoded_gate_template(label: LogicalGateLabel, n_sites: int, flagged: bool) -> list:
    """Native sequence of one transversal logical gate on the 4-site block."""
    label = LogicalGateLabel(label)
    if label is LogicalGateLabel.XI:
        return x_sandwich((0, 2))
    if label is LogicalGateLabel.IX:
        return x_sandwich((0, 1))
    if label is LogicalGateLabel.ZI:
        return _rz((0, 1), PI)
    if label is LogicalGateLabel.IZ:
        return _rz((0, 2), PI)
    if label is LogicalGateLabel.CZ:
        return [LocalZ(0, HALF), LocalZ(1, -HALF), LocalZ(2, -HALF), LocalZ(3, HALF)]
    if label is LogicalGateLabel.CX:
        return [Relabel(_with_flag((1, 0, 2, 3), n_sites))]
    if label is LogicalGateLabel.XC:
        return [Relabel(_with_flag((2, 1, 0, 3), n_sites))]
    # HH: transversal H up to a swap of sites 1 and 2
    swap = Relabel(_with_flag((0, 2, 1, 3), n_sites))
    if flagged:
        flags = range(4, n_sites)
        return [_gr(-QUARTER, HALF), *_rz(flags, PI), _gr(-QUARTER, HALF), VirtualGlobalZ(), swap]
    return [_gr(HALF, -HALF), VirtualGlobalZ(), swap]


def x_readout(n_sites: int, keep: Sequence[int] = ()) -> list:
    """Rotate every site into the X basis except ``keep``, which stays put."""
    if not keep:
        return [_gr(-HALF, HALF)]
    return [_gr(-QUARTER, HALF), *_rz(keep, PI), _gr(-QUARTER, HALF)]


def compile_encoded(lc: LogicalCircuit) -> NativeCircuit:
    """Lower a logical circuit onto the 4-site code block (plus flag for PREP_00)."""
    flagged = lc.prep is PrepKind.PREP_00
    n = 5 if flagged else 4
    gates = list(ENCODED_PREP[lc.prep])
    prep_len = len(gates)
    for label in lc.layers:
        gates += encoded_gate_template(label, n, flagged)
    if lc.basis == "X":
        gates += x_readout(n, keep=tuple(range(4, n)))
    return NativeCircuit(n, tuple(gates), (0, 1, 2, 3), tuple(range(4, n)), prep_len)


# -------------------------------------------------------------- unencoded


def unencoded_gate_template(label: LogicalGateLabel) -> list:
    """Two-site native sequence of one logical gate; site 0 is q0."""
    label = LogicalGateLabel(label)
    if label is LogicalGateLabel.XI:
        return x_sandwich((0,))
    if label is LogicalGateLabel.IX:
        return x_sandwich((1,))
    if label is LogicalGateLabel.ZI:
        return [LocalZ(0, PI)]
    if label is LogicalGateLabel.IZ:
        return [LocalZ(1, PI)]
    if label is LogicalGateLabel.HH:
        return [_gr(HALF, -HALF), VirtualGlobalZ()]
    if label is LogicalGateLabel.CZ:
        return [CZGate(0, 1)]
    target = 1 if label is LogicalGateLabel.CX else 0
    return [*h_sandwich((target,)), CZGate(0, 1), *h_sandwich((target,))]


UNENCODED_PREP = {
    PrepKind.PREP_00: [],
    PrepKind.PREP_0PLUS: h_sandwich((1,)),
    PrepKind.PREP_BELL: [_gr(HALF, HALF), CZGate(0, 1), _gr(HALF, 0.0), LocalZ(0, HALF), _gr(HALF, -HALF)],
}


def compile_unencoded(lc: LogicalCircuit) -> NativeCircuit:
    """Lower a logical circuit onto two bare atoms."""
    gates = list(UNENCODED_PREP[lc.prep])
    prep_len = len(gates)
    for label in lc.layers:
        gates += unencoded_gate_template(label)
    if lc.basis == "X":
        gates += x_readout(2)
    return NativeCircuit(2, tuple(gates), (0, 1), (), prep_len)


# ----------------------------------------------------------- ideal semantics

_H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]])
_Z = np.diag([1, -1])
_I = np.eye(2)

LOGICAL_UNITARIES = {
    LogicalGateLabel.XI: np.kron(_X, _I),
    LogicalGateLabel.IX: np.kron(_I, _X),
    LogicalGateLabel.ZI: np.kron(_Z, _I),
    LogicalGateLabel.IZ: np.kron(_I, _Z),
    LogicalGateLabel.HH: np.kron(_H, _H),
    LogicalGateLabel.CZ: np.diag([1, 1, 1, -1]),
    LogicalGateLabel.CX: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    LogicalGateLabel.XC: np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]]),
}

PREP_VECTORS = {
    PrepKind.PREP_00: np.array([1, 0, 0, 0]),
    PrepKind.PREP_0PLUS: np.array([1, 1, 0, 0]) / math.sqrt(2),
    PrepKind.PREP_BELL: np.array([1, 0, 0, 1]) / math.sqrt(2),
}


def ideal_logical_unitary(layers: Iterable) -> np.ndarray:
    """Product of the layer unitaries in application order (q0 most significant)."""
    u = np.eye(4, dtype=complex)
    for label in layers:
        u = LOGICAL_UNITARIES[LogicalGateLabel(label)] @ u
    return u


def ideal_logical_state(lc: LogicalCircuit) -> np.ndarray:
    return ideal_logical_unitary(lc.layers) @ PREP_VECTORS[lc.prep].astype(complex)


# -------------------------------------------------------------- text format


def dumps(circuit: NativeCircuit) -> str:
    """Line-oriented text form (virtual Z resolved into GR angles)."""
    c = resolve_virtual_z(circuit)
    lines = [f"# sites {c.n_sites}"]
    if c.data_sites:
        lines.append("# data " + " ".join(map(str, c.data_sites)))
    if c.flag_sites:
        lines.append("# flags " + " ".join(map(str, c.flag_sites)))
    for g in c.gates:
        if isinstance(g, GlobalRotation):
            lines.append(f"GR {g.theta:.12g} {g.phi:.12g}")
        elif isinstance(g, LocalZ):
            lines.append(f"RZ {g.site} {g.theta:.12g}")
        elif isinstance(g, CZGate):
            lines.append(f"CZ {g.site_a} {g.site_b}")
        elif isinstance(g, Relabel):
            lines.append("RELABEL " + " ".join(map(str, g.perm)))
    if c.measured:
        lines.append("MEASURE")
    return "\n".join(lines) + "\n"


def loads(text: str) -> NativeCircuit:
    n = None
    data: tuple = ()
    flags: tuple = ()
    gates: list = []
    measured = False
    for raw in text.splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "#":
            if len(parts) >= 2 and parts[1] == "sites":
                n = int(parts[2])
            elif len(parts) >= 2 and parts[1] == "data":
                data = tuple(int(p) for p in parts[2:])
            elif len(parts) >= 2 and parts[1] == "flags":
                flags = tuple(int(p) for p in parts[2:])
            continue
        if measured:
            raise ValueError("gate after MEASURE")
        op, args = parts[0], parts[1:]
        if op == "GR":
            gates.append(GlobalRotation(float(args[0]), float(args[1])))
        elif op == "RZ":
            gates.append(LocalZ(int(args[0]), float(args[1])))
        elif op == "CZ":
            gates.append(CZGate(int(args[0]), int(args[1])))
        elif op == "RELABEL":
            gates.append(Relabel(tuple(int(a) for a in args)))
        elif op == "MEASURE":
            measured = True
        else:
            raise ValueError(f"unknown gate {op!r}")
    if n is None:
        raise ValueError("missing '# sites' header")
    return NativeCircuit(n, tuple(gates), data, flags, 0, measured)
