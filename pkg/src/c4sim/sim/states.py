"""State containers and dense reference operations for five-level atoms.

Every atom is a five-level system ordered ``q0, q1, leak0, leak1, lost``.
Registers of ``n`` atoms therefore live in a ``5**n`` dimensional space,
with site 0 as the most significant digit of a basis index.

The dense routines here are the reference path: simple, slow, and used by
tests and small examples.  Production simulation goes through
:mod:`c4sim.sim.exact` (block-structured exact backend) and
:mod:`c4sim.sim.trajectory` (sampled shots).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DIM = 5


class Level(enum.IntEnum):
    """Per-atom basis levels, in the fixed simulation order."""

    Q0 = 0
    Q1 = 1
    LEAK0 = 2
    LEAK1 = 3
    LOST = 4


# Alias kept for readability at call sites that talk about the basis as a whole.
LevelBasis = Level


class Readout(enum.IntEnum):
    """Terminal readout outcome of a single site."""

    DARK = 0
    BRIGHT = 1
    LOST = 2


class SimulationError(RuntimeError):
    """Raised when a request exceeds what a backend can do."""


def _check_site(site: int, n_sites: int) -> None:
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} sites")


@dataclass
class DensityMatrix:
    """Density matrix of ``n_sites`` five-level atoms."""

    n_sites: int
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=complex)
        dim = DIM**self.n_sites
        if self.data.shape != (dim, dim):
            raise ValueError(f"expected shape {(dim, dim)}, got {self.data.shape}")

    @classmethod
    def from_pure(cls, state: "PureState") -> "DensityMatrix":
        v = state.amplitudes
        return cls(state.n_sites, np.outer(v, v.conj()))

    @classmethod
    def basis(cls, levels: Sequence[int]) -> "DensityMatrix":
        return cls.from_pure(PureState.basis(levels))

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def validate(self, herm_tol: float = 1e-10, trace_tol: float = 1e-10, psd_tol: float = 1e-9) -> None:
        """Raise ``ValueError`` unless the matrix is a valid state."""
        herm = np.max(np.abs(self.data - self.data.conj().T)) if self.data.size else 0.0
        if herm > herm_tol:
            raise ValueError(f"not Hermitian (max deviation {herm:.3e})")
        if abs(np.trace(self.data) - 1) > trace_tol:
            raise ValueError(f"trace {np.trace(self.data):.12g} != 1")
        lo = np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)).min()
        if lo < -psd_tol:
            raise ValueError(f"negative eigenvalue {lo:.3e}")

    def is_valid(self, **tols: float) -> bool:
        try:
            self.validate(**tols)
        except ValueError:
            return False
        return True

    def qubit_block(self) -> np.ndarray:
        """Restriction to the ``2**n`` computational subspace (unnormalised)."""
        idx = qubit_indices(self.n_sites)
        return self.data[np.ix_(idx, idx)]


@dataclass
class PureState:
    """State vector of ``n_sites`` five-level atoms (trajectory plumbing)."""

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.size != DIM**self.n_sites:
            raise ValueError("amplitude vector has the wrong dimension")

    @classmethod
    def basis(cls, levels: Sequence[int]) -> "PureState":
        n = len(levels)
        v = np.zeros(DIM**n, dtype=complex)
        v[level_index(levels)] = 1.0
        return cls(n, v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class KrausChannel:
    """Completely positive trace-preserving map given by Kraus operators."""

    operators: tuple

    def __init__(self, operators: Iterable[np.ndarray], tol: float = 1e-12):
        ops = tuple(np.asarray(k, dtype=complex) for k in operators)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or shape[0] != shape[1] or any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must be equal-sized square matrices")
        object.__setattr__(self, "operators", ops)
        err = self.completeness_error()
        if err > tol:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.3e})")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def compose(self, first: "KrausChannel") -> "KrausChannel":
        """Channel that applies ``first`` and then ``self``."""
        return KrausChannel([a @ b for a in self.operators for b in first.operators])

    @classmethod
    def identity(cls, dim: int = DIM) -> "KrausChannel":
        return cls([np.eye(dim)])

    @classmethod
    def unitary(cls, u: np.ndarray) -> "KrausChannel":
        return cls([u])


@dataclass(frozen=True)
class ShotRecord:
    """Readout of one shot: a :class:`Readout` per site."""

    outcomes: tuple

    @property
    def n_sites(self) -> int:
        return len(self.outcomes)

    @property
    def has_loss(self) -> bool:
        return any(o == Readout.LOST for o in self.outcomes)

    @property
    def bits(self) -> tuple:
        """Bit per site; ``None`` where the atom was lost."""
        return tuple(None if o == Readout.LOST else int(o) for o in self.outcomes)

    def bitstring(self, sites: Sequence[int] | None = None) -> str:
        """Bitstring over ``sites`` (default: every site), ``L`` marks loss."""
        sites = range(self.n_sites) if sites is None else sites
        return "".join("L" if self.outcomes[s] == Readout.LOST else str(int(self.outcomes[s])) for s in sites)

    @classmethod
    def from_index(cls, index: int, n_sites: int) -> "ShotRecord":
        return cls(tuple(Readout(c) for c in np.unravel_index(index, (3,) * n_sites)))


def level_index(levels: Sequence[int]) -> int:
    """Basis index of a product of levels, site 0 most significant."""
    idx = 0
    for lv in levels:
        idx = idx * DIM + int(lv)
    return idx


def qubit_indices(n_sites: int) -> np.ndarray:
    """Indices of the computational basis states inside the ``5**n`` space."""
    idx = np.zeros(1, dtype=np.int64)
    for _ in range(n_sites):
        idx = (idx[:, None] * DIM + np.array([0, 1])).reshape(-1)
    return idx


def lift_qubit_operator(u: np.ndarray) -> np.ndarray:
    """Extend a 2x2 operator to the five levels, identity off the qubit pair."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 operator")
    out = np.eye(DIM, dtype=complex)
    out[:2, :2] = u
    return out


def embed_single_qubit(u: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Full-register operator acting as ``u`` on the qubit levels of ``site``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-12):
        raise ValueError("u must be a 2x2 unitary")
    _check_site(site, n_sites)
    return embed_site_operator(lift_qubit_operator(u), site, n_sites)


def embed_site_operator(op: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Kronecker-embed a 5x5 operator at ``site``."""
    _check_site(site, n_sites)
    left = np.eye(DIM**site)
    right = np.eye(DIM ** (n_sites - site - 1))
    return np.kron(np.kron(left, op), right)


def cz_phases(n_sites: int, site_a: int, site_b: int) -> np.ndarray:
    """Diagonal of CZ on the full register (-1 only where both sites are q1)."""
    _check_site(site_a, n_sites)
    _check_site(site_b, n_sites)
    if site_a == site_b:
        raise ValueError("CZ needs two distinct sites")
    levels = np.indices((DIM,) * n_sites).reshape(n_sites, -1)
    both = (levels[site_a] == Level.Q1) & (levels[site_b] == Level.Q1)
    return np.where(both, -1.0, 1.0).astype(complex)


def apply_cz(state, site_a: int, site_b: int):
    """Apply CZ to a :class:`PureState` or :class:`DensityMatrix`."""
    ph = cz_phases(state.n_sites, site_a, site_b)
    if isinstance(state, PureState):
        return PureState(state.n_sites, ph * state.amplitudes)
    return DensityMatrix(state.n_sites, ph[:, None] * state.data * ph.conj()[None, :])


def apply_unitary(rho: DensityMatrix, u: np.ndarray, sites: Sequence[int]) -> DensityMatrix:
    """Apply a unitary on ``sites`` (5**k x 5**k for k sites)."""
    return apply_channel(rho, KrausChannel.unitary(u), sites)


def apply_channel(rho: DensityMatrix, ch: KrausChannel, sites: Sequence[int] | int) -> DensityMatrix:
    """Apply ``rho -> sum_k K rho K^dagger`` with the channel acting on ``sites``."""
    if isinstance(sites, (int, np.integer)):
        sites = (int(sites),)
    sites = tuple(sites)
    n = rho.n_sites
    for s in sites:
        _check_site(s, n)
    if len(set(sites)) != len(sites):
        raise ValueError("repeated site in channel target")
    if ch.dim != DIM ** len(sites):
        raise ValueError(f"channel dimension {ch.dim} does not match {len(sites)} site(s)")
    k = len(sites)
    t = rho.data.reshape((DIM,) * (2 * n))
    ket_axes = list(sites)
    bra_axes = [n + s for s in sites]
    out = np.zeros_like(t)
    for op in ch.operators:
        opt = op.reshape((DIM,) * (2 * k))
        # ket side: K acting on the listed site axes
        tmp = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), ket_axes))
        tmp = np.moveaxis(tmp, list(range(k)), ket_axes)
        # bra side: contract with conj(K)
        tmp = np.tensordot(opt.conj(), tmp, axes=(list(range(k, 2 * k)), bra_axes))
        tmp = np.moveaxis(tmp, list(range(k)), bra_axes)
        out += tmp
    dim = DIM**n
    return DensityMatrix(n, out.reshape(dim, dim))


def readout_effects(eps0: float, eps1: float) -> np.ndarray:
    """Diagonals of the dark, bright and lost POVM elements, shape (3, 5)."""
    return np.array(
        [
            [1 - eps0, eps1, 1 - eps0, eps1, 0.0],
            [eps0, 1 - eps1, eps0, 1 - eps1, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0],
        ]
    )


def measure_terminal(rho: DensityMatrix, eps0: float | None = None, eps1: float | None = None) -> np.ndarray:
    """Joint readout probabilities, an array of shape ``(3,) * n_sites``.

    Axis ``k`` is indexed by :class:`Readout` for site ``k``.  The dark and
    bright effects carry the classification errors ``eps0`` / ``eps1``; the
    lost effect projects onto the lost level.  Defaults come from the
    calibrated noise model.
    """
    if eps0 is None or eps1 is None:
        from c4sim.noise import NoiseParams

        defaults = NoiseParams()
        eps0 = defaults.meas_eps0 if eps0 is None else eps0
        eps1 = defaults.meas_eps1 if eps1 is None else eps1
    n = rho.n_sites
    diag = np.real(np.diag(rho.data)).reshape((DIM,) * n)
    eff = readout_effects(eps0, eps1)
    out = diag
    for axis in range(n):
        out = np.moveaxis(np.tensordot(eff, out, axes=([1], [axis])), 0, axis)
    return out
