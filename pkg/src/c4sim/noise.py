"""Calibrated five-level noise model.

All numeric parameters live on :class:`NoiseParams`.  Transition matrices
are stored as probabilities (already scaled from the 1e-6 table units) and
are read column = source level, row = destination level.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from c4sim.sim.states import DIM, DensityMatrix, KrausChannel, lift_qubit_operator

_CZ_TABLE = (
    (17.4, 185.0, 4.9, 165.4, 0.0),
    (18.5, 197.5, 4.6, 177.7, 0.0),
    (31.1, 420.3, 45.8, 1210.0, 0.0),
    (42.1, 590.2, 52.9, 1901.0, 0.0),
    (0.0, 5000.0, 0.0, 0.0, 0.0),
)
_RZ_TABLE = (
    (0.0, 207.2, 0.0, 0.0, 0.0),
    (0.0, 223.1, 0.0, 0.0, 0.0),
    (0.0, 364.3, 0.0, 0.0, 0.0),
    (0.0, 524.0, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.0, 0.0),
)

_MATRIX_FIELDS = ("cz_transition_matrix", "rz_transition_matrix")


def _scaled_table(table) -> tuple:
    return tuple(tuple(v * 1e-6 for v in row) for row in table)


class NoiseConfigError(ValueError):
    """Invalid noise parameters or overrides."""


@dataclass(frozen=True)
class NoiseParams:
    """Every parameter of the circuit-level noise model."""

    prep_p: float = 0.006
    prep_q: float = 0.046
    cz_phase_error: float = 0.0035
    cz_transition_matrix: tuple = field(default_factory=lambda: _scaled_table(_CZ_TABLE))
    gr_overrotation: float = 0.0345
    rz_relative_overrotation: float = 0.012
    rz_transition_matrix: tuple = field(default_factory=lambda: _scaled_table(_RZ_TABLE))
    meas_eps0: float = 0.004
    meas_eps1: float = 0.028

    def __post_init__(self) -> None:
        for name in _MATRIX_FIELDS:
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (DIM, DIM):
                raise NoiseConfigError(f"{name} must be {DIM}x{DIM}")
            if np.any(m < 0) or np.any(m > 1):
                raise NoiseConfigError(f"{name} entries must lie in [0, 1]")
            if np.any(m.sum(axis=0) > 1 + 1e-12):
                raise NoiseConfigError(f"{name} has a source column summing above 1")
            object.__setattr__(self, name, tuple(tuple(float(v) for v in row) for row in m))
        for name in ("prep_p", "prep_q", "cz_phase_error", "meas_eps0", "meas_eps1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise NoiseConfigError(f"{name}={v} is not a probability")
        if self.prep_p + self.prep_q > 1.0:
            raise NoiseConfigError("prep_p + prep_q exceeds 1")

    @classmethod
    def zero(cls) -> "NoiseParams":
        """Every error mechanism switched off."""
        z = tuple((0.0,) * DIM for _ in range(DIM))
        return cls(0.0, 0.0, 0.0, z, 0.0, 0.0, z, 0.0, 0.0)

    def matrix(self, name: str) -> np.ndarray:
        return np.array(getattr(self, name), dtype=float)

    def to_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "NoiseParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise NoiseConfigError(f"unknown noise fields: {sorted(unknown)}")
        kwargs = {}
        for k, v in doc.items():
            kwargs[k] = tuple(tuple(float(x) for x in row) for row in v) if k in _MATRIX_FIELDS else float(v)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "NoiseParams":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "NoiseParams":
        return cls.from_json(Path(path).read_text())


def _jsonable(v):
    return [list(row) for row in v] if isinstance(v, tuple) else v


def scaled(params: NoiseParams, overrides: Mapping[str, Any]) -> NoiseParams:
    """Copy of ``params`` with the listed fields replaced.

    Keys are field names, or ``matrix_name.row.col`` to replace one entry of
    a transition matrix.
    """
    doc = params.to_dict()
    for key, value in overrides.items():
        parts = key.split(".")
        if parts[0] not in doc:
            raise NoiseConfigError(f"unknown noise field {parts[0]!r}")
        if len(parts) == 1:
            doc[key] = value
        elif len(parts) == 3 and parts[0] in _MATRIX_FIELDS:
            try:
                r, c = int(parts[1]), int(parts[2])
                doc[parts[0]][r][c] = float(value)
            except (ValueError, IndexError) as exc:
                raise NoiseConfigError(f"bad matrix override {key!r}") from exc
        else:
            raise NoiseConfigError(f"bad override key {key!r}")
    return NoiseParams.from_dict(doc)


def resolve(noise: NoiseParams | None) -> NoiseParams:
    return NoiseParams.zero() if noise is None else noise


# ---------------------------------------------------------------- gate maths


def gr_matrix(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta/2 (cos(phi) X + sin(phi) Y)) on one qubit."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * s * complex(math.cos(phi), -math.sin(phi))], [-1j * s * complex(math.cos(phi), math.sin(phi)), c]]
    )


def rz_matrix(theta: float) -> np.ndarray:
    """exp(-i theta Z / 2) on one qubit."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def noisy_gr(theta: float, phi: float, params: NoiseParams | None = None) -> np.ndarray:
    """Qubit unitary of a GR pulse with the static additive overrotation."""
    return gr_matrix(theta + resolve(params).gr_overrotation, phi)


def noisy_rz(theta: float, params: NoiseParams | None = None) -> tuple[np.ndarray, KrausChannel]:
    """Coherent part (5x5 unitary) and jump channel of an RZ gate."""
    p = resolve(params)
    u = lift_qubit_operator(rz_matrix((1.0 + p.rz_relative_overrotation) * theta))
    return u, jump_channel(p.matrix("rz_transition_matrix"))


def jump_channel(matrix: np.ndarray) -> KrausChannel:
    """Incoherent transitions ``sqrt(M[d, s]) |d><s|`` plus the no-jump operator."""
    m = np.asarray(matrix, dtype=float)
    col = m.sum(axis=0)
    if np.any(col > 1 + 1e-12):
        raise NoiseConfigError("transition matrix column sums exceed 1")
    ops = [np.diag(np.sqrt(np.clip(1.0 - col, 0.0, None)))]
    for d, s in zip(*np.nonzero(m)):
        k = np.zeros((DIM, DIM))
        k[d, s] = math.sqrt(m[d, s])
        ops.append(k)
    return KrausChannel(ops)


def dephasing_channel(p: float) -> KrausChannel:
    """Phase flip on the qubit pair with probability ``p``."""
    z = lift_qubit_operator(np.diag([1.0, -1.0]))
    return KrausChannel([math.sqrt(1 - p) * np.eye(DIM), math.sqrt(p) * z])


def channel_for_cz(params: NoiseParams | None = None) -> KrausChannel:
    """Per-site channel applied to each CZ participant: dephasing, then jumps."""
    p = resolve(params)
    return jump_channel(p.matrix("cz_transition_matrix")).compose(dephasing_channel(p.cz_phase_error))


def prep_populations(params: NoiseParams | None = None) -> np.ndarray:
    """Per-site level populations before the preparation pi-pulse."""
    p = resolve(params)
    return np.array([p.prep_p / 2, 1 - p.prep_p - p.prep_q, p.prep_p / 2, p.prep_q, 0.0])


def prep_state(n_sites: int, params: NoiseParams | None = None) -> DensityMatrix:
    """Initial register state including the noisy preparation pi-pulse."""
    u = lift_qubit_operator(noisy_gr(math.pi, 0.0, params))
    site = u @ np.diag(prep_populations(params)).astype(complex) @ u.conj().T
    rho = np.ones((1, 1), dtype=complex)
    for _ in range(n_sites):
        rho = np.kron(rho, site)
    return DensityMatrix(n_sites, rho)
