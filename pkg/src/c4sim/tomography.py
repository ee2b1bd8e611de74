"""Four-site state tomography of the encoded Bell preparation.

Reconstruction is Bayesian: density matrices are written as ``A A^dag / tr``
with a complex Gaussian prior on ``A`` (which induces the Hilbert-Schmidt
measure on states) and explored by random-walk Metropolis-Hastings.  The
chain starts from a maximum-likelihood point found by the iterative
``R rho R`` scheme, so burn-in only has to tune the step size.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from c4sim import _rng
from c4sim import circuits as cc
from c4sim import code422
from c4sim import noise as nm
from c4sim.sim import exact, trajectory

N_DATA = 4
DIM = 2**N_DATA
PAIRS = ((0, 3), (1, 2))  # the two physical Bell pairs of the encoded Bell state
METRICS = ("physical", "logical_zzzz", "logical_zzzz_xxxx_trace", "logical_both")

_RY_M = np.array([[1, 1], [-1, 1]]) / math.sqrt(2)  # RY(-pi/2): X eigenbasis -> Z
_RX_P = np.array([[1, -1j], [-1j, 1]]) / math.sqrt(2)  # RX(pi/2): Y eigenbasis -> Z
_LOCAL = {"X": _RY_M, "Y": _RX_P, "Z": np.eye(2)}
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


class TomographyError(ValueError):
    pass


def settings() -> list:
    return ["".join(p) for p in itertools.product("XYZ", repeat=N_DATA)]


def setting_unitary(setting: str) -> np.ndarray:
    u = np.eye(1)
    for c in setting:
        u = np.kron(u, _LOCAL[c])
    return u


def setting_gates(setting: str) -> list:
    """Native basis change: GR sandwiches put X sites and Y sites into the Z basis."""
    gates: list = []
    xs = [i for i, c in enumerate(setting) if c == "X"]
    ys = [i for i, c in enumerate(setting) if c == "Y"]
    if xs:
        gates += [cc.GlobalRotation(-cc.HALF, 0.0), *(cc.LocalZ(s, cc.HALF) for s in xs), cc.GlobalRotation(cc.HALF, 0.0)]
    if ys:
        gates += [cc.GlobalRotation(-cc.HALF, cc.HALF), *(cc.LocalZ(s, cc.HALF) for s in ys), cc.GlobalRotation(cc.HALF, cc.HALF)]
    return gates


@dataclass
class TomoDataset:
    """Counts over the 16 data-site outcomes (site 0 most significant) for each setting."""

    counts: dict
    shots: int
    eps0: float = 0.0
    eps1: float = 0.0

    def __post_init__(self) -> None:
        for k, v in self.counts.items():
            arr = np.asarray(v, dtype=float)
            if arr.shape != (DIM,):
                raise TomographyError(f"setting {k} needs {DIM} counts")
            if np.any(arr < 0):
                raise TomographyError(f"negative counts in setting {k}")
            self.counts[k] = arr

    def matrix(self) -> tuple:
        keys = sorted(self.counts)
        return keys, np.stack([self.counts[k] for k in keys])

    def to_json(self) -> str:
        body = {
            "shots": self.shots,
            "eps0": self.eps0,
            "eps1": self.eps1,
            "counts": {k: [int(round(x)) for x in self.counts[k]] for k in sorted(self.counts)},
        }
        return json.dumps(body, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TomoDataset":
        d = json.loads(text)
        return cls({k: v for k, v in d["counts"].items()}, int(d["shots"]), float(d.get("eps0", 0)), float(d.get("eps1", 0)))

    @classmethod
    def load(cls, path) -> "TomoDataset":
        return cls.from_json(Path(path).read_text())


def default_prep() -> cc.NativeCircuit:
    return cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_BELL))


def synth_dataset(
    prep: cc.NativeCircuit | None,
    noise: nm.NoiseParams | None,
    shots: int,
    seed: int,
    backend: str = "auto",
) -> TomoDataset:
    """Sample every setting; shots with a lost data atom are discarded."""
    prep = prep if prep is not None else default_prep()
    data = list(prep.data_sites) or list(range(N_DATA))
    if len(data) != N_DATA:
        raise TomographyError("tomography needs exactly four data sites")
    params = nm.resolve(noise)
    counts = {}
    for k, s in enumerate(settings()):
        c = cc.merge_rotations(prep.extend(setting_gates(s)))
        table = trajectory.sample_counts(c, noise, shots, seed, backend, key=(_rng.KEY_TOMO, k))
        rest = tuple(i for i in range(c.n_sites) if i not in data)
        marg = table.sum(axis=rest) if rest else table
        marg = np.transpose(marg, np.argsort(np.argsort(data)))  # axes in data-site order
        counts[s] = marg[(slice(0, 2),) * N_DATA].reshape(DIM).astype(float)
    return TomoDataset(counts, shots, params.meas_eps0, params.meas_eps1)


# -------------------------------------------------------------- likelihood


def _confusion(eps0: float, eps1: float) -> np.ndarray:
    # rows: reported bit, columns: true bit
    return np.array([[1 - eps0, eps1], [eps0, 1 - eps1]])


def povm_matrix(keys: Sequence[str], eps0: float = 0.0, eps1: float = 0.0) -> np.ndarray:
    """``W`` with ``W @ rho.ravel()`` giving every outcome probability, settings stacked."""
    conf = np.eye(1)
    for _ in range(N_DATA):
        conf = np.kron(conf, _confusion(eps0, eps1))
    rows = []
    for s in keys:
        u = setting_unitary(s)
        # p_true[o] = <o|U rho U^dag|o> = sum_ij conj(U[o,i])... written as a row on vec(rho)
        proj = np.einsum("oi,oj->oij", u, u.conj()).reshape(DIM, DIM * DIM)
        rows.append(conf @ proj)
    return np.concatenate(rows, axis=0)


def log_likelihood(rho: np.ndarray, w: np.ndarray, counts: np.ndarray) -> float:
    p = np.real(w @ rho.reshape(-1))
    mask = counts > 0
    if np.any(p[mask] <= 0):
        return -math.inf
    return float(counts[mask] @ np.log(p[mask]))


def _outcome_probs(rho: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.clip(np.real(w @ rho.reshape(-1)), 1e-300, None)


def max_likelihood(data: TomoDataset, iterations: int = 300, tol: float = 1e-10) -> np.ndarray:
    """Iterative ``R rho R`` maximum-likelihood estimate (diluted for guaranteed ascent)."""
    keys, counts = data.matrix()
    w = povm_matrix(keys, data.eps0, data.eps1)
    f = counts.reshape(-1)
    if f.sum() <= 0:
        raise TomographyError("dataset has no counts")
    rho = np.eye(DIM, dtype=complex) / DIM
    prev = -math.inf
    eps = 0.5
    for _ in range(iterations):
        p = _outcome_probs(rho, w)
        # R = sum_k f_k/p_k E_k, with E_k recovered from the rows of W
        r = (w.T @ (f / p)).reshape(DIM, DIM).T / f.sum()
        step = np.eye(DIM) + eps * (r - np.eye(DIM))
        new = step @ rho @ step.conj().T
        new = new / np.trace(new).real
        ll = log_likelihood(new, w, f)
        if ll < prev:
            eps *= 0.5
            continue
        rho = 0.5 * (new + new.conj().T)
        if ll - prev < tol:
            break
        prev = ll
    return rho


@dataclass
class ReconstructedState:
    mean: np.ndarray
    samples: np.ndarray
    ml_sample: np.ndarray
    acceptance: float
    step: float


def _rho(a: np.ndarray) -> np.ndarray:
    m = a @ a.conj().T
    return m / np.trace(m).real


def mh_reconstruct(
    data: TomoDataset,
    n_steps: int = 20000,
    burn_in: int = 5000,
    seed: int = 0,
    thin: int = 50,
    start: np.ndarray | None = None,
) -> ReconstructedState:
    """Random-walk Metropolis-Hastings over ``A``; returns the posterior mean and thinned samples."""
    if n_steps <= burn_in:
        raise TomographyError("n_steps must exceed burn_in")
    keys, counts = data.matrix()
    f = counts.reshape(-1)
    if f.sum() <= 0:
        raise TomographyError("dataset has no counts")
    w = povm_matrix(keys, data.eps0, data.eps1)
    rng = _rng.stream(seed, _rng.KEY_MH)
    rho0 = max_likelihood(data) if start is None else np.asarray(start, dtype=complex)
    vals, vecs = np.linalg.eigh(0.999 * rho0 + 0.001 * np.eye(DIM) / DIM)
    a = vecs @ np.diag(np.sqrt(np.clip(vals, 0, None))) * math.sqrt(DIM * DIM)
    rho = _rho(a)
    ll = log_likelihood(rho, w, f)
    if not math.isfinite(ll):
        raise TomographyError("dataset has zero likelihood under the starting state")
    lp = ll - 0.5 * float(np.sum(np.abs(a) ** 2))
    step = 0.01
    accepted = window = 0
    kept, best, best_ll, acc_after = [], rho, ll, 0
    total = np.zeros((DIM, DIM), dtype=complex)
    n_mean = 0
    for i in range(n_steps):
        prop = a + step * (rng.standard_normal((DIM, DIM)) + 1j * rng.standard_normal((DIM, DIM))) / math.sqrt(2)
        r_prop = _rho(prop)
        ll_prop = log_likelihood(r_prop, w, f)
        lp_prop = ll_prop - 0.5 * float(np.sum(np.abs(prop) ** 2))
        if math.log(rng.random()) < lp_prop - lp:
            a, rho, ll, lp = prop, r_prop, ll_prop, lp_prop
            accepted += 1
            if i >= burn_in:
                acc_after += 1
            if ll > best_ll:
                best, best_ll = rho, ll
        window += 1
        if i < burn_in and window == 100:
            rate = accepted / window
            if rate < 0.2:
                step *= 0.7
            elif rate > 0.4:
                step *= 1.3
            accepted = window = 0
        if i >= burn_in:
            total += rho
            n_mean += 1
            if (i - burn_in) % thin == 0:
                kept.append(rho)
    mean = total / n_mean
    mean = 0.5 * (mean + mean.conj().T)
    return ReconstructedState(mean / np.trace(mean).real, np.array(kept), best, acc_after / n_mean, step)


# ---------------------------------------------------------------- analysis


def _partial(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    t = rho.reshape((2,) * (2 * N_DATA))
    drop = [i for i in range(N_DATA) if i not in keep]
    for k, s in enumerate(sorted(drop, reverse=True)):
        t = np.trace(t, axis1=s, axis2=s + t.ndim // 2)
    m = 2 ** len(keep)
    return t.reshape(m, m)


def _fid(rho: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, rho @ psi)))


def fidelities(rho: np.ndarray) -> dict:
    """The four Bell fidelities of one 16x16 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    rho = rho / np.trace(rho).real
    phys = np.mean([_fid(_partial(rho, pair), PHI_PLUS) for pair in PAIRS])
    bell_l = code422.logical_bell_codeword()
    rho_z = code422._project(rho, code422.ZZZZ)
    return {
        "physical": float(phys),
        "logical_zzzz": _fid(rho_z, bell_l),
        "logical_zzzz_xxxx_trace": _fid(code422.logical_density(rho, True, "trace"), PHI_PLUS),
        "logical_both": _fid(code422.logical_density(rho, True, "project"), PHI_PLUS),
    }


@dataclass(frozen=True)
class FidelityRow:
    metric: str
    estimate: float
    ci_low: float
    ci_high: float


def analyze(state: ReconstructedState | np.ndarray) -> list:
    """Fidelity table; intervals are central 95% ranges over the posterior samples."""
    if isinstance(state, np.ndarray):
        f = fidelities(state)
        return [FidelityRow(m, f[m], f[m], f[m]) for m in METRICS]
    point = fidelities(state.mean)
    per = [fidelities(s) for s in state.samples]
    rows = []
    for m in METRICS:
        vals = np.array([p[m] for p in per]) if per else np.array([point[m]])
        lo, hi = np.percentile(vals, [2.5, 97.5])
        rows.append(FidelityRow(m, point[m], float(lo), float(hi)))
    return rows


def simulated_density(
    prep: cc.NativeCircuit | None, noise: nm.NoiseParams | None, leakage: str = "detected"
) -> np.ndarray:
    """Exact pre-readout state of the data sites, normalised.

    ``leakage='detected'`` folds leaked atoms onto the qubit level they read
    as, which is the state tomography actually probes; ``'discard'``
    conditions on every data atom staying in the qubit pair.
    """
    prep = prep if prep is not None else default_prep()
    t = exact.evolve(prep, noise)
    if leakage == "detected":
        rho = exact.detected_qubit_density(t, list(prep.data_sites))
    elif leakage == "discard":
        rho = exact.qubit_density(t, list(prep.data_sites))
    else:
        raise ValueError(f"unknown leakage mode {leakage!r}")
    return rho / np.trace(rho).real
