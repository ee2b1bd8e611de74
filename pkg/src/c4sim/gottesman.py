"""Gottesman-style logical benchmarking: circuit families, corpus, TVD statistics."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from c4sim import _rng
from c4sim import circuits as cc
from c4sim import code422
from c4sim import noise as nm
from c4sim.sim import exact, trajectory

PREP_ORDER = (cc.PrepKind.PREP_00, cc.PrepKind.PREP_0PLUS, cc.PrepKind.PREP_BELL)
ARMS = ("logical", "physical")


@dataclass(frozen=True)
class ProtocolParams:
    T: int = 8
    r: int = 2
    p: int = 4

    def __post_init__(self) -> None:
        if self.T < 1 or self.r < 1 or not 1 <= self.p <= self.T:
            raise ValueError(f"invalid protocol parameters {self}")


def _draw(rng: np.random.Generator, k: int) -> tuple:
    return tuple(cc.ALPHABET[i] for i in rng.integers(0, len(cc.ALPHABET), size=k))


def generate_type1(params: ProtocolParams, rng: np.random.Generator) -> list:
    """``r`` circuits of ``t`` fresh random layers for every depth ``t = 1..T``."""
    return [_draw(rng, t) for t in range(1, params.T + 1) for _ in range(params.r)]


def generate_type2(params: ProtocolParams, rng: np.random.Generator) -> list:
    """``r`` circuits per period ``q = 1..p``: a random ``q``-layer block repeated ``T // q`` times."""
    out = []
    for q in range(1, params.p + 1):
        for _ in range(params.r):
            out.append(_draw(rng, q) * (params.T // q))
    return out


def type1_bound(params: ProtocolParams) -> float:
    return params.r * (params.T + 1)


def type2_bound(params: ProtocolParams) -> float:
    return params.r * params.T * (math.log(params.p) + 1)


# -------------------------------------------------------------------- corpus


@dataclass(frozen=True)
class CorpusEntry:
    index: int
    prep: cc.PrepKind
    layers: tuple

    def logical_circuit(self, basis: str = "Z") -> cc.LogicalCircuit:
        return cc.LogicalCircuit(self.prep, self.layers, basis)


def parse_corpus(text: str) -> list:
    """Expand base-circuit lines into one entry per (circuit, prep)."""
    entries = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rng_text, _, rest = line.partition(" ")
        lo, hi = (int(x) for x in rng_text.split("-"))
        if hi - lo + 1 != len(PREP_ORDER):
            raise ValueError(f"range {rng_text} does not cover three preparations")
        rest = rest.strip()
        layers = () if rest in ("", "(no-op)") else tuple(cc.LogicalGateLabel(t) for t in rest.split())
        for k, prep in enumerate(PREP_ORDER):
            entries.append(CorpusEntry(lo + k, prep, layers))
    entries.sort(key=lambda e: e.index)
    if [e.index for e in entries] != list(range(len(entries))):
        raise ValueError("corpus indices are not contiguous")
    return entries


def dump_corpus(entries: Sequence[CorpusEntry]) -> str:
    lines = []
    for e in entries:
        if e.prep is not PREP_ORDER[0]:
            continue
        labels = " ".join(g.value for g in e.layers) or "(no-op)"
        lines.append(f"{e.index}-{e.index + 2} {labels}")
    return "\n".join(lines) + "\n"


def load_corpus() -> list:
    text = resources.files("c4sim").joinpath("data/corpus.txt").read_text()
    return parse_corpus(text)


def ideal_distribution(entry) -> np.ndarray:
    """Z-basis probabilities over ``00, 01, 10, 11`` (q0 most significant)."""
    lc = entry.logical_circuit() if isinstance(entry, CorpusEntry) else entry
    psi = cc.ideal_logical_state(lc)
    return np.abs(psi) ** 2


def is_uniform(dist: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.allclose(dist, 0.25, atol=tol))


# ----------------------------------------------------------------- statistics


def tvd(p: Sequence[float], q: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions have different supports")
    return 0.5 * float(np.abs(p - q).sum())


@dataclass(frozen=True)
class TvdEstimate:
    point: float
    lower: float
    upper: float
    n_shots: float
    retained_fraction: float = 1.0


def narrowest_window(samples: np.ndarray, mass: float) -> tuple:
    s = np.sort(np.asarray(samples))
    k = max(1, int(math.ceil(mass * s.size)))
    widths = s[k - 1 :] - s[: s.size - k + 1]
    i = int(np.argmin(widths))
    return float(s[i]), float(s[i + k - 1])


def dirichlet_envelope(
    counts: Sequence[float],
    ideal: Sequence[float],
    n_samples: int = 10000,
    mass: float = 0.68,
    rng: np.random.Generator | None = None,
    retained_fraction: float = 1.0,
) -> TvdEstimate:
    """TVD point estimate plus the narrowest ``mass`` band of the add-one Dirichlet posterior."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("negative counts")
    n = counts.sum()
    if n <= 0:
        raise ValueError("all-zero counts")
    rng = rng if rng is not None else _rng.stream(0, _rng.KEY_DIRICHLET)
    ideal = np.asarray(ideal, dtype=float)
    draws = rng.dirichlet(counts + 1.0, size=n_samples)
    tvds = 0.5 * np.abs(draws - ideal[None, :]).sum(axis=1)
    lo, hi = narrowest_window(tvds, mass)
    return TvdEstimate(tvd(counts / n, ideal), lo, hi, float(n), retained_fraction)


def shots_to_distinguish(
    dist_logical: Sequence[float],
    dist_physical: Sequence[float],
    ideal: Sequence[float],
    seed: int = 0,
    max_shots: float = 1e7,
    resamples: int = 200,
    fraction: float = 0.9,
    n_samples: int = 2000,
    mass: float = 0.68,
) -> float:
    """Smallest shot count at which the two envelopes separate in ``fraction`` of resamples.

    Searches a geometric grid from 10 to ``max_shots`` by bisection.  Returns
    ``inf`` when even ``max_shots`` does not separate them.
    """
    a = np.asarray(dist_logical, dtype=float)
    b = np.asarray(dist_physical, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    a, b = a / a.sum(), b / b.sum()
    grid = np.unique(np.round(np.geomspace(10, max_shots, 57)).astype(np.int64))

    def separated(k: int) -> bool:
        n = int(grid[k])
        rng = _rng.stream(seed, _rng.KEY_RESAMPLE, n)
        ea = _envelope_batch(a, ideal, n, rng, resamples, n_samples, mass)
        eb = _envelope_batch(b, ideal, n, rng, resamples, n_samples, mass)
        disjoint = (ea[:, 1] < eb[:, 0]) | (eb[:, 1] < ea[:, 0])
        return disjoint.mean() >= fraction

    if not separated(len(grid) - 1):
        return math.inf
    lo, hi = -1, len(grid) - 1  # separated(hi) holds; lo is "not known separated"
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if separated(mid):
            hi = mid
        else:
            lo = mid
    return float(grid[hi])


def _envelope_batch(dist, ideal, n, rng, resamples, n_samples, mass) -> np.ndarray:
    counts = rng.multinomial(n, dist, size=resamples)
    # Dirichlet draws through normalised gamma variates, one batch for every resample
    g = rng.standard_gamma(counts[:, None, :] + 1.0, size=(resamples, n_samples, dist.size))
    draws = g / g.sum(axis=2, keepdims=True)
    t = np.sort(0.5 * np.abs(draws - ideal[None, None, :]).sum(axis=2), axis=1)
    k = max(1, int(math.ceil(mass * n_samples)))
    widths = t[:, k - 1 :] - t[:, : n_samples - k + 1]
    i = np.argmin(widths, axis=1)
    rows = np.arange(resamples)
    return np.stack([t[rows, i], t[rows, i + k - 1]], axis=1)


# ---------------------------------------------------------------- benchmark


@dataclass(frozen=True)
class BenchmarkRow:
    index: int
    prep: cc.PrepKind
    arm: str
    shots: float
    retained_fraction: float
    tvd: float
    ci_low: float
    ci_high: float
    distribution: tuple = ()


def compile_arm(lc: cc.LogicalCircuit, arm: str) -> cc.NativeCircuit:
    if arm == "logical":
        return cc.compile_encoded(lc)
    if arm == "physical":
        return cc.compile_unencoded(lc)
    raise ValueError(f"unknown arm {arm!r}")


def arm_counts(table: np.ndarray, circuit: cc.NativeCircuit, arm: str, basis: str = "Z") -> code422.CountsTable:
    """Post-select a readout table: full decoding for the logical arm, loss only for the physical one."""
    if arm == "logical":
        return code422.postselect_table(table, circuit.data_sites, circuit.flag_sites, basis)
    return physical_counts(table)


def physical_counts(table: np.ndarray) -> code422.CountsTable:
    t = np.asarray(table, dtype=float)
    if t.sum() <= 0:
        raise ValueError("empty input")
    kept = t[:2, :2].reshape(4)
    return code422.CountsTable(kept, float(t.sum()), float(t.sum() - kept.sum()))


def evaluate_entry(
    entry: CorpusEntry,
    noise: nm.NoiseParams | None,
    arm: str,
    shots: int | None = None,
    seed: int = 0,
    backend: str = "auto",
    n_samples: int = 10000,
) -> BenchmarkRow:
    """TVD of one corpus entry; exact when ``shots`` is None."""
    lc = entry.logical_circuit()
    circuit = compile_arm(lc, arm)
    ideal = ideal_distribution(lc)
    arm_id = ARMS.index(arm)
    if shots is None:
        table = exact.exact_distribution(circuit, noise)
        ct = arm_counts(table, circuit, arm)
        d = ct.distribution()
        t = tvd(d, ideal)
        return BenchmarkRow(entry.index, entry.prep, arm, 0, ct.retained_fraction, t, t, t, tuple(d))
    table = trajectory.sample_counts(circuit, noise, shots, seed, backend, key=(entry.index, arm_id))
    ct = arm_counts(table, circuit, arm)
    est = dirichlet_envelope(
        ct.counts, ideal, n_samples, rng=_rng.stream(seed, _rng.KEY_DIRICHLET, entry.index, arm_id)
    )
    return BenchmarkRow(
        entry.index, entry.prep, arm, shots, ct.retained_fraction, est.point, est.lower, est.upper, tuple(ct.distribution())
    )


def _evaluate_star(args) -> BenchmarkRow:
    return evaluate_entry(*args)


def run_benchmark(
    corpus: Iterable[CorpusEntry],
    noise: nm.NoiseParams | None,
    arm: str,
    backend: str = "auto",
    shots: int | None = None,
    seed: int = 0,
    workers: int = 1,
) -> list:
    """Evaluate every entry in one arm; rows come back sorted by index."""
    jobs = [(e, noise, arm, shots, seed, backend) for e in corpus]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_star, jobs, chunksize=4))
    else:
        rows = [_evaluate_star(j) for j in jobs]
    return sorted(rows, key=lambda r: r.index)
