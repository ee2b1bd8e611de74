"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines go
straight to the terminal even when output capture is on.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from c4sim import _rng
from c4sim import aim
from c4sim import circuits as cc
from c4sim import cli
from c4sim import code422
from c4sim import gottesman as gm
from c4sim import noise as nm
from c4sim import tomography as tm
from c4sim.sim import exact
from c4sim.sim.states import Level


@pytest.fixture
def report(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def corpus():
    return gm.load_corpus()


def test_criterion_01_ft_exhaustive(report, corpus):
    t0 = time.perf_counter()
    circuits = []
    for prep in gm.PREP_ORDER:
        circuits += [cc.LogicalCircuit(prep, (), b) for b in ("Z", "X")]
        circuits += [cc.LogicalCircuit(prep, (g,)) for g in cc.ALPHABET]
    circuits += [e.logical_circuit() for e in corpus]
    reports = [code422.ft_check(lc) for lc in circuits]
    bad = sum(len(r.violations) for r in reports)
    most = max(r.n_insertions for r in reports)
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and len(corpus) == 147 and elapsed < 1800
    report(
        1,
        "FT exhaustiveness",
        ok,
        f"{len(circuits)} circuits, {bad} violations, max {most} insertions/circuit, {elapsed:.1f} s",
    )


def test_criterion_02_noiseless_equivalence(report, corpus):
    zero = nm.NoiseParams.zero()
    worst = 0.0
    for e in corpus:
        lc = e.logical_circuit()
        ideal = gm.ideal_distribution(lc)
        enc = cc.compile_encoded(lc)
        dec = code422.postselect_table(exact.exact_distribution(enc, zero), enc.data_sites, enc.flag_sites)
        phys = gm.physical_counts(exact.exact_distribution(cc.compile_unencoded(lc), zero))
        d1, d2 = dec.distribution(), phys.distribution()
        worst = max(worst, gm.tvd(d1, ideal), gm.tvd(d2, ideal), gm.tvd(d1, d2))
    report(2, "noiseless equivalence", worst < 1e-9, f"max pairwise TVD {worst:.2e} over 147 entries")


def test_criterion_03_uniform_count(report, corpus):
    base = [e for e in corpus if e.prep is cc.PrepKind.PREP_00]
    uniform = [e.index for e in base if gm.is_uniform(gm.ideal_distribution(e))]
    report(3, "uniform-output circuits", len(base) == 49 and len(uniform) == 10, f"{len(uniform)} of {len(base)}")


def test_criterion_04_noise_anchors(report):
    p = nm.NoiseParams()
    rz = p.matrix("rz_transition_matrix")[:, Level.Q1]
    total = rz.sum()
    shares = {lv.name: rz[lv] / total for lv in (Level.Q0, Level.LEAK0, Level.LEAK1, Level.Q1)}
    want = {"Q0": 0.157, "LEAK0": 0.276, "LEAK1": 0.397, "Q1": 0.169}
    split_ok = all(abs(shares[k] - v) <= 0.001 for k, v in want.items())
    cz_loss = p.matrix("cz_transition_matrix")[Level.LOST, Level.Q1]
    channels = [
        nm.jump_channel(p.matrix("rz_transition_matrix")),
        nm.jump_channel(p.matrix("cz_transition_matrix")),
        nm.dephasing_channel(p.cz_phase_error),
        nm.channel_for_cz(p),
    ]
    tp = max(ch.completeness_error() for ch in channels)
    ok = abs(total - 0.00132) <= 0.00001 and split_ok and abs(cz_loss - 0.005) < 1e-15 and tp < 1e-12
    detail = (
        f"RZ leak {100 * total:.4f}%, splits "
        + "/".join(f"{100 * shares[k]:.1f}" for k in ("Q0", "LEAK0", "LEAK1", "Q1"))
        + f"%, CZ loss {100 * cz_loss:.2f}%, TP error {tp:.1e}"
    )
    report(4, "noise-model anchors", ok, detail)


def test_criterion_05_logical_advantage(report, corpus):
    t0 = time.perf_counter()
    noise = nm.NoiseParams()
    rows = {arm: gm.run_benchmark(corpus, noise, arm, backend="exact", workers=4) for arm in gm.ARMS}
    elapsed = time.perf_counter() - t0
    log, phys = rows["logical"], rows["physical"]
    p00 = [i for i, e in enumerate(corpus) if e.prep is cc.PrepKind.PREP_00]
    mean_l = float(np.mean([log[i].tvd for i in p00]))
    mean_p = float(np.mean([phys[i].tvd for i in p00]))
    nonuniform = [i for i, e in enumerate(corpus) if not gm.is_uniform(gm.ideal_distribution(e))]
    losers = [corpus[i].index for i in nonuniform if not phys[i].tvd > log[i].tvd]
    ok = mean_l < mean_p and not losers and elapsed < 3600
    report(
        5,
        "simulated logical advantage",
        ok,
        f"PREP_00 mean TVD logical {mean_l:.4f} vs physical {mean_p:.4f}; "
        f"{len(nonuniform) - len(losers)}/{len(nonuniform)} non-uniform entries favour logical; {elapsed:.0f} s",
    )


def test_criterion_06_aim_exactness(report):
    worst = 0.0
    for p in aim.grid():
        angles = aim.optimize(p)
        closed = -p.U / 4 - math.sqrt(p.U**2 / 16 + 4 * p.V**2)
        worst = max(worst, abs(aim.ansatz_energy(angles, p) - closed))
    a1 = aim.exact_ground_energy(aim.SiamParams(1, -1))
    a9 = aim.exact_ground_energy(aim.SiamParams(9, -9))
    ok = worst < 1e-6 and abs(a1 + 2.27) < 0.01 and abs(a9 + 20.39) < 0.01
    report(6, "AIM exactness", ok, f"max |E - E0| {worst:.1e}; E0(1,-1) {a1:.4f}, E0(9,-9) {a9:.4f}")


def test_criterion_07_gr_pseudothreshold(report):
    t0 = time.perf_counter()
    rows = aim.gr_scan([0.0086, 0.0345], workers=4)
    low = aim.reversed_circuits(rows, 0.0086)
    high = aim.reversed_circuits(rows, 0.0345)
    elapsed = time.perf_counter() - t0
    ok = not low and len(high) >= 1 and elapsed < 3600
    report(
        7,
        "GR pseudothreshold",
        ok,
        f"reversed at 8.6 mrad: {len(low)}/18, at 34.5 mrad: {len(high)}/18 {high}; {elapsed:.0f} s",
    )


def _coverage(p, ideal, trials: int, seed: int) -> float:
    truth = gm.tvd(p, ideal)
    rng = _rng.stream(seed, _rng.KEY_RESAMPLE)
    hits = 0
    for _ in range(trials):
        c = rng.multinomial(1050, p)
        est = gm.dirichlet_envelope(c, ideal, rng=rng)
        hits += est.lower <= truth <= est.upper
    return hits / trials


def test_criterion_08_dirichlet_coverage(report, corpus):
    # a physical-arm distribution from the benchmark itself
    entry = corpus[21]
    p = np.array(gm.evaluate_entry(entry, nm.NoiseParams(), "physical").distribution)
    ideal = gm.ideal_distribution(entry)
    cov = _coverage(p, ideal, 1000, seed=8)
    # diagnostic only: near-zero TVD, where the add-one prior biases the envelope upward
    small = _coverage(np.array([0.99, 0.004, 0.003, 0.003]), np.array([1.0, 0, 0, 0]), 300, seed=9)
    report(
        8,
        "Dirichlet coverage",
        abs(cov - 0.68) <= 0.05,
        f"{100 * cov:.1f}% at TVD {gm.tvd(p, ideal):.3f}, n=1050 (near-zero TVD regime: {100 * small:.0f}%, not asserted)",
    )


def test_criterion_09_tomography_ordering(report):
    noise = nm.NoiseParams()
    table = []
    for seed in range(5):
        data = tm.synth_dataset(None, noise, 2000, seed)
        rows = tm.analyze(tm.mh_reconstruct(data, seed=seed))
        table.append([r.estimate for r in rows])
    ordered = all(a <= b <= c <= d for a, b, c, d in table)
    zero = nm.NoiseParams.zero()
    clean = tm.analyze(tm.mh_reconstruct(tm.synth_dataset(None, zero, 20000, 100), seed=100))
    clean_min = min(r.estimate for r in clean)
    shallow = tm.analyze(tm.mh_reconstruct(tm.synth_dataset(None, zero, 2000, 101), seed=101))
    shallow_min = min(r.estimate for r in shallow)
    mean = np.mean(table, axis=0)
    report(
        9,
        "tomography ordering",
        ordered and clean_min >= 0.999,
        "mean " + " <= ".join(f"{v:.3f}" for v in mean) + f" on 5 seeds; noiseless min {clean_min:.4f} at 20000 shots"
        f" ({shallow_min:.4f} at 2000 shots)",
    )


def test_criterion_10_reproducibility(report, tmp_path):
    runs = {
        "gottesman": ["gottesman", "--shots", "1050", "--seed", "7"],
        "aim": ["aim", "run", "--shots", "2000", "--seed", "3"],
        "aim-scan": ["aim", "--scan-gr", "17.3"],
        "tomo": ["tomo", "--seed", "5", "--steps", "3000", "--burn-in", "1000"],
        "ftcheck": ["ftcheck", "--no-corpus"],
    }
    mismatched = []
    for name, argv in runs.items():
        outs = []
        for k, workers in enumerate((1, 1, 4)):
            path = tmp_path / f"{name}-{k}.out"
            extra = ["--workers", str(workers)] if name != "ftcheck" else []
            code = cli.main(argv + extra + ["--out", str(path)])
            outs.append((code, path.read_bytes()))
        if len({o for o in outs}) != 1 or outs[0][0] != 0:
            mismatched.append(name)
    report(
        10,
        "reproducibility",
        not mismatched,
        f"{len(runs)} subcommands x 3 runs (1, 1, 4 workers) byte-identical" if not mismatched else f"differs: {mismatched}",
    )
