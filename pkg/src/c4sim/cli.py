"""Command-line entry point: ``c4sim <subcommand> ...``.

Exit codes: 0 success, 2 invalid configuration, 3 failed fault-tolerance check.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from c4sim import _rng
from c4sim import aim
from c4sim import circuits as cc
from c4sim import code422
from c4sim import gottesman as gm
from c4sim import noise as nm
from c4sim import tomography as tm

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


class ConfigError(ValueError):
    pass


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.9g}"


def _write_csv(rows: Sequence[Sequence], header: Sequence[str], out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) if isinstance(v, (int, float, np.integer, np.floating)) else v for v in r])
    _emit(buf.getvalue(), out)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _info(msg: str, args) -> None:
    # keep stdout clean for data when no --out is given
    print(msg, file=sys.stdout if args.out else sys.stderr)


# ------------------------------------------------------------------ config


def load_noise(source: str | None, overrides: Sequence[str]) -> nm.NoiseParams:
    if source in (None, "default"):
        params = nm.NoiseParams()
    elif source == "zero":
        params = nm.NoiseParams.zero()
    else:
        try:
            params = nm.NoiseParams.load(source)
        except OSError as exc:
            raise ConfigError(f"cannot read noise file {source}: {exc}") from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad noise file {source}: {exc}") from exc
    changes = {}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            changes[key.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--set value for {key} is not a number") from exc
    try:
        return nm.scaled(params, changes) if changes else params
    except nm.NoiseConfigError as exc:
        raise ConfigError(str(exc)) from exc


def _need_seed(args) -> None:
    if args.shots is not None and args.seed is None:
        raise ConfigError("--seed is required for sampled runs")
    if args.shots is not None and args.shots < 1:
        raise ConfigError("--shots must be positive")


def _common(p: argparse.ArgumentParser, shots_default=None) -> None:
    p.add_argument("--noise", default="default", help="noise JSON file, or 'default' / 'zero'")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="K=V", help="override one noise field")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shots", type=int, default=shots_default)
    p.add_argument("--backend", choices=("auto", "exact", "trajectory"), default="auto")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--workers", type=int, default=1)


# --------------------------------------------------------------- gottesman


def _generated_corpus(seed: int, params: gm.ProtocolParams) -> list:
    rng = _rng.stream(seed, _rng.KEY_GENERATE)
    families = gm.generate_type1(params, rng) + gm.generate_type2(params, rng)
    out = []
    for layers in families:
        for prep in gm.PREP_ORDER:
            out.append(gm.CorpusEntry(len(out), prep, tuple(layers)))
    return out


def cmd_gottesman(args) -> int:
    noise = load_noise(args.noise, args.overrides)
    if args.exact:
        args.shots = None
    elif args.shots is None:
        raise ConfigError("give --shots N or --exact")
    _need_seed(args)
    seed = args.seed if args.seed is not None else 0
    if args.generate:
        t, r, p = (int(x) for x in args.generate.split(","))
        corpus = _generated_corpus(seed, gm.ProtocolParams(t, r, p))
    else:
        corpus = gm.load_corpus()
    rows = []
    for arm in gm.ARMS:
        rows += gm.run_benchmark(corpus, noise, arm, args.backend, args.shots, seed, args.workers)
    rows.sort(key=lambda r: (r.index, gm.ARMS.index(r.arm)))
    _write_csv(
        [(r.index, r.prep.value, r.arm, r.shots, r.retained_fraction, r.tvd, r.ci_low, r.ci_high) for r in rows],
        ("index", "prep", "arm", "shots", "retained_fraction", "tvd", "ci_low", "ci_high"),
        args.out,
    )
    for prep in gm.PREP_ORDER:
        means = [np.mean([r.tvd for r in rows if r.prep is prep and r.arm == arm]) for arm in gm.ARMS]
        _info(f"# {prep.value}: mean tvd logical {_num(means[0])} physical {_num(means[1])}", args)
    return EXIT_OK


# --------------------------------------------------------------------- aim


def cmd_aim(args) -> int:
    noise = load_noise(args.noise, args.overrides)
    if args.scan_gr:
        try:
            mrad = [float(x) for x in args.scan_gr.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError("--scan-gr expects comma-separated numbers") from exc
        seed = args.seed if args.seed is not None else 0
        rows = aim.gr_scan([m * 1e-3 for m in mrad], noise, seed, args.workers)
        _write_csv(
            [(r.gr_overrotation * 1e3, r.U, r.V, r.basis, r.arm, r.tvd) for r in rows],
            ("gr_overrotation_mrad", "U", "V", "basis", "arm", "tvd"),
            args.out,
        )
        for m in mrad:
            rev = aim.reversed_circuits(rows, m * 1e-3)
            mean = {
                arm: np.mean([r.tvd for r in rows if r.arm == arm and r.gr_overrotation == m * 1e-3]) for arm in aim.ARMS
            }
            _info(
                f"# {_num(m)} mrad: mean tvd logical {_num(mean['logical'])} physical {_num(mean['physical'])}; "
                f"logical worse on {len(rev)} of {len(rows) // (2 * len(mrad))} circuits",
                args,
            )
        return EXIT_OK
    if args.exact:
        args.shots = None
    _need_seed(args)
    seed = args.seed if args.seed is not None else 0
    rows, summary = aim.run_grid(noise, args.shots, seed, args.backend, args.workers)
    _write_csv(
        [
            (
                r.params.U,
                r.params.V,
                r.result.arm,
                r.result.shots_z,
                r.result.shots_x,
                r.result.retained_z,
                r.result.retained_x,
                r.result.estimate,
                r.result.exact,
                r.result.relative_error,
                r.result.sem,
            )
            for r in rows
        ],
        ("U", "V", "arm", "basis_shots_z", "basis_shots_x", "retained_z", "retained_x", "energy", "exact", "relative_error", "sem"),
        args.out,
    )
    _info(
        f"# geometric-mean relative error: logical {_num(summary['logical'])} physical {_num(summary['physical'])}", args
    )
    return EXIT_OK


# -------------------------------------------------------------------- tomo


def cmd_tomo(args) -> int:
    if args.dataset:
        try:
            data = tm.TomoDataset.load(args.dataset)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read dataset {args.dataset}: {exc}") from exc
        seed = args.seed if args.seed is not None else 0
    else:
        noise = load_noise(args.noise, args.overrides)
        if args.seed is None:
            raise ConfigError("--seed is required for sampled runs")
        seed = args.seed
        data = tm.synth_dataset(None, noise, args.shots, seed, args.backend)
        if args.save_dataset:
            Path(args.save_dataset).write_text(data.to_json())
    if args.steps <= args.burn_in:
        raise ConfigError("--steps must exceed --burn-in")
    state = tm.mh_reconstruct(data, args.steps, args.burn_in, seed)
    rows = tm.analyze(state)
    _write_csv([(r.metric, r.estimate, r.ci_low, r.ci_high) for r in rows], ("metric", "estimate", "ci_low", "ci_high"), args.out)
    _info(f"# acceptance {_num(state.acceptance)}", args)
    return EXIT_OK


# ----------------------------------------------------------------- ftcheck


def _ft_entry(name: str, report: code422.FtReport, documented: int = 0) -> dict:
    return {
        "circuit": name,
        "insertions": report.n_insertions,
        "violations": len(report.violations) - documented,
        "documented": documented,
        "details": [] if documented else report.violations,
    }


def ftcheck_entries(include_corpus: bool = True, aim_angles: aim.AnsatzAngles | None = None) -> list:
    """Sweep the FT operations table, the corpus and the AIM circuits."""
    entries = []
    for prep in gm.PREP_ORDER:
        for basis in ("Z", "X"):
            lc = cc.LogicalCircuit(prep, (), basis)
            entries.append(_ft_entry(f"{prep.value}/{basis}", code422.ft_check(lc)))
        for g in cc.ALPHABET:
            lc = cc.LogicalCircuit(prep, (g,))
            entries.append(_ft_entry(f"{prep.value}+{g.value}", code422.ft_check(lc)))
    if include_corpus:
        for e in gm.load_corpus():
            entries.append(_ft_entry(f"corpus/{e.index}", code422.ft_check(e.logical_circuit())))
    angles = aim_angles or aim.AnsatzAngles(0.7, 1.1)
    for basis in aim.BASES:
        report, stray = aim.ft_check_encoded(angles, basis)
        documented = len(report.violations) - len(stray)
        item = _ft_entry(f"aim/{basis}", report, documented)
        item["details"] = stray
        windows = aim.gadget_windows(aim.build("logical", angles, basis))
        item["gadget_windows"] = {str(k): list(v) for k, v in sorted(windows.items())}
        entries.append(item)
    return entries


def cmd_ftcheck(args) -> int:
    if args.circuit:
        try:
            circuit = cc.loads(Path(args.circuit).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read circuit {args.circuit}: {exc}") from exc
        entries = [_ft_entry(args.circuit, code422.ft_check_circuit(circuit, args.basis))]
    else:
        entries = ftcheck_entries(not args.no_corpus)
    bad = sum(e["violations"] for e in entries)
    report = {"circuits": len(entries), "violations": bad, "entries": entries}
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", args.out)
    _info(f"# {len(entries)} circuits, {bad} undocumented violations", args)
    return EXIT_OK if bad == 0 else EXIT_CHECK


# ------------------------------------------------------------ dump-circuit


def cmd_dump(args) -> int:
    if args.aim:
        try:
            u, v = (float(x) for x in args.aim.split(","))
        except ValueError as exc:
            raise ConfigError("--aim expects U,V") from exc
        angles = aim.optimize(aim.SiamParams(u, v), args.seed or 0)
        circuit = aim.build(args.arm, angles, args.basis)
    else:
        try:
            lc = cc.LogicalCircuit(cc.PrepKind.parse(args.prep), tuple(args.layers.split()), args.basis)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        circuit = gm.compile_arm(lc, args.arm)
    _emit(cc.dumps(circuit), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="c4sim", description="[[4,2,2]] logical-qubit simulation workbench")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gottesman", help="benchmark corpus, logical vs physical TVD")
    _common(g)
    g.add_argument("--exact", action="store_true", help="exact distributions instead of sampling")
    g.add_argument("--generate", metavar="T,R,P", help="use freshly generated type-1/type-2 families")
    g.set_defaults(func=cmd_gottesman)

    a = sub.add_parser("aim", help="Anderson impurity model energies over the parameter grid")
    a.add_argument("action", nargs="?", choices=("run",), default="run")
    _common(a)
    a.add_argument("--exact", action="store_true")
    a.add_argument("--scan-gr", metavar="MRAD,...", help="exact TVD scan over GR over-rotation values in mrad")
    a.set_defaults(func=cmd_aim)

    t = sub.add_parser("tomo", help="Bell-state tomography with parity projections")
    _common(t, shots_default=2000)
    t.add_argument("--dataset", help="reconstruct from a saved dataset instead of simulating")
    t.add_argument("--save-dataset", help="write the simulated dataset as JSON")
    t.add_argument("--steps", type=int, default=20000)
    t.add_argument("--burn-in", type=int, default=5000)
    t.set_defaults(func=cmd_tomo)

    f = sub.add_parser("ftcheck", help="exhaustive single-fault sweep")
    f.add_argument("--out", default=None)
    f.add_argument("--circuit", help="check one circuit file instead of the built-in set")
    f.add_argument("--basis", choices=("Z", "X"), default="Z")
    f.add_argument("--no-corpus", action="store_true", help="skip the 147 corpus circuits")
    f.set_defaults(func=cmd_ftcheck)

    d = sub.add_parser("dump-circuit", help="print a compiled native circuit")
    d.add_argument("--prep", default="PREP_00")
    d.add_argument("--layers", default="")
    d.add_argument("--basis", choices=("Z", "X"), default="Z")
    d.add_argument("--arm", choices=("logical", "physical"), default="logical")
    d.add_argument("--aim", metavar="U,V", help="dump the AIM circuit at these parameters")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_dump)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, nm.NoiseConfigError) as exc:
        print(f"c4sim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
