import csv
import io
import json
from pathlib import Path

import pytest

from c4sim import circuits as cc
from c4sim import cli
from c4sim import noise as nm

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"


def _rows(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


def test_noise_loading_and_overrides(tmp_path):
    assert cli.load_noise("zero", []) == nm.NoiseParams.zero()
    assert cli.load_noise(str(CONFIGS / "default.json"), []) == nm.NoiseParams()
    p = cli.load_noise("default", ["gr_overrotation=0.0086"])
    assert p.gr_overrotation == 0.0086
    for bad in (["gr_overrotation"], ["gr_overrotation=abc"], ["nope=1"]):
        with pytest.raises(cli.ConfigError):
            cli.load_noise("default", bad)
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(cli.ConfigError):
        cli.load_noise(str(tmp_path / "broken.json"), [])


def test_number_format():
    assert cli._num(0.1234567891234) == "0.123456789"
    assert cli._num(1050) == "1050"
    assert cli._num(float("inf")) == "inf"


@pytest.mark.parametrize(
    "argv",
    [
        ["gottesman", "--shots", "10"],
        ["gottesman", "--exact", "--noise", "missing.json"],
        ["gottesman", "--exact", "--set", "meas_eps0=2"],
        ["aim", "--shots", "100"],
        ["tomo", "--shots", "10"],
        ["tomo", "--seed", "1", "--steps", "10", "--burn-in", "20", "--noise", "zero"],
    ],
)
def test_invalid_config_exits_2(argv):
    assert cli.main(argv) == 2


def test_gottesman_rows_and_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["gottesman", "--shots", "200", "--seed", "7", "--out", str(a)]) == 0
    assert cli.main(["gottesman", "--shots", "200", "--seed", "7", "--workers", "3", "--out", str(b)]) == 0
    rows = _rows(a)
    assert len(rows) == 294
    assert list(rows[0]) == ["index", "prep", "arm", "shots", "retained_fraction", "tvd", "ci_low", "ci_high"]
    assert a.read_bytes() == b.read_bytes()


def test_gottesman_exact_default_noise_advantage(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["gottesman", "--exact", "--out", str(out)]) == 0
    rows = [r for r in _rows(out) if r["prep"] == "PREP_00"]
    mean = {arm: sum(float(r["tvd"]) for r in rows if r["arm"] == arm) / 49 for arm in ("logical", "physical")}
    assert mean["logical"] < mean["physical"]


def test_gottesman_generate(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["gottesman", "--exact", "--generate", "4,1,2", "--seed", "1", "--out", str(out)]) == 0
    # (T*r + p*r) circuits, three preparations, two arms
    assert len(_rows(out)) == (4 + 2) * 3 * 2


def test_aim_noiseless_exact(tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert cli.main(["aim", "run", "--noise", "zero", "--exact", "--out", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == 18
    assert max(float(r["relative_error"]) for r in rows) < 1e-3
    assert "geometric-mean" in capsys.readouterr().out


def test_aim_gr_scan_summary(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert cli.main(["aim", "--scan-gr", "8.6,34.5", "--workers", "2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.count("mrad:") == 2
    assert len(_rows(out)) == 2 * 9 * 2 * 2


def test_tomo_dataset_roundtrip(tmp_path):
    ds, a, b = tmp_path / "d.json", tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["tomo", "--seed", "2", "--steps", "400", "--burn-in", "200"]
    assert cli.main(base + ["--shots", "100", "--save-dataset", str(ds), "--out", str(a)]) == 0
    assert cli.main(base + ["--dataset", str(ds), "--out", str(b)]) == 0
    assert [r["metric"] for r in _rows(a)] == ["physical", "logical_zzzz", "logical_zzzz_xxxx_trace", "logical_both"]
    assert a.read_bytes() == b.read_bytes()


def test_ftcheck_default_passes(tmp_path):
    out = tmp_path / "ft.json"
    assert cli.main(["ftcheck", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["violations"] == 0
    aim_entries = {e["circuit"]: e for e in rep["entries"] if e["circuit"].startswith("aim/")}
    assert aim_entries["aim/Z"]["documented"] > 0
    assert sorted(aim_entries["aim/X"]["gadget_windows"]) == ["4", "5"]


def test_ftcheck_corrupted_fixture_exits_3(tmp_path):
    out = tmp_path / "ft.json"
    assert cli.main(["ftcheck", "--circuit", str(FIXTURES / "corrupt_cx.circ"), "--out", str(out)]) == 3
    assert json.loads(out.read_text())["violations"] > 0


def test_dump_circuit_roundtrip(tmp_path, capsys):
    assert cli.main(["dump-circuit", "--prep", "0+", "--layers", "HH CX", "--basis", "X"]) == 0
    text = capsys.readouterr().out
    c = cc.loads(text)
    want = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_0PLUS, ("HH", "CX"), "X"))
    assert cc.dumps(c) == cc.dumps(want)


def test_dump_aim_circuit(capsys):
    assert cli.main(["dump-circuit", "--aim", "1,-1", "--basis", "X"]) == 0
    assert cc.loads(capsys.readouterr().out).n_sites == 6


def test_dump_bad_layers():
    assert cli.main(["dump-circuit", "--layers", "H1"]) == 2
