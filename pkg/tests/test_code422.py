import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from c4sim import circuits as cc
from c4sim import code422


def test_codewords_are_stabilised_and_orthonormal():
    words = [code422.codeword(a, b) for a, b in itertools.product((0, 1), repeat=2)]
    gram = np.array([[np.vdot(u, v) for v in words] for u in words])
    assert np.allclose(gram, np.eye(4))
    for w in words:
        assert np.allclose(code422.XXXX @ w, w)
        assert np.allclose(code422.ZZZZ @ w, w)


def test_logical_operators_act_on_codewords():
    z1, x2 = code422.pauli_string("ZZII"), code422.pauli_string("XXII")
    assert np.allclose(z1 @ code422.codeword(1, 0), -code422.codeword(1, 0))
    assert np.allclose(x2 @ code422.codeword(0, 0), code422.codeword(0, 1))


def test_bell_codeword_support():
    v = code422.logical_bell_codeword()
    support = {format(i, "04b") for i in np.nonzero(np.abs(v) > 1e-12)[0]}
    assert support == {"0000", "1111", "0110", "1001"}


@pytest.mark.parametrize(
    "bits,logical",
    [("0000", (0, 0)), ("1111", (0, 0)), ("0011", (0, 1)), ("0101", (1, 0)), ("1001", (1, 1))],
)
def test_decode_z(bits, logical):
    r = code422.decode_z(bits)
    assert r.accepted and r.logical == logical


def test_decode_odd_parity_rejected():
    for bits in ("0001", "0111", "1000"):
        assert code422.decode_z(bits).status is code422.DecodeStatus.REJECTED_PARITY
        assert code422.decode_x(bits).status is code422.DecodeStatus.REJECTED_PARITY


def test_decode_shot_check_order():
    data, flags = (0, 1, 2, 3), (4,)
    assert code422.decode_shot((2, 0, 0, 0, 1), data, flags, "Z").status is code422.DecodeStatus.REJECTED_LOSS
    assert code422.decode_shot((1, 0, 0, 0, 1), data, flags, "Z").status is code422.DecodeStatus.REJECTED_FLAG
    assert code422.decode_shot((0, 0, 0, 0, 0), data, flags, "Z").accepted


def test_bad_bits():
    with pytest.raises(ValueError):
        code422.decode_z("012")


@settings(max_examples=50, deadline=None)
@given(hs.lists(hs.integers(0, 1), min_size=4, max_size=4), hs.integers(0, 3))
def test_single_bit_flip_always_detected(bits, k):
    flipped = list(bits)
    flipped[k] ^= 1
    assert code422.decode_z(bits).accepted != code422.decode_z(flipped).accepted


def test_postselect_table_bookkeeping():
    table = np.zeros((3,) * 5)
    table[0, 0, 0, 0, 0] = 10
    table[1, 1, 1, 1, 0] = 5
    table[1, 0, 0, 0, 0] = 3  # parity
    table[0, 0, 0, 0, 1] = 2  # flag
    table[2, 0, 0, 0, 0] = 1  # loss
    ct = code422.postselect_table(table, (0, 1, 2, 3), (4,), "Z")
    assert list(ct.counts) == [15, 0, 0, 0]
    assert ct.rejected_parity == 3 and ct.rejected_flag == 2 and ct.rejected_loss == 1
    assert ct.retained_fraction == pytest.approx(15 / 21)


def test_postselect_empty():
    with pytest.raises(ValueError):
        code422.postselect_table(np.zeros((3,) * 4), (0, 1, 2, 3), ())


def test_all_rejected_distribution_raises():
    table = np.zeros((3,) * 4)
    table[1, 0, 0, 0] = 4
    ct = code422.postselect_table(table, (0, 1, 2, 3), ())
    with pytest.raises(ValueError):
        ct.distribution()


@pytest.mark.parametrize("prep", list(cc.PrepKind))
def test_ft_prep_only(prep):
    rep = code422.ft_check(cc.LogicalCircuit(prep, ()))
    assert rep.passed and rep.n_insertions > 0


def test_ft_detects_corrupted_template():
    # an unflagged two-qubit entangler that lets one fault flip a logical outcome
    lc = cc.LogicalCircuit(cc.PrepKind.PREP_00, ("CX",))
    good = cc.compile_encoded(lc)
    bad_gates = tuple(g for g in good.gates) + (
        cc.GlobalRotation(math.pi / 2, math.pi / 2),
        cc.CZGate(0, 1),
        cc.GlobalRotation(-math.pi / 2, math.pi / 2),
    )
    bad = cc.NativeCircuit(good.n_sites, bad_gates, good.data_sites, (), good.prep_length)
    rep = code422.ft_check_circuit(bad, "Z")
    assert not rep.passed


def test_logical_density_of_codeword():
    v = code422.logical_bell_codeword()
    rho = np.outer(v, v.conj())
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    for mode in ("trace", "project"):
        out = code422.logical_density(rho, True, mode)
        assert np.allclose(out, np.outer(bell, bell))


def test_logical_density_rejects_bad_mode():
    with pytest.raises(ValueError):
        code422.logical_density(np.eye(16) / 16, True, "nope")


def test_projection_removes_detectable_error():
    v = code422.logical_bell_codeword()
    x0 = code422.pauli_string("XIII")
    rho = 0.8 * np.outer(v, v.conj()) + 0.2 * np.outer(x0 @ v, (x0 @ v).conj())
    out = code422.logical_density(rho, True, "trace")
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.real(bell @ out @ bell) == pytest.approx(1.0)


def test_postselect_records_roundtrip():
    from c4sim.sim.states import ShotRecord

    recs = [ShotRecord.from_index(0, 5)] * 3
    ct, frac = code422.postselect(recs, cc.PrepKind.PREP_00)
    assert frac == 1.0 and ct.counts[0] == 3
