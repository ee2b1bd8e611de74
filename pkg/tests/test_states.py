import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from c4sim.sim import states as st


def test_level_index_site0_most_significant():
    assert st.level_index([1, 0]) == 5
    assert st.level_index([0, 4]) == 4


def test_qubit_indices_two_sites():
    assert list(st.qubit_indices(2)) == [0, 1, 5, 6]


def test_density_validate_rejects_bad():
    rho = st.DensityMatrix.basis([0])
    rho.validate()
    bad = st.DensityMatrix(1, np.diag([1.2, -0.2, 0, 0, 0]))
    assert not bad.is_valid()


def test_kraus_rejects_non_tp():
    with pytest.raises(ValueError):
        st.KrausChannel([0.5 * np.eye(5)])


def test_cz_phases_only_on_q1q1():
    ph = st.cz_phases(2, 0, 1)
    assert ph[st.level_index([1, 1])] == -1
    assert ph[st.level_index([1, 3])] == 1
    assert (ph == -1).sum() == 1


def test_apply_cz_pure_and_density_agree():
    v = np.random.default_rng(0).normal(size=25) + 0j
    v /= np.linalg.norm(v)
    psi = st.PureState(2, v)
    out_p = st.apply_cz(psi, 0, 1)
    out_r = st.apply_cz(st.DensityMatrix.from_pure(psi), 0, 1)
    assert np.allclose(np.outer(out_p.amplitudes, out_p.amplitudes.conj()), out_r.data)


def test_apply_channel_matches_embedding():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    u2, _ = np.linalg.qr(a)
    rho = st.DensityMatrix.basis([0, 1, 2])
    direct = st.apply_unitary(rho, st.lift_qubit_operator(u2), [1])
    full = st.embed_single_qubit(u2, 1, 3)
    assert np.allclose(direct.data, full @ rho.data @ full.conj().T)


def test_measure_terminal_basis_states():
    out = st.measure_terminal(st.DensityMatrix.basis([1, 4, 2]), 0.0, 0.0)
    assert out[st.Readout.BRIGHT, st.Readout.LOST, st.Readout.DARK] == pytest.approx(1.0)


def test_readout_effects_sum_to_identity():
    assert np.allclose(st.readout_effects(0.01, 0.03).sum(axis=0), 1.0)


def test_shot_record_bits():
    rec = st.ShotRecord.from_index(2 * 9 + 0 * 3 + 1, 3)
    assert rec.has_loss
    assert rec.bitstring() == "L01"
    assert rec.bits == (None, 0, 1)


@settings(max_examples=30, deadline=None)
@given(hs.lists(hs.integers(0, 4), min_size=1, max_size=3), hs.floats(0, 0.1), hs.floats(0, 0.1))
def test_measure_terminal_normalised(levels, e0, e1):
    out = st.measure_terminal(st.DensityMatrix.basis(levels), e0, e1)
    assert out.sum() == pytest.approx(1.0)
    assert out.min() >= 0
