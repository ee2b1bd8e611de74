import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from c4sim import aim
from c4sim import code422
from c4sim import noise as nm

angle = hs.floats(0, 2 * math.pi, allow_nan=False)


def test_grid_is_three_by_three():
    g = aim.grid()
    assert len(g) == 9 and len({(p.U, p.V) for p in g}) == 9


@pytest.mark.parametrize("p", aim.grid())
def test_half_filling_block_matches_two_qubit_form(p):
    block = aim.half_filling_block(aim.bk_hamiltonian(p))
    assert np.allclose(block, aim.h2q_matrix(p))


@pytest.mark.parametrize("p", aim.grid())
def test_exact_energy_is_lowest_eigenvalue(p):
    assert np.linalg.eigvalsh(aim.h2q_matrix(p))[0] == pytest.approx(aim.exact_ground_energy(p), abs=1e-12)


def test_ground_state_is_in_the_block():
    # the full 16-dim Hamiltonian may go lower, but the physical sector is the block
    p = aim.SiamParams(1, -1)
    assert aim.exact_ground_energy(p) == pytest.approx(-2.2656, abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(angle, angle, hs.sampled_from(aim.grid()))
def test_parameter_shift_matches_finite_difference(a, b, p):
    h = 1e-6
    g = aim.ansatz_gradient((a, b), p)
    fd = [
        (aim.ansatz_energy((a + h, b), p) - aim.ansatz_energy((a - h, b), p)) / (2 * h),
        (aim.ansatz_energy((a, b + h), p) - aim.ansatz_energy((a, b - h), p)) / (2 * h),
    ]
    assert np.allclose(g, fd, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(angle, angle)
def test_ansatz_normalised(a, b):
    assert np.linalg.norm(aim.ansatz_state((a, b))) == pytest.approx(1.0)


def test_angles_wrap():
    a = aim.AnsatzAngles(-0.5, 7.0)
    assert 0 <= a.alpha < 2 * math.pi and a.beta == pytest.approx(7.0 - 2 * math.pi)


@pytest.mark.parametrize("p", aim.grid())
def test_optimizer_reaches_exact(p):
    angles = aim.optimize(p)
    assert aim.ansatz_energy(angles, p) == pytest.approx(aim.exact_ground_energy(p), abs=1e-6)


def test_optimizer_raises_when_starved(monkeypatch):
    monkeypatch.setattr(aim, "exact_ground_energy", lambda p: -1e9)
    with pytest.raises(aim.AimError):
        aim.optimize(aim.SiamParams(1, -1), restarts=1)


@settings(max_examples=10, deadline=None)
@given(angle, angle, hs.sampled_from(aim.BASES))
def test_noiseless_circuits_reproduce_ansatz(a, b, basis):
    angles = aim.AnsatzAngles(a, b)
    want = aim.ideal_distribution(angles, basis)
    for arm in aim.ARMS:
        got = aim.circuit_counts(arm, angles, basis, nm.NoiseParams.zero()).distribution()
        assert np.allclose(got, want, atol=1e-9)


def test_encoded_circuit_decodes_ideal_statevector():
    angles = aim.AnsatzAngles(0.7, 1.1)
    c = aim.build("logical", angles, "X")
    assert np.allclose(code422.ideal_decoded(c, "X"), aim.ideal_distribution(angles, "X"), atol=1e-10)


def test_estimate_energy_from_exact_probs():
    p = aim.SiamParams(5, -1)
    angles = aim.optimize(p)
    res = aim.estimate_energy(aim.ideal_distribution(angles, "Z"), aim.ideal_distribution(angles, "X"), p)
    assert res.estimate == pytest.approx(res.exact, abs=1e-9)
    assert res.relative_error < 1e-9


def test_estimate_energy_rejects_empty():
    with pytest.raises(aim.AimError):
        aim.estimate_energy([0, 0, 0, 0], [1, 0, 0, 0], aim.SiamParams(1, 1))


def test_sem_shrinks_with_shots():
    p = aim.SiamParams(9, 7)
    pz, px = np.array([0.4, 0.1, 0.1, 0.4]), np.array([0.3, 0.2, 0.2, 0.3])
    small = aim.estimate_energy(pz * 100, px * 100, p).sem
    big = aim.estimate_energy(pz * 10000, px * 10000, p).sem
    assert big == pytest.approx(small / 10)


def test_gadget_windows_and_ft():
    angles = aim.AnsatzAngles(0.7, 1.1)
    z_rep, z_stray = aim.ft_check_encoded(angles, "Z")
    x_rep, x_stray = aim.ft_check_encoded(angles, "X")
    assert z_stray == [] and x_stray == []
    assert len(z_rep.violations) > 0
    assert set(aim.gadget_windows(aim.build("logical", angles, "X"))) == {aim.TOP, aim.BOTTOM}


def test_geometric_mean():
    assert aim.geometric_mean([1e-2, 1e-4]) == pytest.approx(1e-3)
    assert aim.geometric_mean([0.0, 1.0]) == pytest.approx(math.sqrt(1e-15))


def test_run_grid_noiseless_exact():
    rows, summary = aim.run_grid(nm.NoiseParams.zero())
    assert len(rows) == 18
    assert max(r.result.relative_error for r in rows) < 1e-3
    assert set(summary) == set(aim.ARMS)


def test_reversed_circuits_helper():
    rows = [
        aim.ScanRow(0.01, 1, 1, "Z", "logical", 0.2),
        aim.ScanRow(0.01, 1, 1, "Z", "physical", 0.1),
        aim.ScanRow(0.01, 1, 1, "X", "logical", 0.05),
        aim.ScanRow(0.01, 1, 1, "X", "physical", 0.1),
    ]
    assert aim.reversed_circuits(rows, 0.01) == [(1, 1, "Z")]
