import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from c4sim import circuits as cc
from c4sim import noise as nm
from c4sim.sim import exact, kernels, trajectory
from c4sim.sim.program import compile_program
from c4sim.sim.states import SimulationError

from conftest import dense_reference

gates = hs.one_of(
    hs.builds(cc.GlobalRotation, hs.floats(-math.pi, math.pi), hs.floats(-math.pi, math.pi)),
    hs.builds(cc.LocalZ, hs.integers(0, 2), hs.floats(-math.pi, math.pi)),
    hs.sampled_from([cc.CZGate(0, 1), cc.CZGate(1, 2), cc.CZGate(0, 2)]),
    hs.sampled_from([cc.Relabel((1, 0, 2)), cc.Relabel((2, 0, 1))]),
    hs.just(cc.VirtualGlobalZ()),
)


def _circuit(gs, n=3):
    return cc.NativeCircuit(n, tuple(gs), data_sites=tuple(range(n)))


@settings(max_examples=25, deadline=None)
@given(hs.lists(gates, max_size=8))
def test_exact_matches_dense_reference(gs):
    c = _circuit(gs)
    p = nm.NoiseParams()
    assert np.allclose(exact.exact_distribution(c, p), dense_reference(c, p), atol=1e-12)


def test_exact_density_is_valid_state():
    c = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_BELL, ("HH",)))
    rho = exact.exact_density(c, nm.NoiseParams())
    rho.validate()


def test_exact_noiseless_bell():
    c = cc.compile_unencoded(cc.LogicalCircuit(cc.PrepKind.PREP_BELL, ()))
    p = exact.exact_distribution(c, None)
    assert p[0, 0] == pytest.approx(0.5) and p[1, 1] == pytest.approx(0.5)


def test_exact_rejects_too_many_sites():
    with pytest.raises(SimulationError):
        exact.evolve(_circuit([], 7))


def test_pick_backend():
    assert trajectory.pick_backend("auto", 6) == "exact"
    assert trajectory.pick_backend("auto", 7) == "trajectory"
    with pytest.raises(SimulationError):
        trajectory.pick_backend("exact", 7)
    with pytest.raises(SimulationError):
        trajectory.pick_backend("magic", 2)


def test_kernels_agree_bitwise():
    c = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_0PLUS, ("CX", "HH")))
    prog = compile_program(c, nm.NoiseParams())
    u = np.random.default_rng(3).random((500, prog.n_uniforms))
    a = np.asarray(kernels.python_kernel(prog, u))
    b = np.asarray(kernels.run_shots(prog, u))
    assert np.array_equal(a, b)


def test_trajectory_matches_exact_statistically():
    c = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_BELL, ("CZ",)))
    p = nm.scaled(nm.NoiseParams(), {"gr_overrotation": 0.2})
    n = 40000
    counts = trajectory.sample_counts(c, p, n, seed=11, backend="trajectory")
    ref = exact.exact_distribution(c, p)
    emp = counts / n
    # six-sigma per cell
    sigma = np.sqrt(ref * (1 - ref) / n) + 1e-12
    assert np.all(np.abs(emp - ref) < 6 * sigma + 1e-4)


def test_trajectory_independent_of_workers():
    c = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_00, ("XI",)))
    a = trajectory.trajectory_codes(c, nm.NoiseParams(), 9000, seed=5, workers=1)
    b = trajectory.trajectory_codes(c, nm.NoiseParams(), 9000, seed=5, workers=3)
    assert np.array_equal(a, b)


def test_trajectory_kernel_choice_does_not_change_records():
    c = cc.compile_unencoded(cc.LogicalCircuit(cc.PrepKind.PREP_BELL, ("HH",)))
    a = trajectory.trajectory_codes(c, nm.NoiseParams(), 3000, seed=2, kernel="numpy")
    b = trajectory.trajectory_codes(c, nm.NoiseParams(), 3000, seed=2, kernel="auto")
    assert np.array_equal(a, b)


def test_sample_counts_total_and_seeded():
    c = cc.compile_encoded(cc.LogicalCircuit(cc.PrepKind.PREP_00, ()))
    a = trajectory.sample_counts(c, nm.NoiseParams(), 1000, seed=1)
    b = trajectory.sample_counts(c, nm.NoiseParams(), 1000, seed=1)
    assert a.sum() == 1000 and np.array_equal(a, b)


def test_sample_shots_records():
    c = cc.compile_unencoded(cc.LogicalCircuit(cc.PrepKind.PREP_00, ()))
    recs = trajectory.sample_shots(c, nm.NoiseParams.zero(), 50, seed=0)
    assert all(r.bitstring() == "00" for r in recs)
