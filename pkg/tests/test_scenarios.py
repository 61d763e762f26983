import math

import numpy as np
import pytest

from protective.errors import ContractViolation, DegenerateSpectrum, IncompleteTomography
from protective.linalg import StateVector
from protective.measurement import PointerPreparation
from protective.model import SIGMA_X, SIGMA_Y, SIGMA_Z, build_apparatus, build_system
from protective.scenarios import (
    REFERENCE_GRID,
    SCENARIOS,
    reference_qubit_setup,
    scenario_adiabatic_retune,
    scenario_protective,
    scenario_sweep,
    scenario_tomography,
    scenario_two_box,
    scenario_von_neumann,
    two_box_model,
)


@pytest.fixture(scope="module")
def two_box_report():
    return scenario_two_box(0.5, (100.0, 300.0, 1000.0))


def test_two_box_model_invariants():
    m = two_box_model(0.25)
    root2 = math.sqrt(2)
    np.testing.assert_allclose(m.phi_plus.amplitudes, (m.phi_left.amplitudes + m.phi_right.amplitudes) / root2)
    np.testing.assert_allclose(m.phi_minus.amplitudes, (m.phi_left.amplitudes - m.phi_right.amplitudes) / root2)
    assert m.phi_minus.expectation(m.system.h) - m.phi_plus.expectation(m.system.h) == pytest.approx(0.5)
    want = -np.outer(m.phi_left.amplitudes, m.phi_left.amplitudes.conj()) + np.outer(
        m.phi_right.amplitudes, m.phi_right.amplitudes.conj())
    np.testing.assert_allclose(m.o_box.matrix, want, atol=1e-15)


def test_two_box_verdicts(two_box_report):
    r = two_box_report
    assert r.passed, [v.line() for v in r.verdicts if not v.passed]
    assert r.verdict("otilde_zero").value <= 1e-12
    assert r.verdict("protective_phi_plus_null_shift").value <= 1e-4
    assert r.verdict("protective_phi_left_null_shift").value <= 1e-3
    assert r.verdict("von_neumann_bimodal").value <= 1e-6


def test_two_box_trends(two_box_report):
    t = two_box_report.table("two_box_sweep")
    dist = t.column("marginal_distance_left_plus")
    assert all(b < a for a, b in zip(dist, dist[1:]))
    fid = t.column("fidelity_phi_plus")
    assert fid[-1] > fid[0] and fid[-1] >= 1 - 1e-6


def test_two_box_rejects_nonpositive_epsilon():
    with pytest.raises(ContractViolation):
        two_box_model(0.0)


def test_tomography_reconstructs_both_levels():
    system = build_system(np.diag([0.0, 1.0]))
    for n in range(2):
        r = scenario_tomography(system, n, [SIGMA_X, SIGMA_Y, SIGMA_Z], 1e3)
        assert r.verdict("reconstruction_fidelity").value >= 1 - 1e-3
        assert r.verdict("sequential_fidelity_product").value >= 1 - 1e-2
        assert r.passed


def test_tomography_residual_falls_along_doubling_sweep():
    system = build_system(np.array([[0.0, 0.3], [0.3, 1.0]]))
    paulis = [SIGMA_X, SIGMA_Y, SIGMA_Z]
    residuals = [scenario_tomography(system, 0, paulis, tau).records[0]["residual"]
                 for tau in (125.0, 250.0, 500.0, 1000.0)]
    assert all(b < a for a, b in zip(residuals, residuals[1:]))


def test_tomography_needs_complete_observables():
    with pytest.raises(IncompleteTomography):
        scenario_tomography(build_system(np.diag([0.0, 1.0])), 0, [SIGMA_X, SIGMA_Z], 100.0)


def test_retune_identity_path_tracks_perfectly():
    h = build_system(np.array([[0.0, 0.2], [0.2, 1.0]]))
    r = scenario_adiabatic_retune(h, h, ramp_steps=20, ramp_time=5.0)
    assert min(r.table("retune_track").column("tracking_fidelity")) == pytest.approx(1.0, abs=1e-12)


def test_retune_slow_and_sudden():
    h0, h1 = build_system(SIGMA_Z), build_system(SIGMA_X)
    slow = scenario_adiabatic_retune(h0, h1, 400, 50.0)
    assert slow.verdict("slow_ramp_tracking").value >= 0.99
    sudden = scenario_adiabatic_retune(h0, h1, 400, 0.0)
    assert sudden.verdict("sudden_switch_overlap").passed
    assert sudden.records[0]["final_fidelity"] == pytest.approx(0.5, abs=1e-12)


def test_retune_matches_four_times_finer_integration():
    h0, h1 = build_system(SIGMA_Z), build_system(SIGMA_X)
    coarse = scenario_adiabatic_retune(h0, h1, 400, 50.0).records[0]["final_fidelity"]
    fine = scenario_adiabatic_retune(h0, h1, 1600, 50.0).records[0]["final_fidelity"]
    assert coarse == pytest.approx(fine, abs=1e-6)


def test_retune_infidelity_decreases_with_ramp_time():
    h0, h1 = build_system(SIGMA_Z), build_system(SIGMA_X)
    infid = [1 - scenario_adiabatic_retune(h0, h1, 800, t).records[0]["final_fidelity"]
             for t in (10.0, 20.0, 50.0, 100.0)]
    assert all(b < a for a, b in zip(infid, infid[1:]))


def test_retune_gap_closure_is_located():
    with pytest.raises(DegenerateSpectrum) as info:
        scenario_adiabatic_retune(build_system(SIGMA_Z), build_system(-SIGMA_Z), 4, 1.0)
    assert "s=0.5" in info.value.location


def test_protective_and_von_neumann_reports():
    setup = reference_qubit_setup(SIGMA_Z, tau=100.0)
    p = scenario_protective(setup, setup.system.eigenstate(0))
    assert p.passed and p.records[0]["pointer_shift"] == pytest.approx(1.0, abs=1e-6)
    vn = scenario_von_neumann(setup.system, build_apparatus(256, 1 / 32), SIGMA_Z, StateVector.normalized([1, 1]),
                              PointerPreparation(0.0, 0.15))
    assert vn.passed and vn.records[0]["branch_0_weight"] == pytest.approx(0.5, abs=1e-9)


def test_sweep_report_dichotomy():
    r = scenario_sweep(reference_qubit_setup(SIGMA_X), REFERENCE_GRID)
    assert r.passed
    assert min(r.table("convergence").column("norm_diff")) >= 0.1
    assert r.parameters["commutator_norm"] == pytest.approx(1.0)


def test_scenario_catalogue():
    assert set(SCENARIOS) == {"protective", "two_box", "tomography", "retune", "von_neumann", "sweep"}
