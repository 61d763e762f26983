import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from protective.errors import ContractViolation, IncompleteTomography, InconsistentExpectations, ReadoutError
from protective.linalg import StateVector
from protective.measurement import (
    PointerPreparation,
    gell_mann_basis,
    phase_blindness_distance,
    pointer_marginal,
    readout_pointer,
    reconstruct_state,
    run_protective,
    run_von_neumann,
)
from protective.model import SIGMA_X, SIGMA_Y, SIGMA_Z, MeasurementSetup, SwitchProfile, build_apparatus, build_system

QUBIT = build_system(np.diag([0.0, 1.0]))


@pytest.fixture(scope="module")
def reference_app():
    return build_apparatus(256, 0.125, 1e3)


def setup_for(app, o, tau=1e3):
    return MeasurementSetup(QUBIT, app, o, SwitchProfile("ideal_constant", tau))


@pytest.mark.parametrize("n, expected", [(0, 1.0), (1, -1.0)])
def test_protected_eigenstates_read_out_their_expectation(reference_app, n, expected):
    rec = run_protective(setup_for(reference_app, SIGMA_Z), QUBIT.eigenstate(n), PointerPreparation())
    assert rec.pointer_shift == pytest.approx(expected, abs=1e-6)
    assert rec.system_fidelity >= 1 - 1e-8
    assert rec.entropy <= 1e-8
    assert rec.expected_value_reported == rec.pointer_shift


def test_noncommuting_observable_reads_diagonal_element(reference_app):
    # <0|sigma_x|0> = 0: the pointer barely moves and the state is almost untouched
    rec = run_protective(setup_for(reference_app, SIGMA_X), QUBIT.eigenstate(0), PointerPreparation())
    assert abs(rec.pointer_shift) < 1e-3
    assert rec.system_fidelity > 1 - 1e-5


def test_superposition_entangles_with_well_separated_pointer(reference_app):
    state = StateVector.normalized([1, 1])
    sigma, d = 0.5, 2.0
    rec = run_protective(setup_for(reference_app, SIGMA_Z), state, PointerPreparation(0.0, sigma))
    # Gaussian branches d apart overlap by exp(-d^2 / 8 sigma^2); Schmidt weights (1 +- overlap) / 2
    ov = math.exp(-d**2 / (8 * sigma**2))
    lam = np.array([(1 + ov) / 2, (1 - ov) / 2])
    assert rec.entropy == pytest.approx(-np.sum(lam * np.log(lam)), abs=1e-8)
    assert rec.entropy >= 0.5
    assert rec.pointer_shift == pytest.approx(0.0, abs=1e-9)
    # coherence shrinks to the branch overlap (its phase carries e^{-i tau (E_1 - E_0)})
    assert abs(rec.system_density()[0, 1]) == pytest.approx(ov / 2, abs=1e-8)


def test_readout_refuses_edge_mass():
    app = build_apparatus(64, 0.125)
    setup = MeasurementSetup(QUBIT, app, 6.0 * SIGMA_Z, SwitchProfile("ideal_constant", 10.0))
    with pytest.raises(ReadoutError, match="edge"):
        run_protective(setup, QUBIT.eigenstate(0), PointerPreparation(0.0, 0.3))


def test_pointer_preparation_contracts(reference_app):
    with pytest.raises(ContractViolation):
        PointerPreparation(0.0, 0.0)
    with pytest.raises(ContractViolation, match="4 sigma"):
        PointerPreparation(14.0, 1.0).packet(reference_app)


def test_readout_of_translated_packet(reference_app):
    ref = PointerPreparation(0.0, 1.0).packet(reference_app)
    moved = PointerPreparation(2.5, 1.0).packet(reference_app)
    assert readout_pointer(moved, reference_app, ref) == pytest.approx(2.5, abs=1e-12)
    assert pointer_marginal(ref, reference_app).sum() == pytest.approx(1.0)
    with pytest.raises(ContractViolation):
        pointer_marginal(np.ones(100), reference_app)


def test_von_neumann_branch_weights_follow_born_rule():
    app = build_apparatus(256, 1 / 32)
    c = np.array([math.sqrt(0.3), math.sqrt(0.7) * 1j])
    rec = run_von_neumann(QUBIT, app, SIGMA_Z, StateVector.normalized(c), PointerPreparation(0.0, 0.15), 1.0)
    assert rec.branch_positions == (-1.0, 1.0)
    np.testing.assert_allclose(rec.branch_weights, [0.7, 0.3], atol=1e-9)
    assert rec.pointer_shift == pytest.approx(0.3 - 0.7, abs=1e-9)
    assert not rec.warnings
    assert rec.entropy > 0.6


def test_von_neumann_warns_on_overlapping_branches(caplog):
    app = build_apparatus(512, 1 / 32)
    rec = run_von_neumann(QUBIT, app, SIGMA_Z, StateVector.normalized([1, 1]), PointerPreparation(0.0, 0.5), 0.5)
    assert rec.warnings and "overlap" in rec.warnings[0]
    assert "overlap" in caplog.text


def test_phase_blindness_for_commuting_observable(reference_app):
    d = phase_blindness_distance(setup_for(reference_app, SIGMA_Z), [0.6, 0.8j], PointerPreparation())
    assert d <= 1e-10


def test_gell_mann_basis_orthonormal():
    for dim in (2, 3, 4):
        g = gell_mann_basis(dim)
        assert len(g) == dim**2 - 1
        gram = np.array([[np.trace(a @ b) for b in g] for a in g])
        np.testing.assert_allclose(gram, 2 * np.eye(len(g)), atol=1e-14)
        assert all(abs(np.trace(a)) < 1e-14 for a in g)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_reconstruction_recovers_pure_states(seed, dim):
    rng = np.random.default_rng(seed)
    psi = StateVector.normalized(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    data = [(g, psi.expectation(g)) for g in gell_mann_basis(dim)]
    rec = reconstruct_state(data, dim)
    assert abs(rec.state.overlap(psi)) ** 2 == pytest.approx(1.0, abs=1e-10)
    assert rec.residual < 1e-10
    assert rec.purity == pytest.approx(1.0, abs=1e-10)


def test_pauli_tomography_of_qubit():
    psi = StateVector.normalized([1, 1j])
    rec = reconstruct_state([(o, psi.expectation(o)) for o in (SIGMA_X, SIGMA_Y, SIGMA_Z)], 2)
    assert abs(rec.state.overlap(psi)) == pytest.approx(1.0)


def test_incomplete_tomography():
    with pytest.raises(IncompleteTomography, match="2 of the 3"):
        reconstruct_state([(SIGMA_X, 0.0), (SIGMA_Z, 1.0)], 2)
    with pytest.raises(IncompleteTomography):
        reconstruct_state([(SIGMA_X, 0.0), (2 * SIGMA_X, 0.0), (SIGMA_Z, 1.0)], 2)


def test_inconsistent_expectations():
    # Bloch vector of length sqrt(3): no pure state matches
    with pytest.raises(InconsistentExpectations) as info:
        reconstruct_state([(SIGMA_X, 1.0), (SIGMA_Y, 1.0), (SIGMA_Z, 1.0)], 2)
    assert info.value.residual > info.value.tolerance


def test_reconstruction_shape_mismatch():
    with pytest.raises(ContractViolation):
        reconstruct_state([(np.eye(3), 1.0)], 2)


def test_run_record_scalars(reference_app):
    rec = run_protective(setup_for(reference_app, SIGMA_Z, tau=10.0), QUBIT.eigenstate(0), PointerPreparation())
    s = rec.scalars()
    assert s["kind"] == "protective" and s["tau"] == 10.0
    np.testing.assert_allclose(rec.system_density(), np.diag([1.0, 0.0]), atol=1e-12)
    assert np.trace(rec.apparatus_density()).real == pytest.approx(1.0)
