import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from protective.diagnostics import (
    CSV_COLUMNS,
    ConvergenceTable,
    commutator_norm,
    conservation_scan,
    coupling_commutator_norm,
    default_p_grid,
    fit_loglog_slope,
    instantaneous_commutator,
    joint_hs_commutator,
    matrix_element_scan,
    p_resolved_check,
    sandwich_identity_defects,
)
from protective.errors import ContractViolation
from protective.linalg import StateVector
from protective.measurement import PointerPreparation
from protective.model import SIGMA_X, SIGMA_Z, MeasurementSetup, SwitchProfile, build_system

QUBIT = build_system(np.diag([0.0, 1.0]))
GRID = (10.0, 30.0, 100.0, 300.0)


def setup_for(app, o, tau=10.0, kind="ideal_constant"):
    return MeasurementSetup(QUBIT, app, o, SwitchProfile(kind, tau))


def test_commutator_norm_closed_form():
    # [sigma_x, diag(0, 1)] = [[0, 1], [-1, 0]]
    assert commutator_norm(SIGMA_X, np.diag([0.0, 1.0])) == pytest.approx(1.0)
    assert commutator_norm(SIGMA_Z, np.diag([0.0, 1.0])) == 0.0
    with pytest.raises(ContractViolation):
        commutator_norm(np.eye(2), np.eye(3))


def test_scan_dichotomy(small_apparatus):
    x = conservation_scan(setup_for(small_apparatus, SIGMA_X), GRID)
    z = conservation_scan(setup_for(small_apparatus, SIGMA_Z), GRID)
    assert min(x.norm_diff) > 0.1 and min(x.conservation_defect) > 1e-6
    assert max(z.norm_diff) < 1e-12 and max(z.conservation_defect) < 1e-12
    assert all(x.majorization_ok) and all(z.majorization_ok)


def test_matrix_element_defect_bounded_by_operator_norm(small_apparatus):
    chi = PointerPreparation(0.0, 1.5).packet(small_apparatus)
    t = matrix_element_scan(setup_for(small_apparatus, SIGMA_X), chi, (5.0, 50.0))
    for m, c in zip(t.matrix_element_defect, t.conservation_defect):
        assert m <= c + 1e-12


def test_scan_contracts(small_apparatus):
    setup = setup_for(small_apparatus, SIGMA_Z)
    with pytest.raises(ContractViolation, match="at least 4"):
        conservation_scan(setup, (1.0, 2.0, 3.0))
    with pytest.raises(ContractViolation, match="ascending"):
        conservation_scan(setup, (1.0, 3.0, 2.0, 4.0))
    with pytest.raises(ContractViolation, match="probe"):
        matrix_element_scan(setup, StateVector.basis(4, 0), GRID)


def test_table_csv_layout():
    t = ConvergenceTable((1.0, 2.0), (0.1, 0.2), (0.0, 1e-17), (0.3, 1 / 3))
    text = t.to_csv()
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[2] == "2,0.20000000000000001,1.0000000000000001e-17,0.33333333333333331"
    assert text.endswith("\n") and "\r" not in text
    assert [float(v) for v in lines[2].split(",")] == [2.0, 0.2, 1e-17, 1 / 3]
    assert t.as_table().column("norm_diff") == [0.1, 0.2]


def test_table_rejects_ragged_or_negative():
    with pytest.raises(ContractViolation):
        ConvergenceTable((1.0,), (0.1, 0.2), (0.0,), (0.0,))
    with pytest.raises(ContractViolation):
        ConvergenceTable((1.0,), (-0.1,), (0.0,), (0.0,))


def test_coupling_commutator_scales_as_inverse_tau(small_apparatus):
    grid = (10.0, 30.0, 100.0, 300.0, 1000.0)
    setup = setup_for(small_apparatus, SIGMA_X)
    dense = [instantaneous_commutator(setup.with_tau(t), t / 2) for t in grid]
    factored = [coupling_commutator_norm(setup.with_tau(t)) for t in grid]
    np.testing.assert_allclose(dense, factored, rtol=1e-10)
    assert fit_loglog_slope(grid, dense) == pytest.approx(-1.0, abs=1e-10)
    assert joint_hs_commutator(setup) == pytest.approx(factored[0] * 10.0, rel=1e-10)


def test_fit_slope_recovers_power_law():
    x = np.array([1.0, 2.0, 5.0, 10.0])
    assert fit_loglog_slope(x, 3 * x**-2.5) == pytest.approx(-2.5)


def test_p_resolved_check(small_apparatus):
    grid = default_p_grid(small_apparatus, 16)
    assert grid[0] == small_apparatus.momenta.min() and len(grid) == 16
    assert p_resolved_check(QUBIT, SIGMA_Z, grid, 100.0) < 1e-12
    assert p_resolved_check(QUBIT, SIGMA_X, grid, 100.0) > 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_sandwich_identity_defects_vanish(seed, dim):
    rng = np.random.default_rng(seed)
    comm, diag = sandwich_identity_defects(build_system(random_hermitian(rng, dim)), random_hermitian(rng, dim))
    assert comm <= 1e-10 and diag <= 1e-12
