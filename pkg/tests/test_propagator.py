import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from protective.errors import AccuracyError, ContractViolation
from protective.linalg import StateVector, commutator, operator_norm, product_state, unitarity_defect
from protective.measurement import PointerPreparation
from protective.model import (
    SIGMA_X,
    SIGMA_Z,
    MeasurementSetup,
    SwitchProfile,
    TimeSlicing,
    build_system,
    total_hamiltonian,
)
from protective.propagator import (
    build_u_app,
    compare_propagators,
    conservation_defect,
    evolve_exact,
    evolve_exact_with_defect,
    sandwich_observable,
    slicing_defect,
)

QUBIT = np.diag([0.0, 1.0])


def qubit_setup(app, o, tau=5.0, kind="ideal_constant", n_steps=64):
    return MeasurementSetup(build_system(QUBIT), app, o, SwitchProfile(kind, tau, 0.1), TimeSlicing(n_steps))


@pytest.mark.parametrize("o", [SIGMA_X, SIGMA_Z, np.array([[0.2, 1j], [-1j, -0.7]])])
def test_blocks_match_dense_ideal(small_apparatus, o):
    setup = qubit_setup(small_apparatus, o)
    np.testing.assert_allclose(evolve_exact(setup), evolve_exact(setup, method="dense"), atol=1e-11)
    np.testing.assert_allclose(build_u_app(setup), build_u_app(setup, method="dense"), atol=1e-11)


def test_dense_ideal_matches_scipy_expm(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X, tau=3.0)
    gen = 3.0 * total_hamiltonian(setup, 1.0).matrix  # g = 1/tau on the plateau
    np.testing.assert_allclose(evolve_exact(setup, method="dense"), scipy.linalg.expm(-1j * gen), atol=1e-10)


def test_blocks_match_dense_time_ordered_product(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X, tau=4.0, kind="smooth_ramp", n_steps=16)
    u_blocks = evolve_exact(setup, check=False)
    u_dense = evolve_exact(setup, method="dense", check=False)
    np.testing.assert_allclose(u_blocks, u_dense, atol=1e-11)


def test_time_ordering_puts_later_slices_left(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X, tau=4.0, kind="smooth_ramp", n_steps=2)
    h1, h2 = (total_hamiltonian(setup, t).matrix for t in (1.0, 3.0))
    want = scipy.linalg.expm(-2j * h2) @ scipy.linalg.expm(-2j * h1)
    np.testing.assert_allclose(evolve_exact(setup, method="dense", check=False), want, atol=1e-10)


def test_commuting_protective_action_closed_form(small_apparatus):
    # U |n> chi = e^{-i tau E_n} |n> (x) e^{-i tau H_A} e^{-i lambda_n P} chi
    app = small_apparatus
    setup = qubit_setup(app, SIGMA_Z, tau=7.0)
    u = evolve_exact(setup)
    chi = PointerPreparation(0.0, 1.0).packet(app)
    for n, (energy, lam) in enumerate([(0.0, 1.0), (1.0, -1.0)]):
        want_a = app.free_evolution(7.0) @ scipy.linalg.expm(-1j * lam * app.P.matrix) @ chi.amplitudes
        want = np.exp(-7j * energy) * np.kron(np.eye(2)[n], want_a)
        got = u @ product_state(StateVector.basis(2, n), chi).amplitudes
        np.testing.assert_allclose(got, want, atol=1e-11)


def test_commuting_observable_makes_u_equal_u_app(small_apparatus):
    pair = compare_propagators(qubit_setup(small_apparatus, SIGMA_Z, tau=100.0))
    assert pair.norm_diff < 1e-12
    assert pair.conservation_defect < 1e-12
    assert pair.unitarity_defect < 1e-12


def test_noncommuting_observable_breaks_conservation(small_apparatus):
    pair = compare_propagators(qubit_setup(small_apparatus, SIGMA_X, tau=10.0))
    assert pair.norm_diff > 0.1
    assert pair.conservation_defect > 1e-3
    assert pair.app_conservation_defect < 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]), st.floats(1.0, 500.0))
def test_u_app_conserves_system_energy(small_apparatus, seed, dim, tau):
    rng = np.random.default_rng(seed)
    system = build_system(random_hermitian(rng, dim))
    setup = MeasurementSetup(system, small_apparatus, random_hermitian(rng, dim), SwitchProfile("ideal_constant", tau))
    u_app = build_u_app(setup)
    assert conservation_defect(u_app, system, setup.dim_a) <= 1e-10
    assert unitarity_defect(u_app) <= 1e-8


def test_sandwich_of_sigma_x_on_diagonal_qubit_vanishes():
    o_tilde = sandwich_observable(build_system(QUBIT), SIGMA_X)
    assert np.max(np.abs(o_tilde.matrix)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_sandwich_identities(seed, dim):
    rng = np.random.default_rng(seed)
    system = build_system(random_hermitian(rng, dim))
    o = random_hermitian(rng, dim)
    o_tilde = sandwich_observable(system, o)
    assert operator_norm(commutator(o_tilde, system.h)) <= 1e-10
    np.testing.assert_allclose(np.diag(system.in_eigenbasis(o_tilde)), np.diag(system.in_eigenbasis(o)), atol=1e-12)


def test_sandwich_dimension_mismatch():
    with pytest.raises(ContractViolation):
        sandwich_observable(build_system(QUBIT), np.eye(3))


def test_slicing_is_second_order(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X, tau=10.0, kind="smooth_ramp")
    ratio = slicing_defect(setup, 128) / slicing_defect(setup, 256)
    assert ratio == pytest.approx(4.0, abs=0.5)


def test_ideal_profile_has_no_slicing_defect(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X)
    assert slicing_defect(setup) == 0.0
    assert evolve_exact_with_defect(setup)[1] == 0.0


def test_unconverged_slicing_raises(small_apparatus):
    setup = qubit_setup(small_apparatus, SIGMA_X, tau=10.0, kind="smooth_ramp", n_steps=4)
    with pytest.raises(AccuracyError) as info:
        evolve_exact(setup)
    assert info.value.n_steps == 4 and info.value.defect > info.value.tolerance
    u, defect = evolve_exact_with_defect(setup, check=False)
    assert defect > 1e-6 and unitarity_defect(u) < 1e-10


def test_unknown_method(small_apparatus):
    with pytest.raises(ContractViolation):
        evolve_exact(qubit_setup(small_apparatus, SIGMA_X), method="krylov")
