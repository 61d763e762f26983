"""Built-in acceptance suite, one verdict per numbered criterion.

``run_all`` is what ``protective verify`` executes. Criteria that draw random
inputs (3 and 8) take them from ``numpy.random.default_rng(seed)``.
"""

from __future__ import annotations

import time
from importlib import resources

import numpy as np

from .config import load_config, measurement_setups
from .diagnostics import (
    conservation_scan,
    fit_loglog_slope,
    instantaneous_commutator,
    sandwich_identity_defects,
)
from .linalg import HermitianOperator, StateVector, unitarity_defect
from .measurement import PointerPreparation, phase_blindness_distance, run_protective
from .model import SIGMA_X, SIGMA_Z, MeasurementSetup, SwitchProfile, TimeSlicing, build_system
from .propagator import build_u_app, compare_propagators, conservation_defect, evolve_exact_with_defect, slicing_defect
from .report import Verdict
from .scenarios import (
    PAULI,
    REFERENCE_GRID,
    reference_apparatus,
    reference_pointer,
    reference_qubit_setup,
    scenario_adiabatic_retune,
    scenario_tomography,
    scenario_two_box,
)

TIME_BUDGET = 300.0


def shipped_configs() -> list:
    """Paths of the reference configs bundled with the package, sorted by name."""
    root = resources.files("protective") / "configs"
    return sorted((p for p in root.iterdir() if p.name.endswith(".cfg")), key=lambda p: p.name)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def criterion_1() -> Verdict:
    start = time.perf_counter()
    setup = reference_qubit_setup(SIGMA_Z)
    u, _ = evolve_exact_with_defect(setup)
    worst_fid, worst_shift, worst_entropy = 0.0, 0.0, 0.0
    for n in range(2):
        phi = setup.system.eigenstate(n)
        rec = run_protective(setup, phi, reference_pointer(), propagator=u)
        worst_fid = max(worst_fid, 1 - rec.system_fidelity)
        worst_shift = max(worst_shift, abs(rec.pointer_shift - phi.expectation(setup.observable)))
        worst_entropy = max(worst_entropy, rec.entropy)
    elapsed = time.perf_counter() - start
    ok = worst_fid <= 1e-8 and worst_shift <= 1e-6 and worst_entropy <= 1e-8 and elapsed <= 10
    return Verdict("1", ok, worst_shift,
                   f"max |shift - <O>_n|; 1-F={worst_fid:.2e}, S={worst_entropy:.2e}, {elapsed:.2f}s")


def criterion_2(configs=None) -> Verdict:
    setups: list[MeasurementSetup] = [reference_qubit_setup(o) for o in (SIGMA_X, SIGMA_Z)]
    names = []
    for path in configs if configs is not None else shipped_configs():
        cfg = load_config(path)
        found = measurement_setups(cfg)
        setups += found
        names.append(f"{getattr(path, 'name', path)}:{len(found)}")
    worst = max(conservation_defect(build_u_app(s), s.system, s.dim_a) for s in setups)
    return Verdict("2", worst <= 1e-10, worst, f"max over {len(setups)} setups from {len(names)} configs")


def criterion_3(seed: int = 0, pairs: int = 100) -> Verdict:
    rng = np.random.default_rng(seed)
    worst_comm, worst_diag = 0.0, 0.0
    for k in range(pairs):
        dim = 2 + k % 4
        system = build_system(random_hermitian(rng, dim))
        comm, diag = sandwich_identity_defects(system, random_hermitian(rng, dim))
        worst_comm, worst_diag = max(worst_comm, comm), max(worst_diag, diag)
    return Verdict("3", worst_comm <= 1e-10 and worst_diag <= 1e-12, worst_comm,
                   f"max ||[O~,H_S]||; max diag gap {worst_diag:.2e}; {pairs} pairs, seed {seed}")


def _sweeps():
    out = {}
    for name in ("sigma_x", "sigma_z"):
        setup = reference_qubit_setup(PAULI[name])
        out[name] = (setup, conservation_scan(setup, REFERENCE_GRID))
    return out


def criterion_4(sweeps=None) -> Verdict:
    sweeps = sweeps or _sweeps()
    x, z = sweeps["sigma_x"][1], sweeps["sigma_z"][1]
    min_x = min(x.norm_diff)
    max_z = max(z.norm_diff)
    cons_x, cons_z = min(x.conservation_defect), max(z.conservation_defect)
    ok = min_x >= 0.1 and max_z <= 1e-8 and cons_x > 1e-6 and cons_z <= 1e-8
    return Verdict("4", ok, min_x,
                   f"min norm_diff sigma_x; max sigma_z {max_z:.2e}; conservation x>={cons_x:.3g}, z<={cons_z:.2e}")


def criterion_5(sweeps=None) -> Verdict:
    sweeps = sweeps or _sweeps()
    setup, table = sweeps["sigma_x"]
    # dense joint-space commutator at mid-measurement, where g sits on its plateau
    dense = [instantaneous_commutator(setup.with_tau(t), t / 2) for t in REFERENCE_GRID]
    slope = fit_loglog_slope(REFERENCE_GRID, dense)
    factorized = fit_loglog_slope(REFERENCE_GRID, table.coupling_commutator)
    ok = abs(slope + 1) <= 0.1 and abs(factorized + 1) <= 0.1 and min(table.norm_diff) >= 0.1
    return Verdict("5", ok, slope, f"log-log slope; factorized {factorized:.6f}; "
                                   f"norm_diff stays >= {min(table.norm_diff):.3g}")


def criterion_6() -> Verdict:
    setup = reference_qubit_setup(SIGMA_Z)
    pointer = PointerPreparation(0.0, 0.5)
    separation = abs(setup.system.eigenstate(0).expectation(SIGMA_Z) - setup.system.eigenstate(1).expectation(SIGMA_Z))
    state = StateVector.normalized(setup.system.vectors @ np.array([1, 1], dtype=complex))
    rec = run_protective(setup, state, pointer)
    ok = separation >= 4 * pointer.width_sigma and rec.entropy >= 0.5
    return Verdict("6", ok, rec.entropy, f"entropy in nats; separation {separation:g} = "
                                         f"{separation / pointer.width_sigma:g} sigma")


def criterion_7() -> Verdict:
    report = scenario_two_box(0.5, (100.0, 300.0, 1000.0))
    ids = ("otilde_zero", "protective_phi_plus_null_shift", "protective_phi_left_null_shift", "von_neumann_bimodal")
    parts = [report.verdict(i) for i in ids]
    worst = max(report.verdict(i).value for i in ids[1:3])
    return Verdict("7", all(v.passed for v in parts), worst,
                   "; ".join(f"{v.claim_id}={v.value:.2e}" for v in parts))


def criterion_8(seed: int = 0, draws: int = 20) -> Verdict:
    rng = np.random.default_rng(seed + 1)
    setups = [reference_qubit_setup(SIGMA_Z)]
    # a three-level case with a commuting, non-trivial observable
    h3 = np.diag([0.0, 1.0, 2.5])
    setups.append(MeasurementSetup(build_system(h3), reference_apparatus(), HermitianOperator(np.diag([1.0, 0.0, -1.0])),
                                   SwitchProfile("ideal_constant", 1e3), TimeSlicing()))
    pointer = reference_pointer()
    worst = 0.0
    for setup in setups:
        u, _ = evolve_exact_with_defect(setup)
        for _ in range(draws // len(setups)):
            c = rng.normal(size=setup.dim_s) + 1j * rng.normal(size=setup.dim_s)
            worst = max(worst, phase_blindness_distance(setup, c, pointer, propagator=u))
    return Verdict("8", worst <= 1e-6, worst, f"max trace distance over {draws} superpositions, seed {seed}")


def criterion_9() -> Verdict:
    system = build_system(np.diag([0.0, 1.0]))
    observables = [system.vectors @ PAULI[k] @ system.vectors.conj().T for k in ("sigma_x", "sigma_y", "sigma_z")]
    reports = [scenario_tomography(system, n, observables, 1e3) for n in range(2)]
    fid = min(r.verdict("reconstruction_fidelity").value for r in reports)
    prod = min(r.verdict("sequential_fidelity_product").value for r in reports)
    ok = all(r.verdict("reconstruction_fidelity").passed and r.verdict("sequential_fidelity_product").passed
             for r in reports)
    return Verdict("9", ok, fid, f"min reconstruction fidelity over both levels; fidelity product {prod:.8f}")


def criterion_10() -> Verdict:
    h0, h1 = build_system(SIGMA_Z), build_system(SIGMA_X)
    slow = scenario_adiabatic_retune(h0, h1, ramp_steps=400, ramp_time=50.0)
    sudden = scenario_adiabatic_retune(h0, h1, ramp_steps=400, ramp_time=0.0)
    track = slow.verdict("slow_ramp_tracking")
    jump = sudden.verdict("sudden_switch_overlap")
    return Verdict("10", track.passed and jump.passed, track.value,
                   f"slow-ramp fidelity (ramp_time 50 = 100/gap^2); sudden |F - overlap| {jump.value:.2e}")


def criterion_11(started: float | None = None, sweeps=None, n_steps: int = 128) -> Verdict:
    started = time.perf_counter() if started is None else started
    ratios = []
    for tau in (10.0, 30.0, 100.0):
        setup = reference_qubit_setup(SIGMA_X, tau=tau, kind="smooth_ramp", n_steps=n_steps)
        ratios.append(slicing_defect(setup, n_steps) / slicing_defect(setup, 2 * n_steps))
    unit = 0.0
    sweeps = sweeps or _sweeps()
    for setup, _ in sweeps.values():
        for tau in REFERENCE_GRID:
            pair = compare_propagators(setup.with_tau(tau))
            unit = max(unit, pair.unitarity_defect)
    smooth = reference_qubit_setup(SIGMA_X, tau=10.0, kind="smooth_ramp", n_steps=n_steps)
    unit = max(unit, unitarity_defect(evolve_exact_with_defect(smooth, check=False)[0]))
    elapsed = time.perf_counter() - started
    ok = all(abs(r - 4) <= 0.5 for r in ratios) and unit <= 1e-8 and elapsed < TIME_BUDGET
    return Verdict("11", ok, max(ratios, key=lambda r: abs(r - 4)),
                   "doubling ratio furthest from 4; ratios " + ", ".join(f"{r:.3f}" for r in ratios)
                   + f"; unitarity {unit:.2e}; suite {elapsed:.1f}s")


def run_all(seed: int = 0, configs=None) -> list[Verdict]:
    started = time.perf_counter()
    sweeps = _sweeps()
    return [
        criterion_1(),
        criterion_2(configs),
        criterion_3(seed),
        criterion_4(sweeps),
        criterion_5(sweeps),
        criterion_6(),
        criterion_7(),
        criterion_8(seed),
        criterion_9(),
        criterion_10(),
        criterion_11(started, sweeps),
    ]
