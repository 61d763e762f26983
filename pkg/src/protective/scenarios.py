"""Canned experiments. Each returns a ScenarioReport with records, tables and verdicts.

Reference setup shared by the qubit experiments: ``H_S = diag(0, 1)``,
pointer lattice of 256 points with spacing 1/8 (length 32), ``H_A = P^2/2000``
and a Gaussian pointer of width 1 centered at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import commutator_norm, conservation_scan
from .errors import ContractViolation
from .linalg import (
    HermitianOperator,
    StateVector,
    expm_hermitian,
    fix_phases,
    get_tolerances,
    operator_norm,
    state_fidelity,
    trace_distance,
    unitarity_defect,
)
from .measurement import (
    PointerPreparation,
    RunRecord,
    reconstruct_state,
    run_protective,
    run_von_neumann,
)
from .model import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    ApparatusModel,
    MeasurementSetup,
    SwitchProfile,
    SystemHamiltonian,
    TimeSlicing,
    build_apparatus,
    build_system,
    check_nondegenerate,
)
from .propagator import build_u_app, conservation_defect, evolve_exact_with_defect, sandwich_observable
from .report import ScenarioReport, Table, Verdict

REFERENCE_TAU = 1e3
REFERENCE_GRID = (10.0, 30.0, 100.0, 300.0, 1000.0)


def reference_apparatus() -> ApparatusModel:
    return build_apparatus(256, 0.125, 1e3)


def reference_pointer() -> PointerPreparation:
    return PointerPreparation(0.0, 1.0)


def reference_qubit_setup(observable=SIGMA_Z, tau: float = REFERENCE_TAU, kind: str = "ideal_constant",
                          n_steps: int = 256, apparatus: ApparatusModel | None = None) -> MeasurementSetup:
    return MeasurementSetup(
        system=build_system(np.diag([0.0, 1.0])),
        apparatus=apparatus or reference_apparatus(),
        observable=HermitianOperator(observable, name="O"),
        switch=SwitchProfile(kind, tau),
        slicing=TimeSlicing(n_steps),
    )


def _u_app_verdict(setups) -> Verdict:
    worst = 0.0
    for st in setups:
        worst = max(worst, conservation_defect(build_u_app(st), st.system, st.dim_a))
    return Verdict("u_app_conservation", worst <= 1e-10, worst, "||U_app^dag H_S U_app - H_S|| <= 1e-10")


def _monotone_decreasing(xs) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


@dataclass(frozen=True, eq=False)
class TwoBoxModel:
    """Two-level proton model in the basis (phi_+, phi_-).

    ``phi_+`` is the ground state, split from ``phi_-`` by ``2 epsilon``.
    """

    epsilon: float
    system: SystemHamiltonian
    phi_plus: StateVector
    phi_minus: StateVector
    phi_left: StateVector
    phi_right: StateVector
    o_box: HermitianOperator


def two_box_model(epsilon: float = 0.5) -> TwoBoxModel:
    if not epsilon > 0:
        raise ContractViolation(f"epsilon must be positive, got {epsilon}")
    system = build_system(np.diag([-epsilon, epsilon]))
    plus, minus = StateVector.basis(2, 0), StateVector.basis(2, 1)
    left = StateVector.normalized(plus.amplitudes + minus.amplitudes)
    right = StateVector.normalized(plus.amplitudes - minus.amplitudes)
    o_box = HermitianOperator(-left.density() + right.density(), name="O_box")
    return TwoBoxModel(epsilon, system, plus, minus, left, right, o_box)


def scenario_two_box(epsilon: float = 0.5, tau_grid=(100.0, 300.0, 1000.0), *,
                     apparatus: ApparatusModel | None = None, pointer: PointerPreparation | None = None,
                     vn_apparatus: ApparatusModel | None = None, vn_pointer: PointerPreparation | None = None,
                     coupling_strength: float = 1.0) -> ScenarioReport:
    """Protective and von Neumann position measurements on the delocalized proton."""
    model = two_box_model(epsilon)
    apparatus = apparatus or reference_apparatus()
    pointer = pointer or reference_pointer()
    o_tilde = sandwich_observable(model.system, model.o_box)
    otilde_max = float(np.max(np.abs(o_tilde.matrix)))

    rows, setups = [], []
    last: dict[str, RunRecord] = {}
    for tau in tau_grid:
        st = MeasurementSetup(model.system, apparatus, model.o_box, SwitchProfile("ideal_constant", tau))
        setups.append(st)
        u, _ = evolve_exact_with_defect(st)
        runs = {name: run_protective(st, state, pointer, propagator=u)
                for name, state in (("phi_plus", model.phi_plus), ("phi_minus", model.phi_minus),
                                    ("phi_left", model.phi_left))}
        marg = {k: r.apparatus_density() for k, r in runs.items()}
        rows.append((
            float(tau),
            runs["phi_plus"].pointer_shift,
            runs["phi_left"].pointer_shift,
            runs["phi_plus"].system_fidelity,
            runs["phi_left"].entropy,
            trace_distance(marg["phi_left"], marg["phi_plus"]),
            trace_distance(marg["phi_plus"], marg["phi_minus"]),
        ))
        last = runs
    table = Table("two_box_sweep",
                  ("tau", "shift_phi_plus", "shift_phi_left", "fidelity_phi_plus", "entropy_phi_left",
                   "marginal_distance_left_plus", "chi_discrepancy"), tuple(rows))

    vn_apparatus = vn_apparatus or build_apparatus(256, 1.0 / 32, 1e3)
    vn_pointer = vn_pointer or PointerPreparation(0.0, 0.15)
    vn = run_von_neumann(model.system, vn_apparatus, model.o_box, model.phi_plus, vn_pointer, coupling_strength)
    vn_dev = max(abs(w - 0.5) for w in vn.branch_weights)

    shift_plus = abs(rows[-1][1])
    shift_left = abs(rows[-1][2])
    verdicts = (
        Verdict("otilde_zero", otilde_max <= 1e-12, otilde_max, "max|O~| on span{phi+, phi-}"),
        _u_app_verdict(setups),
        Verdict("protective_phi_plus_null_shift", shift_plus <= 1e-3, shift_plus, f"|shift| at tau={tau_grid[-1]:g}"),
        Verdict("protective_phi_left_null_shift", shift_left <= 1e-3, shift_left, f"|shift| at tau={tau_grid[-1]:g}"),
        Verdict("von_neumann_bimodal", len(vn.branch_weights) == 2 and vn_dev <= 1e-6, vn_dev,
                "max |branch weight - 0.5|"),
        Verdict("marginals_converge", _monotone_decreasing(table.column("marginal_distance_left_plus")),
                rows[-1][5], "trace distance phi_L vs phi_+ pointer states decreasing in tau"),
        Verdict("chi_discrepancy_decreasing", _monotone_decreasing(table.column("chi_discrepancy")),
                rows[-1][6], "trace distance chi_0 vs chi'_0 decreasing in tau"),
    )
    records = tuple({"input": name, **rec.scalars()} for name, rec in last.items()) + (
        {"input": "phi_plus", **vn.scalars()},)
    return ScenarioReport("two_box", records, (table,), verdicts,
                          {"epsilon": epsilon, "tau_grid": list(tau_grid), "coupling_strength": coupling_strength})


def _dominant_state(rho: np.ndarray) -> StateVector:
    _, v = np.linalg.eigh(rho)
    return StateVector.normalized(fix_phases(v[:, -1:])[:, 0])


def scenario_tomography(system: SystemHamiltonian, target_index: int, observables, tau: float = REFERENCE_TAU, *,
                        apparatus: ApparatusModel | None = None, pointer: PointerPreparation | None = None,
                        tolerance: float | None = None) -> ScenarioReport:
    """Sequential protective runs on one system, then state reconstruction.

    Each run starts from the dominant eigenvector of the previous run's
    reduced system state, with a fresh pointer.
    """
    apparatus = apparatus or reference_apparatus()
    pointer = pointer or reference_pointer()
    target = system.eigenstate(target_index)
    state = target
    data, rows, setups = [], [], []
    fid_product = 1.0
    for k, o in enumerate(observables):
        o = o if isinstance(o, HermitianOperator) else HermitianOperator(o, name=f"O{k}")
        st = MeasurementSetup(system, apparatus, o, SwitchProfile("ideal_constant", tau))
        setups.append(st)
        rec = run_protective(st, state, pointer)
        data.append((o, rec.expected_value_reported))
        fid_product *= rec.system_fidelity
        rows.append((k, target.expectation(o), rec.expected_value_reported, rec.system_fidelity,
                     state_fidelity(target, rec.system_density())))
        state = _dominant_state(rec.system_density())
    recon = reconstruct_state(data, system.dim, tolerance)
    fidelity = abs(recon.state.overlap(target)) ** 2
    verdicts = (
        Verdict("reconstruction_fidelity", fidelity >= 1 - 1e-3, fidelity, ">= 1 - 1e-3"),
        Verdict("sequential_fidelity_product", fid_product >= 1 - 1e-2, fid_product, ">= 1 - 1e-2"),
        _u_app_verdict(setups),
    )
    table = Table("tomography_runs", ("run", "exact_expectation", "reported", "run_fidelity", "fidelity_with_target"),
                  tuple(rows))
    records = ({"reconstruction_fidelity": fidelity, "residual": recon.residual, "ls_purity": recon.purity,
                "fidelity_product": fid_product},)
    return ScenarioReport("tomography", records, (table,), verdicts,
                          {"tau": tau, "target_index": target_index, "n_observables": len(data)})


def _instantaneous(h0: np.ndarray, h1: np.ndarray, s: float, location: str) -> SystemHamiltonian:
    h = HermitianOperator((1 - s) * h0 + s * h1, name="H(s)")
    w, _ = h.eigh()
    check_nondegenerate(w, max(operator_norm(h), 1e-300), location)
    return build_system(h)


def scenario_adiabatic_retune(h_start: SystemHamiltonian, h_end: SystemHamiltonian, ramp_steps: int = 400,
                              ramp_time: float = 50.0, level: int = 0) -> ScenarioReport:
    """Drag an eigenstate of ``h_start`` along the straight path to ``h_end``.

    No apparatus is attached. ``ramp_time = 0`` is the sudden switch.
    """
    if ramp_steps < 1:
        raise ContractViolation("ramp_steps must be >= 1")
    h0, h1 = h_start.h.matrix, h_end.h.matrix
    if h0.shape != h1.shape:
        raise ContractViolation(f"Hamiltonian shapes differ: {h0.shape} vs {h1.shape}")
    dt = ramp_time / ramp_steps
    psi = h_start.eigenstate(level)
    rows, min_gap = [], h_start.min_gap
    for j in range(ramp_steps):
        s_mid = (j + 0.5) / ramp_steps
        s_next = (j + 1) / ramp_steps
        mid = _instantaneous(h0, h1, s_mid, f"step {j} midpoint (s={s_mid:.6g})")
        end = _instantaneous(h0, h1, s_next, f"step {j + 1} (s={s_next:.6g})")
        min_gap = min(min_gap, mid.min_gap, end.min_gap)
        if dt > 0:
            psi = StateVector.normalized(expm_hermitian(mid.h, -1j * dt) @ psi.amplitudes)
        rows.append((j + 1, s_next, abs(end.eigenstate(level).overlap(psi)) ** 2, end.min_gap))
    final = rows[-1][2]
    static_overlap = abs(h_end.eigenstate(level).overlap(h_start.eigenstate(level))) ** 2
    verdicts = []
    if ramp_time >= 100.0 / min_gap**2:
        verdicts.append(Verdict("slow_ramp_tracking", final >= 0.99, final, "final fidelity >= 0.99"))
    if ramp_time == 0:
        dev = abs(final - static_overlap)
        verdicts.append(Verdict("sudden_switch_overlap", dev <= 1e-8, dev, "|F - |<phi'|phi>|^2| <= 1e-8"))
    table = Table("retune_track", ("step", "s", "tracking_fidelity", "gap"), tuple(rows))
    records = ({"final_fidelity": final, "static_overlap": static_overlap, "min_gap": min_gap,
                "ramp_time": ramp_time, "adiabatic_time_scale": 100.0 / min_gap**2},)
    return ScenarioReport("retune", records, (table,), tuple(verdicts),
                          {"ramp_steps": ramp_steps, "ramp_time": ramp_time, "level": level})


def scenario_protective(setup: MeasurementSetup, system_state: StateVector,
                        pointer: PointerPreparation | None = None) -> ScenarioReport:
    """Single protective run with the conservation and unitarity checks attached."""
    pointer = pointer or reference_pointer()
    u, defect = evolve_exact_with_defect(setup)
    rec = run_protective(setup, system_state, pointer, propagator=u)
    o_tilde = sandwich_observable(setup.system, setup.observable)
    estimate_target = system_state.expectation(o_tilde)
    unit = max(unitarity_defect(u), unitarity_defect(build_u_app(setup)))
    verdicts = (
        _u_app_verdict([setup]),
        Verdict("propagator_unitarity", unit <= get_tolerances().propagator_unitarity, unit, "<= 1e-8"),
    )
    record = {**rec.scalars(), "slicing_defect": defect, "otilde_expectation": estimate_target,
              "o_expectation": system_state.expectation(setup.observable)}
    return ScenarioReport("protective", (record,), (), verdicts, {"tau": setup.tau, "switch": setup.switch.kind})


def scenario_von_neumann(system: SystemHamiltonian, apparatus: ApparatusModel, o, system_state: StateVector,
                         pointer: PointerPreparation, coupling_strength: float = 1.0) -> ScenarioReport:
    rec = run_von_neumann(system, apparatus, o, system_state, pointer, coupling_strength)
    verdicts = (Verdict("branches_resolved", not rec.warnings, float(len(rec.warnings)),
                        "pointer branches separated by >= 4 sigma"),)
    return ScenarioReport("von_neumann", (rec.scalars(),), (), verdicts,
                          {"coupling_strength": coupling_strength})


def scenario_sweep(setup: MeasurementSetup, tau_grid, chi: StateVector | None = None) -> ScenarioReport:
    """Convergence table over ``tau_grid`` plus the commutator dichotomy verdict."""
    table = conservation_scan(setup, tau_grid, chi)
    comm = commutator_norm(setup.observable, setup.system.h)
    conserved = max(table.conservation_defect) <= 1e-6
    verdicts = (
        Verdict("dichotomy", (comm <= 1e-10) == conserved, comm,
                "[O,H_S]=0 iff conservation defect <= 1e-6 on the whole grid"),
        Verdict("majorization", all(table.majorization_ok), max(table.matrix_element_defect),
                "matrix-element deviations bounded by the operator-norm defect"),
        _u_app_verdict([setup.with_tau(t) for t in tau_grid]),
    )
    return ScenarioReport("sweep", (), (table.as_table("convergence"),), verdicts,
                          {"tau_grid": list(tau_grid), "commutator_norm": comm})


PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}

SCENARIOS = {
    "protective": "single protective measurement run with conservation and unitarity checks",
    "two_box": "delocalized proton: O~ = 0, null pointer shifts, von Neumann bimodality",
    "tomography": "sequential protective runs on one system and pure-state reconstruction",
    "retune": "quasi-static vs sudden change of the system Hamiltonian between measurements",
    "von_neumann": "impulsive von Neumann measurement for comparison",
    "sweep": "tau-sweep of ||U - U_app||, H_S conservation and matrix-element defects",
}
