"""Protective and von Neumann measurement protocols, pointer readout, tomography."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, IncompleteTomography, InconsistentExpectations, ReadoutError
from .linalg import (
    HermitianOperator,
    StateVector,
    entanglement_entropy,
    expm_hermitian,
    fix_phases,
    get_tolerances,
    momentum_blocks_to_joint,
    product_state,
    reduced_density,
    split_joint,
    state_fidelity,
    trace_distance,
)
from .model import ApparatusModel, MeasurementSetup, SystemHamiltonian, gaussian_packet
from .propagator import evolve_exact_with_defect

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PointerPreparation:
    center_q: float = 0.0
    width_sigma: float = 1.0
    momentum_offset: float = 0.0

    def __post_init__(self):
        if not self.width_sigma > 0:
            raise ContractViolation(f"width_sigma must be positive, got {self.width_sigma}")

    def packet(self, apparatus: ApparatusModel) -> StateVector:
        q = apparatus.positions
        lo, hi = q[0] + 4 * self.width_sigma, q[-1] - 4 * self.width_sigma
        if not lo <= self.center_q <= hi:
            raise ContractViolation(
                f"pointer packet at {self.center_q} with sigma {self.width_sigma} is closer than "
                f"4 sigma to the lattice edge [{q[0]}, {q[-1]}]"
            )
        return gaussian_packet(apparatus, self.center_q, self.width_sigma, self.momentum_offset)


@dataclass(frozen=True, eq=False)
class RunRecord:
    """Outcome of one measurement run.

    ``pointer_shift`` is in pointer units relative to the free-evolution
    baseline; ``expected_value_reported`` is the protocol's estimate of <O>.
    """

    final_state: StateVector
    dim_s: int
    dim_a: int
    pointer_shift: float
    system_fidelity: float
    entropy: float
    tau: float
    expected_value_reported: float
    kind: str = "protective"
    slicing_defect: float = 0.0
    branch_positions: tuple[float, ...] = ()
    branch_weights: tuple[float, ...] = ()
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def system_density(self) -> np.ndarray:
        return reduced_density(self.final_state, self.dim_s, self.dim_a, keep="system")

    def apparatus_density(self) -> np.ndarray:
        return reduced_density(self.final_state, self.dim_s, self.dim_a, keep="apparatus")

    def scalars(self) -> dict:
        out = {
            "kind": self.kind,
            "tau": self.tau,
            "pointer_shift": self.pointer_shift,
            "expected_value_reported": self.expected_value_reported,
            "system_fidelity": self.system_fidelity,
            "entropy": self.entropy,
            "slicing_defect": self.slicing_defect,
        }
        for i, (pos, w) in enumerate(zip(self.branch_positions, self.branch_weights)):
            out[f"branch_{i}_position"] = pos
            out[f"branch_{i}_weight"] = w
        if self.warnings:
            out["warnings"] = "; ".join(self.warnings)
        return out


def pointer_marginal(state, apparatus: ApparatusModel) -> np.ndarray:
    """Position probabilities of the pointer for a joint or apparatus-only state."""
    v = np.asarray(state).reshape(-1)
    if v.shape[0] % apparatus.dim:
        raise ContractViolation(f"state length {v.shape[0]} is not a multiple of pointer size {apparatus.dim}")
    c = split_joint(v, v.shape[0] // apparatus.dim, apparatus.dim)
    return np.sum(np.abs(c) ** 2, axis=0)


def _check_edges(prob: np.ndarray, apparatus: ApparatusModel, band: float, label: str) -> None:
    q = apparatus.positions
    near = (q < q[0] + band) | (q > q[-1] - band)
    mass = float(np.sum(prob[near]))
    if mass > get_tolerances().edge_mass:
        raise ReadoutError(
            f"{label} pointer has probability {mass:.3e} within {band:.3g} of the lattice edge; "
            f"shift exceeds the safe lattice range"
        )


def readout_pointer(final_state, apparatus: ApparatusModel, reference_state) -> float:
    """``<Q>(final) - <Q>(reference)`` over the pointer marginal."""
    q = apparatus.positions
    p_ref = pointer_marginal(reference_state, apparatus)
    p_fin = pointer_marginal(final_state, apparatus)
    mean_ref = float(q @ p_ref)
    band = 4 * float(np.sqrt(max(q**2 @ p_ref - mean_ref**2, 0.0)))
    band = max(band, apparatus.dq)
    _check_edges(p_ref, apparatus, band, "reference")
    _check_edges(p_fin, apparatus, band, "final")
    return float(q @ p_fin) - mean_ref


def run_protective(setup: MeasurementSetup, system_state: StateVector, pointer: PointerPreparation,
                   *, check: bool = True, propagator: np.ndarray | None = None) -> RunRecord:
    """Prepare ``system_state (x) packet``, evolve with the exact U, read the pointer.

    ``propagator`` may pass a precomputed U for ``setup`` (sweeps reuse it).
    """
    if system_state.dim != setup.dim_s:
        raise ContractViolation(f"system state dim {system_state.dim} != system dim {setup.dim_s}")
    app = setup.apparatus
    chi = pointer.packet(app)
    if propagator is None:
        u, defect = evolve_exact_with_defect(setup, check=check)
    else:
        u, defect = propagator, 0.0
    psi = StateVector.normalized(u @ product_state(system_state, chi).amplitudes)
    free = StateVector.normalized(app.free_evolution(setup.tau) @ chi.amplitudes)
    shift = readout_pointer(psi, app, product_state(system_state, free))
    rho_s = reduced_density(psi, setup.dim_s, setup.dim_a)
    return RunRecord(
        final_state=psi,
        dim_s=setup.dim_s,
        dim_a=setup.dim_a,
        pointer_shift=shift,
        system_fidelity=state_fidelity(system_state, rho_s),
        entropy=entanglement_entropy(psi, setup.dim_s, setup.dim_a),
        tau=setup.tau,
        expected_value_reported=shift,
        kind="protective",
        slicing_defect=defect,
    )


def _distinct_eigenvalues(o: HermitianOperator, tol: float = 1e-9) -> np.ndarray:
    w, _ = o.eigh()
    groups = [0]
    for i in range(1, len(w)):
        if w[i] - w[groups[-1]] > tol * max(1.0, abs(w[-1]), abs(w[0])):
            groups.append(i)
    return w[groups]


def run_von_neumann(system: SystemHamiltonian, apparatus: ApparatusModel, o, system_state: StateVector,
                    pointer: PointerPreparation, coupling_strength: float) -> RunRecord:
    """Impulsive measurement ``exp(-i s O (x) P)`` with free evolution suppressed."""
    o = o if isinstance(o, HermitianOperator) else HermitianOperator(o, name="O")
    if o.dim != system.dim or system_state.dim != system.dim:
        raise ContractViolation("observable, state and system dimensions must agree")
    ds, da = system.dim, apparatus.dim
    blocks = coupling_strength * apparatus.momenta[:, None, None] * o.matrix[None]
    u = momentum_blocks_to_joint(expm_hermitian(blocks, -1j), apparatus.fourier)
    chi = pointer.packet(apparatus)
    psi = StateVector.normalized(u @ product_state(system_state, chi).amplitudes)
    shift = readout_pointer(psi, apparatus, product_state(system_state, chi))

    levels = _distinct_eigenvalues(o)
    centers = pointer.center_q + coupling_strength * levels
    order = np.argsort(centers)
    centers = centers[order]
    cuts = 0.5 * (centers[1:] + centers[:-1])
    cell = np.searchsorted(cuts, apparatus.positions)
    prob = pointer_marginal(psi, apparatus)
    weights = np.bincount(cell, weights=prob, minlength=len(centers))
    warnings = []
    if len(centers) > 1 and np.min(np.diff(centers)) < 4 * pointer.width_sigma:
        warnings.append(
            f"pointer branches overlap: separation {np.min(np.diff(centers)):.3g} < 4 sigma = "
            f"{4 * pointer.width_sigma:.3g}"
        )
        log.warning(warnings[-1])
    rho_s = reduced_density(psi, ds, da)
    return RunRecord(
        final_state=psi,
        dim_s=ds,
        dim_a=da,
        pointer_shift=shift,
        system_fidelity=state_fidelity(system_state, rho_s),
        entropy=entanglement_entropy(psi, ds, da),
        tau=0.0,
        expected_value_reported=shift / coupling_strength if coupling_strength else 0.0,
        kind="von_neumann",
        branch_positions=tuple(float(c) for c in centers),
        branch_weights=tuple(float(w) for w in weights),
        warnings=tuple(warnings),
    )


def phase_blindness_distance(setup: MeasurementSetup, coefficients, pointer: PointerPreparation,
                             propagator: np.ndarray | None = None) -> float:
    """Trace distance between pointer states for ``sum c_n phi_n`` and its mixture.

    ``coefficients`` are amplitudes in the H_S eigenbasis.
    """
    c = np.asarray(coefficients, dtype=complex)
    c = c / np.linalg.norm(c)
    if propagator is None:
        propagator, _ = evolve_exact_with_defect(setup)
    system = setup.system
    superposed = run_protective(setup, StateVector.normalized(system.vectors @ c), pointer,
                                propagator=propagator)
    mixture = np.zeros((setup.dim_a, setup.dim_a), dtype=complex)
    for n, cn in enumerate(c):
        if abs(cn) == 0:
            continue
        rec = run_protective(setup, system.eigenstate(n), pointer, propagator=propagator)
        mixture += abs(cn) ** 2 * rec.apparatus_density()
    return trace_distance(superposed.apparatus_density(), mixture)


def gell_mann_basis(dim: int) -> list[np.ndarray]:
    """Traceless Hermitian basis with tr(G_j G_k) = 2 delta_jk."""
    out = []
    for j in range(dim):
        for k in range(j + 1, dim):
            s = np.zeros((dim, dim), dtype=complex)
            s[j, k] = s[k, j] = 1.0
            a = np.zeros((dim, dim), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            out += [s, a]
    for l in range(1, dim):
        d = np.zeros(dim, dtype=complex)
        d[:l] = 1.0
        d[l] = -l
        out.append(np.diag(d) * np.sqrt(2.0 / (l * (l + 1))))
    return out


@dataclass(frozen=True, eq=False)
class Reconstruction:
    state: StateVector
    residual: float
    density: np.ndarray  # unconstrained least-squares estimate before rank-1 projection
    purity: float


def reconstruct_state(expectations, dim: int, tolerance: float | None = None) -> Reconstruction:
    """Pure state (up to global phase) matching ``[(operator, <operator>), ...]``.

    Least squares over the traceless part of the density matrix, then the
    leading eigenvector. ``residual`` is the worst mismatch between the given
    expectations and those of the returned pure state.
    """
    tol = get_tolerances().reconstruction if tolerance is None else tolerance
    ops, vals = [], []
    for op, val in expectations:
        m = op.matrix if isinstance(op, HermitianOperator) else HermitianOperator(op).matrix
        if m.shape != (dim, dim):
            raise ContractViolation(f"observable shape {m.shape} does not match dim {dim}")
        ops.append(m)
        vals.append(float(val))
    basis = gell_mann_basis(dim)
    a = np.array([[0.5 * np.real(np.trace(o @ g)) for g in basis] for o in ops]).reshape(len(ops), len(basis))
    b = np.array([v - np.real(np.trace(o)) / dim for o, v in zip(ops, vals)])
    rank = np.linalg.matrix_rank(a, tol=1e-10) if ops else 0
    if rank < len(basis):
        raise IncompleteTomography(
            f"observables span {rank} of the {len(basis)} traceless directions needed for dim {dim}"
        )
    r, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = np.eye(dim, dtype=complex) / dim + 0.5 * sum(rk * g for rk, g in zip(r, basis))
    w, v = np.linalg.eigh(rho)
    psi = StateVector.normalized(fix_phases(v[:, -1:])[:, 0])
    residual = max(abs(psi.expectation(o) - val) for o, val in zip(ops, vals))
    if residual > tol:
        raise InconsistentExpectations(residual, tol)
    return Reconstruction(psi, float(residual), rho, float(np.real(np.trace(rho @ rho))))
