"""Numerical checks of when the adiabatic propagator can be a good approximation.

The scans compare the exact propagator U with U_app over a grid of
measurement durations and record three worst-case defects per duration:

* ``norm_diff``              ||U - U_app||
* ``conservation_defect``    ||U^dagger H_S U - H_S||
* ``matrix_element_defect``  max_mn |<phi_m chi| U^dagger H_S U |phi_n chi> - E_n delta_mn|
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .linalg import (
    HermitianOperator,
    StateVector,
    commutator,
    embed_system,
    expm_hermitian,
    operator_norm,
    product_state,
    tensor_product,
)
from .measurement import PointerPreparation
from .model import ApparatusModel, MeasurementSetup, SystemHamiltonian, total_hamiltonian
from .propagator import compare_propagators, sandwich_observable
from .report import Table, fmt_number

CSV_COLUMNS = ("tau", "norm_diff", "conservation_defect", "matrix_element_defect")


def commutator_norm(a, b) -> float:
    """Operator norm of AB - BA."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ContractViolation(f"commutator of mismatched shapes {a.shape} and {b.shape}")
    return operator_norm(commutator(a, b))


@dataclass(frozen=True, eq=False)
class ConvergenceTable:
    tau_grid: tuple[float, ...]
    norm_diff: tuple[float, ...]
    conservation_defect: tuple[float, ...]
    matrix_element_defect: tuple[float, ...]
    slicing_defect: tuple[float, ...] = ()
    coupling_commutator: tuple[float, ...] = ()  # max_t ||[H_tot(t), H_S (x) 1]||
    majorization_ok: tuple[bool, ...] = ()

    def __post_init__(self):
        cols = (self.tau_grid, self.norm_diff, self.conservation_defect, self.matrix_element_defect)
        if len({len(c) for c in cols}) != 1:
            raise ContractViolation("ConvergenceTable columns must have equal length")
        for c in cols[1:]:
            if not all(np.isfinite(x) and x >= 0 for x in c):
                raise ContractViolation("ConvergenceTable entries must be finite and non-negative")

    def rows(self):
        return tuple(zip(self.tau_grid, self.norm_diff, self.conservation_defect, self.matrix_element_defect))

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)] + [",".join(fmt_number(v) for v in r) for r in self.rows()]
        return "\n".join(lines) + "\n"

    def as_table(self, name: str = "convergence") -> Table:
        return Table(name, CSV_COLUMNS, self.rows())


def default_probe(apparatus: ApparatusModel) -> StateVector:
    """Centered Gaussian with width L/32, used when a scan is not given a probe state."""
    return PointerPreparation(0.0, apparatus.length / 32).packet(apparatus)


def _scan(setup: MeasurementSetup, tau_grid, chi: StateVector, check: bool) -> ConvergenceTable:
    taus = [float(t) for t in tau_grid]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ContractViolation("tau grid must be strictly ascending")
    if chi.dim != setup.dim_a:
        raise ContractViolation(f"probe state dim {chi.dim} != pointer dim {setup.dim_a}")
    system = setup.system
    hs = embed_system(system.h, setup.dim_a)
    probes = np.stack([product_state(system.eigenstate(n), chi).amplitudes for n in range(setup.dim_s)], axis=1)
    comm = commutator_norm(setup.observable, system.h) * operator_norm(setup.apparatus.P)
    nd, cd, md, sd, cc, ok = [], [], [], [], [], []
    for tau in taus:
        st = setup.with_tau(tau)
        pair = compare_propagators(st, check=check)
        u = pair.u_exact
        evolved = u @ probes
        elements = evolved.conj().T @ hs @ evolved
        dev = np.abs(elements - np.diag(system.energies))
        nd.append(pair.norm_diff)
        cd.append(pair.conservation_defect)
        md.append(float(np.max(dev)))
        sd.append(pair.slicing_defect)
        cc.append(st.switch.plateau * comm)
        # |deviation| <= ||U^dagger H_S U - H_S|| implies |element| <= that norm + |E_n delta_mn|
        ok.append(bool(np.max(dev) <= pair.conservation_defect + 1e-12 * (1 + np.max(np.abs(system.energies)))))
    return ConvergenceTable(tuple(taus), tuple(nd), tuple(cd), tuple(md), tuple(sd), tuple(cc), tuple(ok))


def conservation_scan(setup: MeasurementSetup, tau_grid, chi: StateVector | None = None,
                      *, check: bool = True) -> ConvergenceTable:
    """||U - U_app|| and the conservation defect of H_S for every tau.

    The matrix-element column uses ``chi`` or, by default, a centered
    Gaussian probe.
    """
    if len(tau_grid) < 4:
        raise ContractViolation(f"conservation_scan needs at least 4 grid points, got {len(tau_grid)}")
    return _scan(setup, tau_grid, chi if chi is not None else default_probe(setup.apparatus), check)


def matrix_element_scan(setup: MeasurementSetup, chi: StateVector, tau_grid, *, check: bool = True) -> ConvergenceTable:
    return _scan(setup, tau_grid, chi, check)


def instantaneous_commutator(setup: MeasurementSetup, t: float) -> float:
    """Dense ||[H_tot(t), H_S (x) 1]|| at one instant."""
    hs = embed_system(setup.system.h, setup.dim_a)
    return operator_norm(commutator(total_hamiltonian(setup, t), hs))


def coupling_commutator_norm(setup: MeasurementSetup) -> float:
    """Plateau value of g(t) ||[O, H_S] (x) P||; norms of Kronecker factors multiply."""
    return (setup.switch.plateau * commutator_norm(setup.observable, setup.system.h)
            * operator_norm(setup.apparatus.P))


def fit_loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def default_p_grid(apparatus: ApparatusModel, n: int = 64) -> np.ndarray:
    """n evenly spaced momenta covering the lattice momentum range."""
    return np.linspace(apparatus.momenta.min(), apparatus.momenta.max(), n)


def p_resolved_check(system: SystemHamiltonian, o, p_grid, tau: float) -> float:
    """Max over p and (m, n) of |<phi_m| e^{iK} H_S e^{-iK} |phi_n> - E_n delta_mn|, K = tau H_S + p O."""
    o = o if isinstance(o, HermitianOperator) else HermitianOperator(o, name="O")
    hs = system.h.matrix
    worst = 0.0
    for p in np.asarray(p_grid, dtype=float):
        v = expm_hermitian(HermitianOperator(tau * hs + p * o.matrix), -1j)
        conj = system.in_eigenbasis(v.conj().T @ hs @ v)
        worst = max(worst, float(np.max(np.abs(conj - np.diag(system.energies)))))
    return worst


def sandwich_identity_defects(system: SystemHamiltonian, o) -> tuple[float, float]:
    """(||[O~, H_S]||, max_n |<O~>_n - <O>_n|) -- both vanish exactly in theory."""
    o = o if isinstance(o, HermitianOperator) else HermitianOperator(o, name="O")
    o_tilde = sandwich_observable(system, o)
    comm = commutator_norm(o_tilde, system.h)
    diag_t = np.real(np.diag(system.in_eigenbasis(o_tilde)))
    diag_o = np.real(np.diag(system.in_eigenbasis(o)))
    return comm, float(np.max(np.abs(diag_t - diag_o)))


def joint_hs_commutator(setup: MeasurementSetup) -> float:
    """||[O (x) P, H_S (x) 1]|| computed on the joint space (cross-check of the factorized form)."""
    return operator_norm(commutator(tensor_product(setup.observable, setup.apparatus.P),
                                    embed_system(setup.system.h, setup.dim_a)))
