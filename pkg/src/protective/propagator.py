"""Exact and adiabatic propagators for the coupled model.

Every Hamiltonian here commutes with ``1 (x) P`` and ``H_A`` is a function of
``P``, so in the pointer momentum basis the joint generator is block diagonal
with one ``dimS x dimS`` block per lattice momentum ``p_k``::

    H_k(t) = H_S + E_A(p_k) + g(t) p_k O

The default ``method="blocks"`` exponentiates these blocks and assembles the
full joint matrix; ``method="dense"`` exponentiates the joint matrix directly
and exists as an independent cross-check for small lattices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, ContractViolation
from .linalg import (
    HermitianOperator,
    embed_apparatus,
    embed_system,
    expm_hermitian,
    get_tolerances,
    momentum_blocks_to_joint,
    operator_norm,
    tensor_product,
    unitarity_defect,
)
from .model import MeasurementSetup, SystemHamiltonian, TimeSlicing, g_of_t, total_hamiltonian

__all__ = [
    "PropagatorPair",
    "TimeSlicing",
    "build_u_app",
    "compare_propagators",
    "conservation_defect",
    "evolve_exact",
    "evolve_exact_with_defect",
    "sandwich_observable",
    "slicing_defect",
]


def sandwich_observable(system: SystemHamiltonian, o) -> HermitianOperator:
    """The H_S-diagonal part of ``o``: sum_n P_n O P_n."""
    o = o if isinstance(o, HermitianOperator) else HermitianOperator(o, name="O")
    if o.dim != system.dim:
        raise ContractViolation(f"observable dim {o.dim} != system dim {system.dim}")
    out = np.zeros_like(o.matrix)
    for n in range(system.dim):
        pn = system.projector(n)
        out += pn @ o.matrix @ pn
    return HermitianOperator(out, name="O~")


def _blocks(setup: MeasurementSetup, dt: float, coupling: float, o: np.ndarray) -> np.ndarray:
    """Stack of ``dt (H_S + E_A(p_k)) + coupling p_k O`` for every momentum k."""
    app = setup.apparatus
    hs = setup.system.h.matrix
    eye = np.eye(setup.dim_s)
    return (dt * (hs[None] + app.free_energies[:, None, None] * eye[None])
            + coupling * app.momenta[:, None, None] * o[None])


def _ideal_blocks(setup: MeasurementSetup, o: np.ndarray) -> np.ndarray:
    return expm_hermitian(_blocks(setup, setup.tau, 1.0, o), -1j)


def _sliced_blocks(setup: MeasurementSetup, n_steps: int) -> np.ndarray:
    dt = setup.tau / n_steps
    o = setup.observable.matrix
    u = np.broadcast_to(np.eye(setup.dim_s, dtype=complex), (setup.dim_a, setup.dim_s, setup.dim_s)).copy()
    for j in range(n_steps):
        g = g_of_t(setup.switch, (j + 0.5) * dt)
        u = expm_hermitian(_blocks(setup, dt, g * dt, o), -1j) @ u
    return u


def _dense_ideal(setup: MeasurementSetup, o: np.ndarray) -> np.ndarray:
    ds, da = setup.dim_s, setup.dim_a
    gen = (setup.tau * (embed_system(setup.system.h, da) + embed_apparatus(setup.apparatus.h_a, ds))
           + tensor_product(o, setup.apparatus.P))
    return expm_hermitian(HermitianOperator(gen, name="generator"), -1j)


def _dense_sliced(setup: MeasurementSetup, n_steps: int) -> np.ndarray:
    dt = setup.tau / n_steps
    u = np.eye(setup.dim_s * setup.dim_a, dtype=complex)
    for j in range(n_steps):
        u = expm_hermitian(total_hamiltonian(setup, (j + 0.5) * dt), -1j * dt) @ u
    return u


def _propagate(setup: MeasurementSetup, n_steps: int, method: str) -> np.ndarray:
    ideal = setup.switch.kind == "ideal_constant"
    if method == "blocks":
        blocks = _ideal_blocks(setup, setup.observable.matrix) if ideal else _sliced_blocks(setup, n_steps)
        return momentum_blocks_to_joint(blocks, setup.apparatus.fourier)
    if method == "dense":
        return _dense_ideal(setup, setup.observable.matrix) if ideal else _dense_sliced(setup, n_steps)
    raise ContractViolation(f"unknown propagation method {method!r}")


def evolve_exact_with_defect(setup: MeasurementSetup, *, method: str = "blocks",
                             check: bool = True) -> tuple[np.ndarray, float]:
    """Time-ordered propagator plus its slicing defect ``||U_n - U_2n||``.

    The ideal constant profile is a single exponential and has defect 0.
    With ``check`` a defect above the active slicing tolerance raises
    AccuracyError.
    """
    n = setup.slicing.n_steps
    u = _propagate(setup, n, method)
    if setup.switch.kind == "ideal_constant":
        return u, 0.0
    defect = operator_norm(u - _propagate(setup, 2 * n, method))
    tol = get_tolerances().slicing
    if check and defect > tol:
        raise AccuracyError(defect, tol, n)
    return u, defect


def evolve_exact(setup: MeasurementSetup, *, method: str = "blocks", check: bool = True) -> np.ndarray:
    """Full evolution operator over [0, tau].

    Ideal profile: ``exp(-i (tau (H_S + H_A) + O (x) P))``. Smooth profile:
    midpoint-rule product of slice exponentials, later slices on the left.
    """
    return evolve_exact_with_defect(setup, method=method, check=check)[0]


def slicing_defect(setup: MeasurementSetup, n_steps: int | None = None) -> float:
    """``||U_n - U_2n||`` without any tolerance check."""
    n = setup.slicing.n_steps if n_steps is None else n_steps
    if setup.switch.kind == "ideal_constant":
        return 0.0
    return operator_norm(_propagate(setup, n, "blocks") - _propagate(setup, 2 * n, "blocks"))


def build_u_app(setup: MeasurementSetup, *, method: str = "blocks") -> np.ndarray:
    """``exp(-i (H_S + H_A) tau - i O~ (x) P)``, the adiabatic propagator."""
    o_tilde = sandwich_observable(setup.system, setup.observable).matrix
    if method == "blocks":
        return momentum_blocks_to_joint(_ideal_blocks(setup, o_tilde), setup.apparatus.fourier)
    if method == "dense":
        return _dense_ideal(setup, o_tilde)
    raise ContractViolation(f"unknown propagation method {method!r}")


def conservation_defect(u: np.ndarray, system: SystemHamiltonian, dim_a: int) -> float:
    """``||U^dagger (H_S (x) 1) U - H_S (x) 1||``."""
    hs = embed_system(system.h, dim_a)
    return operator_norm(u.conj().T @ hs @ u - hs)


@dataclass(frozen=True, eq=False)
class PropagatorPair:
    u_exact: np.ndarray
    u_app: np.ndarray
    norm_diff: float
    conservation_defect: float
    app_conservation_defect: float
    slicing_defect: float
    unitarity_defect: float


def compare_propagators(setup: MeasurementSetup, *, check: bool = True) -> PropagatorPair:
    u, defect = evolve_exact_with_defect(setup, check=check)
    u_app = build_u_app(setup)
    return PropagatorPair(
        u_exact=u,
        u_app=u_app,
        norm_diff=operator_norm(u - u_app),
        conservation_defect=conservation_defect(u, setup.system, setup.dim_a),
        app_conservation_defect=conservation_defect(u_app, setup.system, setup.dim_a),
        slicing_defect=defect,
        unitarity_defect=max(unitarity_defect(u), unitarity_defect(u_app)),
    )
