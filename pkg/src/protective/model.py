"""Physical ingredients of the coupled system + pointer model.

Units: hbar = 1. Energies and times of the system are in matching arbitrary
units; pointer position is measured in "pointer units" so that a coupling
``O (x) P`` with integrated strength 1 shifts the pointer by ``<O>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy import integrate

from .errors import ConstructionError, ContractViolation, DegenerateSpectrum
from .linalg import (
    HermitianOperator,
    StateVector,
    commutator,
    embed_apparatus,
    embed_system,
    fix_phases,
    get_tolerances,
    operator_norm,
    tensor_product,
)


@dataclass(frozen=True, eq=False)
class SystemHamiltonian:
    """Nondegenerate system Hamiltonian with its sorted eigenbasis.

    ``vectors[:, n]`` is the n-th eigenvector, energies ascend.
    """

    h: HermitianOperator
    energies: np.ndarray
    vectors: np.ndarray
    min_gap: float

    @property
    def dim(self) -> int:
        return self.h.dim

    def eigenstate(self, n: int) -> StateVector:
        return StateVector(self.vectors[:, n])

    def projector(self, n: int) -> np.ndarray:
        v = self.vectors[:, n]
        return np.outer(v, v.conj())

    def in_eigenbasis(self, op) -> np.ndarray:
        """Matrix elements <phi_m| op |phi_n>."""
        return self.vectors.conj().T @ np.asarray(op) @ self.vectors


def check_nondegenerate(energies: np.ndarray, scale: float, location: str = "") -> float:
    """Return the minimum level spacing or raise DegenerateSpectrum."""
    if len(energies) < 2:
        return math.inf
    gaps = np.diff(energies)
    i = int(np.argmin(gaps))
    tol = get_tolerances().degeneracy_rel * scale
    if gaps[i] <= tol:
        raise DegenerateSpectrum((i, i + 1), float(gaps[i]), tol, location)
    return float(gaps[i])


def build_system(h_matrix) -> SystemHamiltonian:
    """Diagonalize and validate a system Hamiltonian.

    Raises DegenerateSpectrum when two levels are within
    ``degeneracy_rel * ||H_S||``; the caller may perturb the Hamiltonian to
    lift the degeneracy.
    """
    h = h_matrix if isinstance(h_matrix, HermitianOperator) else HermitianOperator(h_matrix, name="H_S")
    energies, vectors = h.eigh()
    min_gap = check_nondegenerate(energies, operator_norm(h))
    vectors = fix_phases(vectors)
    if np.max(np.abs(vectors.conj().T @ vectors - np.eye(h.dim))) > get_tolerances().unitarity:
        raise ConstructionError("eigenvectors of H_S are not orthonormal to tolerance")
    energies.setflags(write=False)
    vectors.setflags(write=False)
    return SystemHamiltonian(h, energies, vectors, min_gap)


@dataclass(frozen=True, eq=False)
class ApparatusModel:
    """Periodic pointer lattice with FFT-conjugate momentum.

    Position grid ``q_j = (j - n/2) dq`` spans ``[-L/2, L/2)``; momenta are the
    FFT frequencies ``2 pi k / (n dq)`` in numpy order. ``fourier`` maps
    position amplitudes to momentum amplitudes (unitary DFT).
    """

    n_points: int
    dq: float
    mass_parameter: float
    positions: np.ndarray
    momenta: np.ndarray
    fourier: np.ndarray
    Q: HermitianOperator
    P: HermitianOperator
    h_a: HermitianOperator
    free_energies: np.ndarray = field(repr=False)  # H_A eigenvalue for each momentum

    @property
    def dim(self) -> int:
        return self.n_points

    @property
    def length(self) -> float:
        return self.n_points * self.dq

    def free_evolution(self, tau: float) -> np.ndarray:
        f = self.fourier
        return f.conj().T @ (np.exp(-1j * tau * self.free_energies)[:, None] * f)

    def to_momentum(self, chi) -> np.ndarray:
        return self.fourier @ np.asarray(chi)


def build_apparatus(n_points: int = 256, dq: float = 0.125, mass_parameter: float = 1e3) -> ApparatusModel:
    """Pointer lattice with ``H_A = P^2 / (2 M)``; ``M = inf`` gives ``H_A = 0``."""
    if n_points < 16 or n_points & (n_points - 1):
        raise ContractViolation(f"n_points must be a power of two >= 16, got {n_points}")
    if not dq > 0 or not math.isfinite(dq):
        raise ContractViolation(f"dq must be positive and finite, got {dq}")
    if not mass_parameter > 0:
        raise ContractViolation(f"mass_parameter must be positive (or inf), got {mass_parameter}")

    positions = (np.arange(n_points) - n_points // 2) * dq
    momenta = 2 * np.pi * np.fft.fftfreq(n_points, d=dq)
    fourier = np.fft.fft(np.eye(n_points), axis=0, norm="ortho")
    f_dag = fourier.conj().T
    if math.isinf(mass_parameter):
        free = np.zeros(n_points)
    else:
        free = momenta**2 / (2 * mass_parameter)

    Q = HermitianOperator(np.diag(positions).astype(complex), name="Q")
    P = HermitianOperator(f_dag @ (momenta[:, None] * fourier), name="P")
    h_a = HermitianOperator(f_dag @ (free[:, None] * fourier), name="H_A")

    c = commutator(h_a, P)
    bound = get_tolerances().commutator_rel * max(np.max(free) * np.max(np.abs(momenta)), 1.0)
    # the Frobenius norm bounds the operator norm; fall back to the SVD only if it is inconclusive
    comm = float(np.linalg.norm(c))
    if comm > bound:
        comm = operator_norm(c)
    if comm > bound:
        raise ConstructionError(f"[H_A, P] = {comm:.3e} exceeds {bound:.3e}")

    for a in (positions, momenta, fourier, free):
        a.setflags(write=False)
    return ApparatusModel(n_points, float(dq), float(mass_parameter), positions, momenta,
                          fourier, Q, P, h_a, free)


def gaussian_packet(apparatus: ApparatusModel, center_q: float = 0.0, width_sigma: float = 1.0,
                    momentum_offset: float = 0.0) -> StateVector:
    """Lattice Gaussian whose position density has standard deviation ``width_sigma``."""
    q = apparatus.positions
    amp = np.exp(-((q - center_q) ** 2) / (4 * width_sigma**2) + 1j * momentum_offset * q)
    return StateVector.normalized(amp)


@dataclass(frozen=True)
class SwitchProfile:
    """Coupling profile g(t) on [0, tau] with unit time integral.

    ``smooth_ramp`` uses sin^2 half-ramps of width ``ramp_fraction * tau`` at
    both ends and a plateau of height ``1 / (tau (1 - ramp_fraction))``.
    """

    kind: Literal["ideal_constant", "smooth_ramp"] = "ideal_constant"
    tau: float = 1e3
    ramp_fraction: float = 0.1

    def __post_init__(self):
        if self.kind not in ("ideal_constant", "smooth_ramp"):
            raise ContractViolation(f"unknown switch kind {self.kind!r}")
        if not self.tau > 0 or not math.isfinite(self.tau):
            raise ContractViolation(f"tau must be positive and finite, got {self.tau}")
        if self.kind == "smooth_ramp" and not 0 < self.ramp_fraction <= 0.2:
            raise ContractViolation(f"ramp_fraction must lie in (0, 0.2], got {self.ramp_fraction}")

    @property
    def plateau(self) -> float:
        if self.kind == "ideal_constant":
            return 1.0 / self.tau
        return 1.0 / (self.tau * (1.0 - self.ramp_fraction))

    def with_tau(self, tau: float) -> SwitchProfile:
        return replace(self, tau=float(tau))

    def integral(self) -> float:
        """Adaptive quadrature of g over [0, tau]."""
        w = self.ramp_fraction * self.tau
        pts = [w, self.tau - w] if self.kind == "smooth_ramp" else None
        val, _ = integrate.quad(lambda t: g_of_t(self, t), 0.0, self.tau, points=pts,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        return val


def g_of_t(switch: SwitchProfile, t):
    """Switch function; zero outside [0, tau]. Accepts scalars or arrays."""
    t_arr = np.asarray(t, dtype=float)
    tau = switch.tau
    inside = (t_arr >= 0.0) & (t_arr <= tau)
    if switch.kind == "ideal_constant":
        out = np.where(inside, 1.0 / tau, 0.0)
    else:
        w = switch.ramp_fraction * tau
        h = switch.plateau
        rise = h * np.sin(np.pi * t_arr / (2 * w)) ** 2
        fall = h * np.sin(np.pi * (tau - t_arr) / (2 * w)) ** 2
        out = np.where(t_arr < w, rise, np.where(t_arr > tau - w, fall, h))
        out = np.where(inside, out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TimeSlicing:
    n_steps: int = 256
    scheme: Literal["midpoint"] = "midpoint"

    def __post_init__(self):
        if int(self.n_steps) < 1:
            raise ContractViolation(f"n_steps must be >= 1, got {self.n_steps}")
        if self.scheme != "midpoint":
            raise ContractViolation(f"only the midpoint scheme is supported, got {self.scheme!r}")


@dataclass(frozen=True, eq=False)
class MeasurementSetup:
    system: SystemHamiltonian
    apparatus: ApparatusModel
    observable: HermitianOperator
    switch: SwitchProfile = SwitchProfile()
    slicing: TimeSlicing = TimeSlicing()

    def __post_init__(self):
        if not isinstance(self.observable, HermitianOperator):
            object.__setattr__(self, "observable", HermitianOperator(self.observable, name="O"))
        if self.observable.dim != self.system.dim:
            raise ContractViolation(
                f"observable dim {self.observable.dim} != system dim {self.system.dim}"
            )

    @property
    def dim_s(self) -> int:
        return self.system.dim

    @property
    def dim_a(self) -> int:
        return self.apparatus.dim

    @property
    def tau(self) -> float:
        return self.switch.tau

    def with_tau(self, tau: float) -> MeasurementSetup:
        return replace(self, switch=self.switch.with_tau(tau))

    def with_observable(self, o) -> MeasurementSetup:
        return replace(self, observable=o if isinstance(o, HermitianOperator) else HermitianOperator(o, name="O"))


def total_hamiltonian(setup: MeasurementSetup, t: float) -> HermitianOperator:
    """``H_S (x) 1 + 1 (x) H_A + g(t) O (x) P`` as a dense joint operator."""
    ds, da = setup.dim_s, setup.dim_a
    g = g_of_t(setup.switch, t)
    m = (embed_system(setup.system.h, da) + embed_apparatus(setup.apparatus.h_a, ds)
         + g * tensor_product(setup.observable, setup.apparatus.P))
    return HermitianOperator(m, name="H_tot")


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)
