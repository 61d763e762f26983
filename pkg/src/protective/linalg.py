"""Dense complex linear algebra kernel.

Index convention for every joint (system x apparatus) object: the system index
is slow and the apparatus index is fast, i.e. joint index ``s * dimA + a``.
This matches ``numpy.kron(system_op, apparatus_op)`` and a C-order reshape of a
joint vector to ``(dimS, dimA)``. Other modules go through the helpers here
instead of doing index arithmetic themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import CapacityError, ContractViolation, NotHermitian, NumericalError


@dataclass(frozen=True)
class Tolerances:
    """One place for every numerical threshold used by the package."""

    construction: float = 1e-12  # Hermiticity defect, state normalization
    unitarity: float = 1e-10
    propagator_unitarity: float = 1e-8
    commutator_rel: float = 1e-10  # [H_A, P] relative to ||H_A|| ||P||
    degeneracy_rel: float = 1e-9  # eigenvalue gap relative to ||H_S||
    density_trace: float = 1e-10
    slicing: float = 1e-6  # allowed ||U_n - U_2n|| for smooth switch profiles
    edge_mass: float = 1e-6  # pointer probability allowed near the lattice edge
    reconstruction: float = 1e-3  # expectation residual for tomography
    max_joint_dim: int = 4096


PROFILES: dict[str, Tolerances] = {
    "default": Tolerances(),
    "strict": Tolerances(slicing=1e-8, edge_mass=1e-9, reconstruction=1e-4),
}

_active = PROFILES["default"]


def get_tolerances() -> Tolerances:
    return _active


def set_tolerance_profile(profile: str | Tolerances) -> Tolerances:
    """Select the process-wide tolerance profile by name or instance."""
    global _active
    if isinstance(profile, str):
        try:
            profile = PROFILES[profile]
        except KeyError:
            raise ContractViolation(
                f"unknown tolerance profile {profile!r}; choose from {sorted(PROFILES)}"
            ) from None
    _active = profile
    return _active


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_matrix(a, *, square: bool = False, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array (a ComplexMatrix)."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise ContractViolation(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractViolation(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ContractViolation("state has non-finite amplitudes")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > get_tolerances().construction:
            raise ContractViolation(f"state norm {norm!r} differs from 1; use StateVector.normalized")
        object.__setattr__(self, "amplitudes", _frozen(v))

    @classmethod
    def normalized(cls, amplitudes) -> StateVector:
        v = np.array(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if not np.isfinite(norm) or norm == 0.0:
            raise ContractViolation("cannot normalize a zero or non-finite vector")
        return cls(v / norm)

    @classmethod
    def basis(cls, dim: int, index: int) -> StateVector:
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def expectation(self, op) -> float:
        m = op.matrix if isinstance(op, HermitianOperator) else op
        return float(np.real(np.vdot(self.amplitudes, m @ self.amplitudes)))

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


class HermitianOperator:
    """Square complex matrix certified Hermitian at construction.

    The stored matrix is the Hermitian part ``(M + M^dagger) / 2`` so that later
    eigendecompositions see an exactly self-adjoint input; the defect of the
    original input is kept in ``hermiticity_defect``.
    """

    __slots__ = ("matrix", "hermiticity_defect")

    def __init__(self, matrix, tolerance: float | None = None, name: str = "operator"):
        m = as_matrix(matrix, square=True, name=name)
        tol = get_tolerances().construction if tolerance is None else tolerance
        defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        if defect > tol:
            raise NotHermitian(defect, tol, name)
        self.matrix = _frozen(0.5 * (m + m.conj().T))
        self.hermiticity_defect = defect

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim}, defect={self.hermiticity_defect:.1e})"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        try:
            w, v = np.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                f"eigendecomposition failed (dim {self.dim}, 1-norm condition "
                f"{np.linalg.cond(self.matrix, 1):.3e}): {exc}"
            ) from exc
        return w, v

    def __add__(self, other: HermitianOperator) -> HermitianOperator:
        return HermitianOperator(self.matrix + other.matrix)

    def scaled(self, c: float) -> HermitianOperator:
        return HermitianOperator(float(c) * self.matrix)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def _raw(m) -> np.ndarray:
    if isinstance(m, (HermitianOperator, StateVector)):
        return np.asarray(m)
    return np.asarray(m, dtype=complex)


def tensor_product(a, b, max_dim: int | None = None) -> np.ndarray:
    """Kronecker product with the first factor's index slow.

    Both arguments must be square matrices, or both vectors.
    """
    a, b = _raw(a), _raw(b)
    cap = get_tolerances().max_joint_dim if max_dim is None else max_dim
    if a.ndim == 1 and b.ndim == 1:
        dim = a.shape[0] * b.shape[0]
    elif a.ndim == 2 and b.ndim == 2 and a.shape[0] == a.shape[1] and b.shape[0] == b.shape[1]:
        dim = a.shape[0] * b.shape[0]
    else:
        raise ContractViolation(f"tensor_product needs two square matrices or two vectors, got {a.shape} and {b.shape}")
    if dim > cap:
        raise CapacityError(f"joint dimension {dim} exceeds cap {cap}")
    return np.kron(a, b)


def product_state(phi: StateVector, chi: StateVector) -> StateVector:
    return StateVector(tensor_product(phi.amplitudes, chi.amplitudes))


def embed_system(op, dim_a: int) -> np.ndarray:
    """``op (x) 1`` on the joint space."""
    return tensor_product(op, np.eye(dim_a))


def embed_apparatus(op, dim_s: int) -> np.ndarray:
    """``1 (x) op`` on the joint space."""
    return tensor_product(np.eye(dim_s), op)


def split_joint(psi, dim_s: int, dim_a: int) -> np.ndarray:
    """View a joint vector as a ``(dimS, dimA)`` coefficient matrix."""
    v = _raw(psi).reshape(-1)
    if v.shape[0] != dim_s * dim_a:
        raise ContractViolation(f"joint vector has length {v.shape[0]}, expected {dim_s}*{dim_a}")
    return v.reshape(dim_s, dim_a)


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """``exp(scale * H)`` for Hermitian ``H`` via eigendecomposition.

    ``h`` may also be a stack of Hermitian blocks with shape ``(..., d, d)``;
    each block is exponentiated independently.
    """
    if isinstance(h, HermitianOperator):
        w, v = h.eigh()
    else:
        m = np.asarray(h, dtype=complex)
        if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
            raise ContractViolation(f"expm_hermitian needs square blocks, got {m.shape}")
        try:
            w, v = np.linalg.eigh(m)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"batched eigendecomposition failed: {exc}") from exc
    phases = np.exp(complex(scale) * w)
    out = (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix exponential overflowed; |scale| * ||H|| too large for a real scale")
    return out


def partial_trace_system(
    rho, dim_s: int, dim_a: int, keep: Literal["system", "apparatus"] = "system"
) -> np.ndarray:
    """Reduced density matrix of one factor of a joint density matrix."""
    r = _raw(rho)
    n = dim_s * dim_a
    if r.shape != (n, n):
        raise ContractViolation(f"rho has shape {r.shape}, expected ({n}, {n}) for dims {dim_s}x{dim_a}")
    tr = np.trace(r)
    if abs(tr - 1.0) > get_tolerances().density_trace:
        raise ContractViolation(f"rho has trace {tr:.12g}, expected 1")
    r4 = r.reshape(dim_s, dim_a, dim_s, dim_a)
    if keep == "system":
        out = np.einsum("iaja->ij", r4)
    elif keep == "apparatus":
        out = np.einsum("iaib->ab", r4)
    else:
        raise ContractViolation(f"keep must be 'system' or 'apparatus', got {keep!r}")
    return 0.5 * (out + out.conj().T)


def reduced_density(psi, dim_s: int, dim_a: int, keep: Literal["system", "apparatus"] = "system") -> np.ndarray:
    """Reduced state of a pure joint vector without forming the joint density."""
    c = split_joint(psi, dim_s, dim_a)
    if keep == "system":
        out = c @ c.conj().T
    elif keep == "apparatus":
        out = c.T @ c.conj()
    else:
        raise ContractViolation(f"keep must be 'system' or 'apparatus', got {keep!r}")
    return 0.5 * (out + out.conj().T)


def schmidt_coefficients(psi, dim_s: int, dim_a: int) -> np.ndarray:
    """Squared Schmidt coefficients (probabilities), descending."""
    s = np.linalg.svd(split_joint(psi, dim_s, dim_a), compute_uv=False)
    return s**2


def entanglement_entropy(psi, dim_s: int, dim_a: int) -> float:
    """Von Neumann entropy of the reduced state, in nats."""
    lam = schmidt_coefficients(psi, dim_s, dim_a)
    lam = lam[lam > 0.0]
    return float(max(0.0, -np.sum(lam * np.log(lam))))


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component of each column real positive."""
    v = vectors.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        big = np.abs(col) > 1e-10 * np.max(np.abs(col))
        x = col[np.argmax(big)]
        v[:, j] = col * (abs(x) / x)
    return v


def operator_norm(m) -> float:
    """Largest singular value."""
    a = _raw(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"operator_norm needs a square matrix, got {a.shape}")
    try:
        return float(np.linalg.norm(a, 2))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc


def unitarity_defect(u) -> float:
    """max |U^dagger U - 1|."""
    a = _raw(u)
    return float(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))))


def commutator(a, b) -> np.ndarray:
    a, b = _raw(a), _raw(b)
    return a @ b - b @ a


def trace_distance(rho, sigma) -> float:
    d = _raw(rho) - _raw(sigma)
    d = 0.5 * (d + d.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(d))))


def state_fidelity(psi: StateVector, rho) -> float:
    """<psi| rho |psi> clipped to [0, 1]."""
    val = float(np.real(np.vdot(psi.amplitudes, _raw(rho) @ psi.amplitudes)))
    return min(1.0, max(0.0, val))


def momentum_blocks_to_joint(blocks: np.ndarray, fourier: np.ndarray) -> np.ndarray:
    """Assemble a joint operator that is block diagonal in pointer momentum.

    ``blocks[k]`` is the ``dimS x dimS`` system block for momentum index ``k``
    and ``fourier`` the unitary map from pointer position to momentum
    amplitudes. Returns the operator in the (system, pointer position) basis.
    """
    blocks = np.asarray(blocks, dtype=complex)
    n, d, d2 = blocks.shape
    if d != d2 or fourier.shape != (n, n):
        raise ContractViolation(f"blocks {blocks.shape} incompatible with Fourier matrix {fourier.shape}")
    if n * d > get_tolerances().max_joint_dim:
        raise CapacityError(f"joint dimension {n * d} exceeds cap {get_tolerances().max_joint_dim}")
    f_dag = fourier.conj().T
    out = np.empty((d, n, d, n), dtype=complex)
    for a in range(d):
        for b in range(d):
            out[a, :, b, :] = f_dag @ (blocks[:, a, b, None] * fourier)
    return out.reshape(d * n, d * n)
