"""Exception hierarchy shared across the package."""

from __future__ import annotations


class ProtectiveError(Exception):
    """Base class for all package errors."""


class ContractViolation(ProtectiveError, ValueError):
    """Inputs violate a documented precondition (shapes, dims, ranges)."""


class CapacityError(ProtectiveError):
    """Requested joint dimension exceeds the configured dense-storage cap."""


class NotHermitian(ContractViolation):
    def __init__(self, defect: float, tolerance: float, what: str = "matrix"):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"{what} is not Hermitian: max|M - M^dagger| = {defect:.3e} > {tolerance:.1e}"
        )


class NumericalError(ProtectiveError, ArithmeticError):
    """A dense factorization failed or produced non-finite output."""


class DegenerateSpectrum(ProtectiveError):
    """Two eigenvalues are closer than the degeneracy tolerance.

    ``pair`` holds the offending (sorted) eigenvalue indices and ``gap`` the
    measured separation. ``location`` is optional context, e.g. the step of an
    interpolation path at which the gap closed.
    """

    def __init__(self, pair: tuple[int, int], gap: float, tolerance: float, location: str = ""):
        self.pair = pair
        self.gap = gap
        self.tolerance = tolerance
        self.location = location
        where = f" at {location}" if location else ""
        super().__init__(
            f"degenerate spectrum{where}: levels {pair[0]} and {pair[1]} separated by "
            f"{gap:.3e} <= {tolerance:.3e}"
        )


class ConstructionError(ProtectiveError):
    """A built object failed its own invariant check."""


class AccuracyError(ProtectiveError):
    """Time slicing did not converge: doubling the step count moved U too much."""

    def __init__(self, defect: float, tolerance: float, n_steps: int):
        self.defect = defect
        self.tolerance = tolerance
        self.n_steps = n_steps
        super().__init__(
            f"slicing not converged at n_steps={n_steps}: ||U_n - U_2n|| = {defect:.3e} > {tolerance:.1e}"
        )


class ReadoutError(ProtectiveError):
    """Pointer probability reached the lattice edge; the mean is unreliable."""


class IncompleteTomography(ProtectiveError):
    """Observable set does not determine a state of the requested dimension."""


class InconsistentExpectations(ProtectiveError):
    """No pure state reproduces the supplied expectation values."""

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(f"expectation residual {residual:.3e} exceeds {tolerance:.1e}")


class ConfigError(ProtectiveError):
    """Scenario configuration failed to parse or validate.

    ``errors`` lists every problem found, as human-readable strings that start
    with a key path or a line/column location.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))
