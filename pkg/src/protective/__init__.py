"""Simulation toolkit for protective (adiabatic, weak) quantum measurements.

A finite-dimensional system is coupled through ``g(t) O (x) P`` to a pointer
on a periodic lattice. The package propagates the joint state exactly,
compares it with the adiabatic propagator built from the H_S-diagonal part of
``O``, and reports pointer shifts, system fidelities and entanglement.
"""

from .errors import (
    AccuracyError,
    CapacityError,
    ConfigError,
    ConstructionError,
    ContractViolation,
    DegenerateSpectrum,
    IncompleteTomography,
    InconsistentExpectations,
    NotHermitian,
    NumericalError,
    ProtectiveError,
    ReadoutError,
)
from .linalg import HermitianOperator, StateVector, Tolerances, get_tolerances, set_tolerance_profile
from .measurement import PointerPreparation, RunRecord, reconstruct_state, run_protective, run_von_neumann
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
)
from .propagator import build_u_app, compare_propagators, evolve_exact, sandwich_observable
from .report import ScenarioReport, Table, Verdict

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "ApparatusModel", "CapacityError", "ConfigError", "ConstructionError",
    "ContractViolation", "DegenerateSpectrum", "HermitianOperator", "IncompleteTomography",
    "InconsistentExpectations", "MeasurementSetup", "NotHermitian", "NumericalError", "PointerPreparation",
    "ProtectiveError", "ReadoutError", "RunRecord", "SIGMA_X", "SIGMA_Y", "SIGMA_Z", "ScenarioReport",
    "StateVector", "SwitchProfile", "SystemHamiltonian", "Table", "TimeSlicing", "Tolerances", "Verdict",
    "build_apparatus", "build_system", "build_u_app", "compare_propagators", "evolve_exact",
    "get_tolerances", "reconstruct_state", "run_protective", "run_von_neumann", "sandwich_observable",
    "set_tolerance_profile",
]
