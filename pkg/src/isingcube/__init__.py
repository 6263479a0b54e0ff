"""Energy-landscape analysis and Glauber dynamics for the Ising model on Q_n.

The package computes, enumerates, simulates and cross-verifies the objects
governing metastable crossover on the n-dimensional hypercube: isoperimetric
minimisers, the energy barrier, critical droplets and their neighbour
counts, the variational prefactor, and exact or sampled hitting times.
"""

from .errors import (
    BudgetError,
    CapabilityError,
    InvariantViolation,
    IsingCubeError,
    ParameterError,
    PrecisionError,
)
from .hypercube import Automorphism, Config, SubCube, canonical_form, edge_counts, neighbors
from .energy import EnergyValue, ModelParams, validate_field
from .landscape import (
    BarrierProfile,
    FiltrationIndex,
    build_filtration,
    comm_height,
    gamma_star_brute,
    gamma_star_closed,
    metastable_set,
    stability_level,
    wells_scan,
)
from .critical import CriticalReport, c_star_enumerate, critical_report
from .dynamics import (
    HittingSolution,
    SimulationStats,
    committor,
    exact_expected_hitting,
    first_hit_distribution,
    gate_probability,
    kmc_run,
    simulate_hitting,
)

__version__ = "0.1.0"

__all__ = [
    "Automorphism",
    "BarrierProfile",
    "BudgetError",
    "CapabilityError",
    "Config",
    "CriticalReport",
    "EnergyValue",
    "FiltrationIndex",
    "HittingSolution",
    "InvariantViolation",
    "IsingCubeError",
    "ModelParams",
    "ParameterError",
    "PrecisionError",
    "SimulationStats",
    "SubCube",
    "build_filtration",
    "c_star_enumerate",
    "canonical_form",
    "comm_height",
    "committor",
    "critical_report",
    "edge_counts",
    "exact_expected_hitting",
    "first_hit_distribution",
    "gamma_star_brute",
    "gamma_star_closed",
    "gate_probability",
    "kmc_run",
    "metastable_set",
    "neighbors",
    "simulate_hitting",
    "stability_level",
    "validate_field",
    "wells_scan",
    "__version__",
]
