"""Radial eigensolvers for a position-dependent-mass oscillator under
two rival kinetic-operator orderings, with cross-validation tooling.

The model: mass m(r) = 1 + lam r**2 in the bounded potential
omega**2 r**2 / (2 m(r)), reduced to a half-line radial equation in N
dimensions.  Two Hermitian kinetic orderings (mass outside the full
Laplacian vs. the BenDaniel-Duke divergence form) give different
spectra; this package measures the difference with two independent
solver paths (conservative finite differences and Numerov shooting)
plus a closed-form reference for the first ordering.
"""

from .analysis import (
    AccumulationProfile,
    ComparisonReport,
    ConvergenceStudy,
    DegeneracySplit,
    LevelComparison,
    accumulation_profile,
    compare_orderings,
    convergence_order,
    degeneracy_split,
    degenerate_pairs,
)
from .discretize import (
    Eigenpairs,
    GeneralizedProblem,
    RadialGrid,
    Spectrum,
    SpectrumLevel,
    TridiagonalOperator,
    assemble_bdd,
    assemble_naive,
    build_grid,
    lowest_eigenpairs,
    reduce_to_standard,
    refine_and_extrapolate,
    solve_spectrum,
    sturm_count,
)
from .errors import (
    BracketError,
    ConfigError,
    ContinuumError,
    IntegrationError,
    NoDegeneratePairsError,
    NotAnEigenvalueError,
    PdmError,
    ShootingConvergenceError,
    ThresholdUnboundedError,
)
from .model import (
    HBAR,
    EffectiveRadialForm,
    Formulation,
    ModelParams,
    Ordering,
    bdd_liouville_form,
    bdd_sturm_liouville_form,
    closed_form_energy_at_nu,
    continuum_threshold,
    eta,
    eta_signed,
    mass_eval,
    naive_closed_form_energy,
    naive_form,
    nu_label,
    potential_eval,
    radial_exponent,
)
from .shooting import (
    RadialSolution,
    ShootSpec,
    SweepResult,
    eigenfunction,
    find_eigenvalue,
    numerov_sweep,
    shooting_form,
    solve_levels,
)

__version__ = "1.0.0"

__all__ = [
    "HBAR",
    "__version__",
    # model
    "EffectiveRadialForm",
    "Formulation",
    "ModelParams",
    "Ordering",
    "bdd_liouville_form",
    "bdd_sturm_liouville_form",
    "closed_form_energy_at_nu",
    "continuum_threshold",
    "eta",
    "eta_signed",
    "mass_eval",
    "naive_closed_form_energy",
    "naive_form",
    "nu_label",
    "potential_eval",
    "radial_exponent",
    # discretization / eigensolve
    "Eigenpairs",
    "GeneralizedProblem",
    "RadialGrid",
    "Spectrum",
    "SpectrumLevel",
    "TridiagonalOperator",
    "assemble_bdd",
    "assemble_naive",
    "build_grid",
    "lowest_eigenpairs",
    "reduce_to_standard",
    "refine_and_extrapolate",
    "solve_spectrum",
    "sturm_count",
    # shooting oracle
    "RadialSolution",
    "ShootSpec",
    "SweepResult",
    "eigenfunction",
    "find_eigenvalue",
    "numerov_sweep",
    "shooting_form",
    "solve_levels",
    # analysis
    "AccumulationProfile",
    "ComparisonReport",
    "ConvergenceStudy",
    "DegeneracySplit",
    "LevelComparison",
    "accumulation_profile",
    "compare_orderings",
    "convergence_order",
    "degeneracy_split",
    "degenerate_pairs",
    # errors
    "BracketError",
    "ConfigError",
    "ContinuumError",
    "IntegrationError",
    "NoDegeneratePairsError",
    "NotAnEigenvalueError",
    "PdmError",
    "ShootingConvergenceError",
    "ThresholdUnboundedError",
]
