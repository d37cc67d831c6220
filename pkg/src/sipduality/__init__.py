"""Finite-site numerics for the inclusion process, Pascal point process and Meixner duality.

Everything is built over a :class:`SiteSpace` (site masses ``alpha`` and a
parameter ``p``) and its truncation to sectors of at most ``n_max``
particles, :class:`TruncatedSpace`.
"""
from .fock import (
    CapacityError,
    DegenerateWeightError,
    SectorBasis,
    SiteSpace,
    TruncatedSpace,
    enumerate_sector,
    inner_product,
    pascal_weight,
    rising_factorial,
    sector_size,
    weighted_norm,
)
from .meixner import (
    MeixnerParams,
    PolynomialExpansion,
    build_I_n,
    evaluate_expansion,
    generating_function,
    generating_partial_sum,
    meixner_M,
    meixner_monic,
    monic_by_recurrence,
)
from .operators import (
    WeightedOperator,
    build_k_minus,
    build_k_plus,
    build_k_zero,
    commutator,
    identity,
    weighted_adjoint,
)
from .pascal import (
    McEstimate,
    RngStream,
    check_laplace,
    check_papangelou,
    laplace_closed_form,
    sample_pascal_compound,
    sample_pascal_direct,
)
from .sip import (
    RateKernel,
    SectorGenerator,
    TrajectoryEvent,
    build_generator,
    build_generator_algebraic,
    check_conservative_factorials,
    check_consistency,
    check_detailed_balance,
    expected_jumps,
    gillespie_simulate,
    removal_operator,
    sector_generators,
    semigroup_apply,
    semigroup_matrix,
)
from .unitary import (
    MobiusAction,
    TruncationResidual,
    UnitaryParams,
    apply_theorem_check,
    apply_unitary,
    build_unitary,
    check_exponential_transform,
    check_intertwining,
    check_symmetry,
    exponential_state,
    k_transform,
    mobius_transform,
    multiplier,
    weighted_unitarity_defect,
)
from .scenario import Report, Scenario, default_scenario, load_scenarios
from .cli import export_tables, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
