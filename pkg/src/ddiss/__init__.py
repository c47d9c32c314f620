"""Finite-horizon dissipativity certificates from measured plant data.

The public surface re-exports the signal containers, polynomial and rational
matrix algebra, state-space utilities, the dissipativity checks themselves,
and the scripted studies. Anything not listed here is internal.
"""

from .dissipativity import (
    Certificate,
    FiniteHorizonLfr,
    SupplyRate,
    assemble_closed_loop_B,
    assemble_generalized_plant_B,
    bisect_l2_gain,
    build_closed_loop_lfr,
    check_closed_loop_dissipativity,
    check_data_only_dissipativity,
    data_only_l2_gain,
    finite_horizon_l2_gain_dd,
    lift_supply,
    nullspace,
)
from .errors import (
    CoprimenessWarning,
    DdissError,
    DegenerateNullspace,
    DegreeZero,
    DimensionMismatch,
    EmptyTrajectory,
    HorizonTooLong,
    HorizonTooShort,
    IllPosedInterconnection,
    NoFiniteGain,
    ParseError,
    PrefixExceedsHorizon,
    PrefixPolicyViolated,
    RankConditionViolated,
    SingularDenominator,
    UnstableClosedLoop,
    UnstableSystem,
    ZeroMatrix,
    ZeroPolynomial,
)
from .experiments import (
    ExperimentConfig,
    GainReport,
    PropertyOutcome,
    RankReport,
    run_example1,
    run_example2,
    run_fig1,
    run_property_campaign,
    shipped_controller,
    two_mass_plant,
)
from .fileio import load_supply, load_system, render_certificate, write_certificate
from .lti import (
    StateSpace,
    ToeplitzOperator,
    build_extended_state,
    check_extended_rank,
    discretize_zoh,
    finite_horizon_gain_mb,
    hinf_norm,
    integrate_zoh_rk4,
    measured_lag,
    random_stable_system,
    realize,
    simulate,
    ss_lft,
    ss_to_rational,
    toeplitz_operator,
)
from .polymat import (
    IoRepresentation,
    Poly,
    PolyMatrix,
    Rational,
    RationalMatrix,
    is_coprime,
    lft_lower,
    lft_upper,
    poly_gcd,
    poly_lcm,
    rational_to_io,
    toeplitz_lift,
)
from .signals import (
    DataDictionary,
    Selector,
    Trajectory,
    build_hankel,
    check_fundamental_rank,
    is_persistently_exciting,
    load_dictionary,
    numerical_rank,
    save_dictionary,
    stacked_hankel,
    zero_prefix_selector,
)

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CoprimenessWarning",
    "DataDictionary",
    "DdissError",
    "DegenerateNullspace",
    "DegreeZero",
    "DimensionMismatch",
    "EmptyTrajectory",
    "ExperimentConfig",
    "FiniteHorizonLfr",
    "GainReport",
    "HorizonTooLong",
    "HorizonTooShort",
    "IllPosedInterconnection",
    "IoRepresentation",
    "NoFiniteGain",
    "ParseError",
    "Poly",
    "PolyMatrix",
    "PrefixExceedsHorizon",
    "PrefixPolicyViolated",
    "PropertyOutcome",
    "RankConditionViolated",
    "RankReport",
    "Rational",
    "RationalMatrix",
    "Selector",
    "SingularDenominator",
    "StateSpace",
    "SupplyRate",
    "ToeplitzOperator",
    "Trajectory",
    "UnstableClosedLoop",
    "UnstableSystem",
    "ZeroMatrix",
    "ZeroPolynomial",
    "assemble_closed_loop_B",
    "assemble_generalized_plant_B",
    "bisect_l2_gain",
    "build_closed_loop_lfr",
    "build_extended_state",
    "build_hankel",
    "check_closed_loop_dissipativity",
    "check_data_only_dissipativity",
    "check_extended_rank",
    "check_fundamental_rank",
    "data_only_l2_gain",
    "discretize_zoh",
    "finite_horizon_gain_mb",
    "finite_horizon_l2_gain_dd",
    "hinf_norm",
    "integrate_zoh_rk4",
    "is_coprime",
    "is_persistently_exciting",
    "lft_lower",
    "lft_upper",
    "lift_supply",
    "load_dictionary",
    "load_supply",
    "load_system",
    "measured_lag",
    "nullspace",
    "numerical_rank",
    "poly_gcd",
    "poly_lcm",
    "random_stable_system",
    "rational_to_io",
    "realize",
    "render_certificate",
    "run_example1",
    "run_example2",
    "run_fig1",
    "run_property_campaign",
    "save_dictionary",
    "shipped_controller",
    "simulate",
    "ss_lft",
    "ss_to_rational",
    "stacked_hankel",
    "toeplitz_lift",
    "toeplitz_operator",
    "two_mass_plant",
    "write_certificate",
    "zero_prefix_selector",
]
