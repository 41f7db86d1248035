//! Exact discrete optimal transport.
//!
//! Finite metric spaces, probability measures and couplings, a transportation
//! simplex solver with brute-force oracles, Wasserstein distances with gluing,
//! and checks of lower semicontinuity. Every routine is generic over
//! [`Scalar`], implemented for exact [`Rational`] arithmetic and for `f64`.

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod generate;
pub mod io;
pub mod measure;
pub mod scalar;
pub mod solver;
pub mod space;
pub mod wasserstein;

pub use analysis::{
    check_moreau_yosida_properties, exactness_threshold, liminf_cost_check, moreau_yosida, narrow_limit_check, ExtendedFunction,
    LiminfReport, MeasureSequence, MoreauYosidaReport, NarrowLimitReport,
};
pub use coupling::{
    is_coupling, marginals, product_coupling, restrict_and_normalize, singleton_indicator_pairs, tail_mass_bound_check,
    verify_coupling_via_test_functions, CouplingReport, CouplingViolation, MarginalConstraint, Restriction, TailBound,
    TestFunctionFailure, TransportPlan,
};
pub use error::{OtError, Result};
pub use measure::{measures_equal, DiscreteMeasure, EqualityMode, TestFunction};
pub use scalar::{tol_from_f64, Extended, NumericMode, Rational, Scalar, FLOAT_MASS_TOL, FLOAT_TOL};
pub use solver::{
    check_lower_bound, cost_of_plan, oracle_basis_enumeration, oracle_permutation, solve_kantorovich, verify_restriction_optimality,
    InfeasibilityCut, LowerBoundCheck, OTSolution, RestrictionCheck,
};
pub use space::{power_cost, validate_metric, CostMatrix, FiniteMetricSpace, LowerBound, MetricAxiom, MetricViolation, NormOrder};
pub use wasserstein::{
    glue, glued_marginal_13, metric_axiom_suite, triangle_witness, wasserstein_distance, AxiomOutcome, GluedPlan, MetricSuiteReport,
    TriangleWitness, WassersteinAxiom, WassersteinDistance, WassersteinParams,
};
