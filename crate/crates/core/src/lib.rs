//! Numerical tools for the max-min characterization of mountain-pass levels.
//!
//! For a functional `F = T - U` the crate computes constrained minima
//! `i_λ = inf{T(u) : U(u) = λ}`, assembles the level curve `I_λ = i_λ - λ`
//! and its maximum over `(0, λ**)`, and compares that value with an
//! independent mountain-pass estimate obtained by deforming paths from `0`
//! to a point of negative energy. Two radial p-Laplacian problems (a
//! Hardy-potential problem on ℝⁿ and a critical-exponent problem on a ball)
//! and a finite-dimensional toy family are provided.

pub mod constrained;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod interp;
pub mod linalg;
pub mod maxmin;
pub mod mpa;
pub mod nonlinearity;
pub mod problem;
pub mod toy;
pub mod variational;
pub mod verify;

pub use constrained::{
    continuation_sweep, first_failure, log_spaced, minimize_on_level, MinimizeOptions,
    MinimizeResult, SweepEntry, SweepOptions,
};
pub use error::{Error, Result};
pub use functionals::{
    critical_exponent, estimate_mu_p, estimate_mu_p_on, hardy_constant, RadialKind, RadialProblem,
    REGULARIZATION_DELTA,
};
pub use grid::{
    apply_scaling, build_radial_grid, quadrature, GridFunction, GridRecord, RadialGrid,
    ScalingAction, ScalingKind,
};
pub use maxmin::{
    build_level_curve, closed_form_lambda_bar, evaluate_f_along_path, fit_power_law,
    power_law_argmax, power_law_root, scaling_path, LambdaBarCandidates, LevelCurve, LevelSummary,
    PowerLawFit,
};
pub use mpa::{
    deform, estimate_c, init_path, Deformed, DiscretePath, MpaEstimate, MpaOptions, TraceRow,
};
pub use nonlinearity::Nonlinearity;
pub use problem::{GridConfig, ProblemConfig, ProblemSpec, Variant};
pub use toy::{toy_c_bruteforce, toy_closed_form, toy_i_lambda, ToyClosedForm, ToyProblem};
pub use variational::Variational;
pub use verify::{
    closed_form_candidates, el_residual, multiplier_of, pick_solution_scale, scaled_minimizer,
    Candidate, SolutionScale, VerificationReport,
};
