//! Monte Carlo checks of the ρ → ∞ behaviour of `MPo(ρX)`.
//!
//! With coupled draws `(X, Y)`, `Y | X ~ Poisson(ρX)`:
//!
//! * `Y/ρ → X` in probability, with `E((Y/ρ − X)²) = μ₁/ρ` (scaling).
//! * `Z = (Y − ρX)/√ρ ⇒ N(0, X)`, the normal variance mixture (clt).
//! * Centering by an independent copy `X*` breaks the limit (wrong centering).
//! * An atom of `X` at zero survives as an atom of the limit (point mass).
//! * In several coordinates the `W_j = Y_j − ρ_j X_j` are uncorrelated even
//!   for dependent mixing (multivariate).
//!
//! Every empirical moment is compared with the exact finite-ρ value at
//! 4 standard errors; limits are reported alongside.

mod experiments;
pub mod ks;
pub mod mixture_cdf;
pub mod report;
pub mod stats;

pub use experiments::{
    ks_threshold, run_clt_experiment, run_clt_trend, run_moment_experiment,
    run_multivariate_experiment, run_point_mass_experiment, run_scaling_experiment,
    run_wrong_centering_experiment, ExperimentConfig, MultivariateConfig, DEFAULT_MAX_MOMENT_ORDER,
    DEFAULT_SAMPLE_SIZE, DEFAULT_THRESHOLDS, KS_THRESHOLDS, MAX_MOMENT_ORDER, MIN_SAMPLE_SIZE,
};
pub use ks::{ks_statistic, DistributionFunction};
pub use mixture_cdf::NormalVarianceMixtureCdf;
pub use report::{Estimate, ExperimentReport, Relation, RhoRecord, Verdict};
