//! Spectral-algorithm kernel regression with fixed-bandwidth Gaussian
//! kernels, adaptive regularization, hypothesis transfer under concept
//! shift, and the Monte Carlo harness used to check their convergence rates.

pub mod adaptive;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod io;
pub mod kernels;
mod linalg;
pub mod seed;
pub mod selfcheck;
pub mod simulate;
pub mod spectral;
pub mod transfer;

pub use adaptive::{adaptive_fit, candidate_grid, AdaptiveConfig, AdaptiveFit, SplitFit};
pub use data::{Dataset, Points};
pub use error::{Error, Result};
pub use evaluate::{
    excess_risk, fit_rate, simpson_integral, RateFit, RiskEstimate, StudyKind, StudyTable,
};
pub use kernels::{bessel_k, gram, GramMatrix, KernelSpec};
pub use simulate::{ShiftScenario, TruthFunction, TruthOptions};
pub use spectral::{
    filter_apply, krr_direct_solve, lambda_schedule, predict, spectral_fit, FilterKind, FilterSpec,
    FittedModel, Predictor,
};
pub use transfer::{rahtl_fit, HtlResult, TransformPair};
