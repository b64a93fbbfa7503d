//! Gibbs measures of the hard-core model with spin set ℤ on Cayley trees.
//!
//! The toolkit solves the translation-invariant and two-periodic
//! boundary-law fixed-point systems of the model, locates the critical
//! total activity `Λ_cr(k) = k^k/(k−1)^{k+1}`, classifies the phase regime,
//! builds the tree-indexed Markov chains with their closed-form stationary
//! distributions, and Monte-Carlo samples admissible configurations on
//! finite balls for verification at desk scale.
//!
//! Modules, bottom-up:
//! - [`activities`]: activity sequences `{λ_j}` and certified series sums;
//! - [`phase`]: scalar fixed-point solvers and regime classification;
//! - [`boundary`]: boundary-law vectors, consistency residuals,
//!   normalisability;
//! - [`chain`]: truncated transition kernels and stationary distributions;
//! - [`simulate`]: seeded tree sampling and empirical statistics.

pub mod activities;
pub mod boundary;
pub mod chain;
pub mod error;
pub mod phase;
pub mod simulate;

pub use activities::{ActivitySpec, FnWeight, SeriesSum, UnitWeight, Weight};
pub use boundary::{ti_law, periodic_pair, BoundaryLaw, LawOverride, Normalisability, PeriodicLawPair};
pub use chain::{
    build_periodic_kernel, build_ti_kernel, required_truncation, residual_of_vector, row_sum,
    stationarity_residual, stationary_periodic, stationary_ti, KernelKind, OffZeroRow,
    StationaryDist, TransitionKernel,
};
pub use error::{Error, Result};
pub use phase::{
    classify, closed_form_pair_k2, critical_lambda, fixed_points_of_h, solve_translation_invariant,
    solve_two_periodic, LambdaInput, ModelParams, PhaseReport, Regime, Residuals,
};
pub use simulate::{
    empirical_marginals, sample_tree, Branch, MarginalCounts, Measure, MeasureTag, ParityFilter,
    Sampler, TreeBall, TreeSample,
};
