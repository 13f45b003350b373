//! Generic multi-chain sampler, draw storage and convergence diagnostics.

mod diagnostic;
mod draws;
mod engine;
mod summary;

pub use diagnostic::{
    all_diagnostics, interval_diagnostic, interval_ratio, IntervalDiagnostic,
    CONVERGENCE_THRESHOLD, DEFAULT_COVERAGE, MIN_DRAWS_PER_CHAIN,
};
pub use draws::PosteriorDraws;
pub use engine::{
    initial_state, run_chains, BlockAdaptation, ChainConfig, ChainReport, Model, ParameterBlock,
    Support, UpdateKind, INIT_RETRIES,
};
pub use summary::{mean, quantile, quantile_sorted, Summary};
