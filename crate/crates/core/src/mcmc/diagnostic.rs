//! Interval-based potential scale reduction.
//!
//! The ratio compares the length of the central `coverage` interval of the
//! pooled draws with the mean length of the same interval within each chain.
//! Quantiles are empirical (inverse ECDF), so chains with identical draws
//! give exactly 1.

use super::draws::PosteriorDraws;
use crate::error::{Error, Result};

pub const DEFAULT_COVERAGE: f64 = 0.80;
pub const CONVERGENCE_THRESHOLD: f64 = 1.1;
pub const MIN_DRAWS_PER_CHAIN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalDiagnostic {
    pub ratio: f64,
    /// Every draw in every chain is the same value.
    pub degenerate: bool,
}

impl IntervalDiagnostic {
    pub fn converged(&self) -> bool {
        self.ratio <= CONVERGENCE_THRESHOLD
    }
}

fn ecdf_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = (n as f64 * p).ceil() as usize;
    sorted[k.clamp(1, n) - 1]
}

fn interval_length(sorted: &[f64], coverage: f64) -> f64 {
    let tail = (1.0 - coverage) / 2.0;
    ecdf_quantile(sorted, 1.0 - tail) - ecdf_quantile(sorted, tail)
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Ratio for raw per-chain sequences.
pub fn interval_ratio(chains: &[Vec<f64>], coverage: f64) -> Result<IntervalDiagnostic> {
    if chains.len() < 2 {
        return Err(Error::invalid(
            "interval diagnostic needs at least two chains",
        ));
    }
    if chains.iter().any(|c| c.len() < MIN_DRAWS_PER_CHAIN) {
        return Err(Error::invalid(format!(
            "interval diagnostic needs at least {MIN_DRAWS_PER_CHAIN} draws per chain"
        )));
    }
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::invalid("coverage must lie in (0, 1)"));
    }
    let first = chains[0][0];
    if chains
        .iter()
        .flatten()
        .all(|v| v.to_bits() == first.to_bits())
    {
        return Ok(IntervalDiagnostic {
            ratio: 1.0,
            degenerate: true,
        });
    }
    let within = chains
        .iter()
        .map(|c| interval_length(&sorted(c), coverage))
        .sum::<f64>()
        / chains.len() as f64;
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let total = interval_length(&sorted(&pooled), coverage);
    let ratio = if within > 0.0 {
        total / within
    } else if total > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(IntervalDiagnostic {
        ratio,
        degenerate: false,
    })
}

pub fn interval_diagnostic(
    draws: &PosteriorDraws,
    parameter: &str,
    coverage: f64,
) -> Result<IntervalDiagnostic> {
    interval_ratio(&draws.chains(parameter)?, coverage)
}

/// Diagnostics for every stored parameter, in storage order.
pub fn all_diagnostics(
    draws: &PosteriorDraws,
    coverage: f64,
) -> Result<Vec<(String, IntervalDiagnostic)>> {
    draws
        .names()
        .iter()
        .map(|n| Ok((n.clone(), interval_diagnostic(draws, n, coverage)?)))
        .collect()
}
