use rayon::prelude::*;

use super::revenue::{npv, Purchase, RevenueSpec};
use crate::dist::{tags, RngStream};
use crate::error::{Error, Result};

pub const DEFAULT_HISTORIES: usize = 2000;

/// Forward purchase behaviour of the sampled individuals under one posterior
/// draw.
pub trait PurchaseProcess: Sync {
    fn n_draws(&self) -> usize;
    fn n_individuals(&self) -> usize;
    fn n_brands(&self) -> usize;

    /// Appends the purchases that individual `individual` makes in
    /// `(0, horizon]` months after the survey under draw `draw`.
    ///
    /// Implementations must consume `rng` purchase by purchase, so that a
    /// shorter horizon yields a prefix of the longer-horizon history.
    fn simulate(
        &self,
        draw: usize,
        individual: usize,
        horizon: f64,
        rng: &mut RngStream,
        out: &mut Vec<Purchase>,
    ) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryPlan {
    /// Histories per individual, split across posterior draws.
    pub n_histories: usize,
    pub seed: u64,
}

impl Default for HistoryPlan {
    fn default() -> Self {
        Self {
            n_histories: DEFAULT_HISTORIES,
            seed: 1,
        }
    }
}

/// Customer lifetime values per draw, individual and brand. Each entry is
/// the average over the histories simulated under that draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ClvSamples {
    pub n_draws: usize,
    pub n_individuals: usize,
    pub n_brands: usize,
    /// Process draw index behind each stored draw.
    pub draw_indices: Vec<usize>,
    pub histories_per_draw: usize,
    values: Vec<f64>,
}

impl ClvSamples {
    pub fn from_values(
        draw_indices: Vec<usize>,
        n_individuals: usize,
        n_brands: usize,
        histories_per_draw: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n_draws = draw_indices.len();
        if values.len() != n_draws * n_individuals * n_brands {
            return Err(Error::invalid("CLV value array has the wrong length"));
        }
        Ok(Self {
            n_draws,
            n_individuals,
            n_brands,
            draw_indices,
            histories_per_draw,
            values,
        })
    }

    pub fn get(&self, draw: usize, individual: usize, brand: usize) -> f64 {
        self.values[(draw * self.n_individuals + individual) * self.n_brands + brand]
    }

    /// Mean over draws for one individual and brand.
    pub fn individual_mean(&self, individual: usize, brand: usize) -> f64 {
        (0..self.n_draws)
            .map(|d| self.get(d, individual, brand))
            .sum::<f64>()
            / self.n_draws as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Draws used for the histories and the number of histories under each.
fn allocate(n_draws: usize, n_histories: usize) -> (Vec<usize>, usize) {
    if n_draws >= n_histories {
        let idx = (0..n_histories)
            .map(|j| j * n_draws / n_histories)
            .collect();
        (idx, 1)
    } else {
        ((0..n_draws).collect(), n_histories.div_ceil(n_draws))
    }
}

/// Simulates purchase histories and values them per brand.
///
/// With at least as many posterior draws as histories, one history is drawn
/// per evenly spaced draw. Otherwise every draw carries the same number of
/// histories, rounded up.
pub fn simulate_histories<P: PurchaseProcess + ?Sized>(
    process: &P,
    revenue: &RevenueSpec,
    plan: HistoryPlan,
) -> Result<ClvSamples> {
    let n_brands = process.n_brands();
    revenue.validate(n_brands)?;
    if plan.n_histories == 0 {
        return Err(Error::Validation(
            "number of histories must be positive".into(),
        ));
    }
    if process.n_draws() == 0 {
        return Err(Error::Validation(
            "no posterior draws to simulate from".into(),
        ));
    }
    let n_ind = process.n_individuals();
    let (draw_indices, per_draw) = allocate(process.n_draws(), plan.n_histories);

    let blocks: Vec<Vec<f64>> = draw_indices
        .par_iter()
        .map(|&d| -> Result<Vec<f64>> {
            let mut out = vec![0.0; n_ind * n_brands];
            let mut history = Vec::new();
            for i in 0..n_ind {
                for rep in 0..per_draw {
                    let mut rng = RngStream::keyed(
                        plan.seed,
                        &[tags::HISTORY, d as u64, i as u64, rep as u64],
                    );
                    history.clear();
                    process.simulate(d, i, revenue.horizon_months, &mut rng, &mut history)?;
                    for p in history.iter().filter(|p| p.time <= revenue.horizon_months) {
                        out[i * n_brands + p.brand.index()] +=
                            npv(std::slice::from_ref(p), revenue);
                    }
                }
            }
            let scale = 1.0 / per_draw as f64;
            out.iter_mut().for_each(|v| *v *= scale);
            if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    term: format!("CLV of individual {}", bad / n_brands),
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    ClvSamples::from_values(draw_indices, n_ind, n_brands, per_draw, blocks.concat())
}
