//! Posterior predictive checks for a mobile fit.

use rayon::prelude::*;

use super::model::{check_draws, DrawView};
use super::params::{acquisition_probs, rate_of, repurchase_prob};
use crate::dist::{bernoulli_sample, categorical_sample, gamma_cdf, tags, GammaSpec, RngStream};
use crate::error::{Error, Result};
use crate::mcmc::{quantile_sorted, PosteriorDraws};
use crate::survey::{BrandId, ModelDataset, RecordSource, MAX_INTERVAL_MONTHS};

#[derive(Debug, Clone, PartialEq)]
pub struct BrandRegeneration {
    pub labels: Vec<String>,
    pub observed: Vec<usize>,
    pub mean: Vec<f64>,
    pub lo95: Vec<f64>,
    pub hi95: Vec<f64>,
    pub n_draws: usize,
}

impl BrandRegeneration {
    /// Brands whose observed count falls outside the 95% band.
    pub fn outside_band(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&b| {
                let o = self.observed[b] as f64;
                o < self.lo95[b] || o > self.hi95[b]
            })
            .collect()
    }
}

/// Simulates one transition per historical record from its previous brand
/// for every posterior draw, and compares the tallied brands with the
/// observed current brands.
pub fn regenerate_brands(
    draws: &PosteriorDraws,
    data: &ModelDataset,
    seed: u64,
) -> Result<BrandRegeneration> {
    check_draws(draws, &data.brands)?;
    let n_brands = data.n_brands();
    let recs: Vec<_> = data
        .transitions()
        .iter()
        .filter(|r| r.source == RecordSource::Historical)
        .collect();
    let mut observed = vec![0usize; n_brands];
    for r in &recs {
        let b = r
            .next_brand()
            .expect("transition records carry a next brand");
        observed[b.index()] += 1;
    }
    let counts: Vec<Vec<usize>> = (0..draws.n_pooled())
        .into_par_iter()
        .map(|k| -> Result<Vec<usize>> {
            let v = DrawView::new(draws.pooled_draw(k), n_brands);
            let mut rng = RngStream::keyed(seed, &[tags::PPC, 0, k as u64]);
            let mut tally = vec![0usize; n_brands];
            for r in &recs {
                let p = repurchase_prob(r.prev_brand, &r.covariates, v.alpha);
                let next = if bernoulli_sample(p, &mut rng)? {
                    r.prev_brand
                } else {
                    let probs =
                        acquisition_probs(r.prev_brand, &v.weight_column(r.covariates.agegr))?;
                    BrandId(categorical_sample(&probs, &mut rng)?)
                };
                tally[next.index()] += 1;
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;

    let mut mean = Vec::with_capacity(n_brands);
    let mut lo95 = Vec::with_capacity(n_brands);
    let mut hi95 = Vec::with_capacity(n_brands);
    for b in 0..n_brands {
        let mut v: Vec<f64> = counts.iter().map(|c| c[b] as f64).collect();
        mean.push(v.iter().sum::<f64>() / v.len() as f64);
        v.sort_by(f64::total_cmp);
        lo95.push(quantile_sorted(&v, 0.025));
        hi95.push(quantile_sorted(&v, 0.975));
    }
    Ok(BrandRegeneration {
        labels: data.brands.clone(),
        observed,
        mean,
        lo95,
        hi95,
        n_draws: counts.len(),
    })
}

/// Default CDF grid in months. Stops short of the 200-month cap, where the
/// empirical upper-bound CDF jumps to one by construction.
pub fn default_grid() -> Vec<f64> {
    (0..100).map(|i| 2.0 * i as f64).collect()
}

pub const DEFAULT_REALIZATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CdfEnvelope {
    /// Months.
    pub grid: Vec<f64>,
    /// Pooled draw index behind each realization.
    pub draw_indices: Vec<usize>,
    /// `realizations[r][g]`: model CDF of the purchase interval.
    pub realizations: Vec<Vec<f64>>,
    /// Empirical CDF of the interval lower bounds (upper edge of the band).
    pub tmin_cdf: Vec<f64>,
    /// Empirical CDF of the interval upper bounds (lower edge of the band).
    pub tmax_cdf: Vec<f64>,
}

impl CdfEnvelope {
    pub fn realization_within_band(&self, r: usize) -> bool {
        self.realizations[r]
            .iter()
            .zip(self.tmin_cdf.iter().zip(&self.tmax_cdf))
            .all(|(f, (up, low))| *f >= *low - 1e-12 && *f <= *up + 1e-12)
    }

    /// Share of realizations that stay inside the band at every grid point.
    pub fn fraction_within_band(&self) -> f64 {
        let n = self.realizations.len();
        (0..n).filter(|&r| self.realization_within_band(r)).count() as f64 / n as f64
    }
}

/// Posterior realizations of the purchase-interval CDF, each the mixture of
/// `Gamma(kappa, lambda_i)` over the finitely censored records, together with
/// the empirical CDFs of their interval bounds.
pub fn cdf_envelope(
    draws: &PosteriorDraws,
    data: &ModelDataset,
    grid: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<CdfEnvelope> {
    check_draws(draws, &data.brands)?;
    if grid
        .iter()
        .any(|g| !(*g >= 0.0 && *g <= MAX_INTERVAL_MONTHS))
    {
        return Err(Error::invalid(
            "CDF grid points must lie in [0, 200] months",
        ));
    }
    let recs: Vec<_> = data
        .records
        .iter()
        .filter(|r| !r.interval.is_right_censored())
        .collect();
    if recs.is_empty() {
        return Err(Error::Validation(
            "no interval-censored records to check".into(),
        ));
    }
    let n = recs.len() as f64;
    let ecdf = |bound: &dyn Fn(usize) -> f64| -> Vec<f64> {
        grid.iter()
            .map(|&g| (0..recs.len()).filter(|&i| bound(i) <= g).count() as f64 / n)
            .collect()
    };
    let tmin_cdf = ecdf(&|i| recs[i].interval.t_min());
    let tmax_cdf = ecdf(&|i| recs[i].interval.t_max());

    let mut pick = RngStream::keyed(seed, &[tags::DRAW_PICK]);
    let draw_indices: Vec<usize> = (0..n_realizations)
        .map(|_| (pick.uniform() * draws.n_pooled() as f64) as usize)
        .collect();
    let n_brands = data.n_brands();
    let realizations = draw_indices
        .par_iter()
        .map(|&k| -> Result<Vec<f64>> {
            let v = DrawView::new(draws.pooled_draw(k), n_brands);
            let specs: Vec<GammaSpec> = recs
                .iter()
                .map(|r| GammaSpec::new(v.kappa, rate_of(r.prev_brand, &r.covariates, v.beta)))
                .collect::<Result<_>>()?;
            Ok(grid
                .iter()
                .map(|&g| specs.iter().map(|s| gamma_cdf(g / 12.0, *s)).sum::<f64>() / n)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(CdfEnvelope {
        grid: grid.to_vec(),
        draw_indices,
        realizations,
        tmin_cdf,
        tmax_cdf,
    })
}
