//! Forward purchase histories under posterior draws of the mobile model.

use super::model::{check_draws, DrawView};
use super::params::{acquisition_probs, rate_of, repurchase_prob};
use crate::clv::{Purchase, PurchaseProcess};
use crate::dist::{
    bernoulli_sample, categorical_sample, sample_gamma, sample_truncated_gamma, GammaSpec,
    RngStream,
};
use crate::error::Result;
use crate::mcmc::PosteriorDraws;
use crate::survey::{BrandId, Customer, ModelDataset};

/// Purchase process of the surveyed customers. The first purchase comes
/// from the current interval conditioned to exceed the time already elapsed
/// (taken as the midpoint of the recalled window); every later interval uses
/// the rate of the brand just bought.
pub struct MobileProcess<'a> {
    draws: &'a PosteriorDraws,
    customers: &'a [Customer],
    n_brands: usize,
}

impl<'a> MobileProcess<'a> {
    pub fn new(draws: &'a PosteriorDraws, data: &'a ModelDataset) -> Result<Self> {
        check_draws(draws, &data.brands)?;
        Ok(Self {
            draws,
            customers: &data.customers,
            n_brands: data.n_brands(),
        })
    }
}

impl PurchaseProcess for MobileProcess<'_> {
    fn n_draws(&self) -> usize {
        self.draws.n_pooled()
    }

    fn n_individuals(&self) -> usize {
        self.customers.len()
    }

    fn n_brands(&self) -> usize {
        self.n_brands
    }

    fn simulate(
        &self,
        draw: usize,
        individual: usize,
        horizon: f64,
        rng: &mut RngStream,
        out: &mut Vec<Purchase>,
    ) -> Result<()> {
        let v = DrawView::new(self.draws.pooled_draw(draw), self.n_brands);
        let c = &self.customers[individual];
        let cov = &c.covariates;
        let mut brand = c.current_brand;
        let elapsed = c.elapsed.midpoint() / 12.0;
        let spec = GammaSpec::new(v.kappa, rate_of(brand, cov, v.beta))?;
        let first = sample_truncated_gamma(spec, elapsed, f64::INFINITY, rng)?;
        let mut time = 12.0 * (first - elapsed);
        while time <= horizon {
            brand = if bernoulli_sample(repurchase_prob(brand, cov, v.alpha), rng)? {
                brand
            } else {
                let probs = acquisition_probs(brand, &v.weight_column(cov.agegr))?;
                BrandId(categorical_sample(&probs, rng)?)
            };
            out.push(Purchase { time, brand });
            let spec = GammaSpec::new(v.kappa, rate_of(brand, cov, v.beta))?;
            time += 12.0 * sample_gamma(spec, rng);
        }
        Ok(())
    }
}
