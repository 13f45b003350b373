use super::params::focal_next;
use super::population::{SurveyObservation, COMPETITOR, FOCAL};
use crate::clv::{
    ce_by_draw, clv_distribution, simulate_histories, ClvDistribution, ClvSamples, HistoryPlan,
    Purchase, PurchaseProcess, RevenueSpec,
};
use crate::dist::{bernoulli_sample, exponential_sample, RngStream};
use crate::error::{Error, Result};
use crate::mcmc::{mean, quantile, PosteriorDraws};
use crate::survey::{PopulationStrata, StratumKey};

/// Future purchases of the surveyed individuals under their posterior
/// `(lambda_i, p_i, q_i)`, starting from the current state. The time to the
/// first purchase is a fresh exponential interval.
pub struct SemiMarkovProcess<'a> {
    draws: &'a PosteriorDraws,
    data: &'a [SurveyObservation],
    lambda_at: usize,
    p_at: usize,
    q_at: usize,
}

impl<'a> SemiMarkovProcess<'a> {
    pub fn new(draws: &'a PosteriorDraws, data: &'a [SurveyObservation]) -> Result<Self> {
        let n = data.len();
        let at = |name: String| {
            draws
                .index_of(&name)
                .ok_or_else(|| Error::invalid(format!("draws lack `{name}`")))
        };
        let (lambda_at, p_at, q_at) = (
            at("lambda[1]".into())?,
            at("p[1]".into())?,
            at("q[1]".into())?,
        );
        if n == 0 || draws.names().len() < q_at + n || at(format!("q[{n}]"))? != q_at + n - 1 {
            return Err(Error::invalid("draws do not match the survey observations"));
        }
        Ok(Self {
            draws,
            data,
            lambda_at,
            p_at,
            q_at,
        })
    }
}

impl PurchaseProcess for SemiMarkovProcess<'_> {
    fn n_draws(&self) -> usize {
        self.draws.n_pooled()
    }

    fn n_individuals(&self) -> usize {
        self.data.len()
    }

    fn n_brands(&self) -> usize {
        2
    }

    fn simulate(
        &self,
        draw: usize,
        individual: usize,
        horizon: f64,
        rng: &mut RngStream,
        out: &mut Vec<Purchase>,
    ) -> Result<()> {
        let row = self.draws.pooled_draw(draw);
        let lambda = row[self.lambda_at + individual];
        let (p, q) = (row[self.p_at + individual], row[self.q_at + individual]);
        let mut focal = self.data[individual].s0;
        let mut time = 12.0 * exponential_sample(lambda, rng);
        while time <= horizon {
            focal = bernoulli_sample(focal_next(p, q, focal), rng)?;
            out.push(Purchase {
                time,
                brand: if focal { FOCAL } else { COMPETITOR },
            });
            time += 12.0 * exponential_sample(lambda, rng);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeEstimate {
    /// Population CE under each simulated draw.
    pub ce_draws: Vec<f64>,
    pub mean: f64,
    pub decile1: f64,
    pub decile9: f64,
    /// Simulated CLVs of current focal customers.
    pub focal: ClvDistribution,
    pub competitor: ClvDistribution,
    pub samples: ClvSamples,
}

/// Posterior CE of a population of `population_size` individuals: the mean
/// simulated CLV of the sample under each draw, scaled by the population size.
pub fn estimate_ce(
    draws: &PosteriorDraws,
    data: &[SurveyObservation],
    population_size: f64,
    revenue: &RevenueSpec,
    plan: HistoryPlan,
) -> Result<CeEstimate> {
    let process = SemiMarkovProcess::new(draws, data)?;
    let samples = simulate_histories(&process, revenue, plan)?;
    let strata = PopulationStrata::whole(population_size, data.len())?;
    let keys = vec![StratumKey::Whole; data.len()];
    let ce_draws = ce_by_draw(&samples, &keys, &strata)?.swap_remove(FOCAL.index());
    let members =
        |want: bool| -> Vec<usize> { (0..data.len()).filter(|&i| data[i].s0 == want).collect() };
    Ok(CeEstimate {
        mean: mean(&ce_draws),
        decile1: quantile(&ce_draws, 0.1),
        decile9: quantile(&ce_draws, 0.9),
        focal: clv_distribution(&samples, &members(true), FOCAL)?,
        competitor: clv_distribution(&samples, &members(false), FOCAL)?,
        ce_draws,
        samples,
    })
}
