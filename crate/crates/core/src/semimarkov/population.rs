//! Synthetic population of purchase histories, survey extraction and the
//! population-level truth.

use rand::Rng;
use rayon::prelude::*;

use super::params::{equilibrium, focal_next};
use crate::clv::{ClvDistribution, RevenueSpec};
use crate::dist::{
    bernoulli_sample, beta_sample, exponential_sample, sample_gamma, tags, GammaSpec, RngStream,
};
use crate::error::{Error, Result};
use crate::survey::BrandId;

pub const FOCAL: BrandId = BrandId(1);
pub const COMPETITOR: BrandId = BrandId(2);
pub const STATE_LABELS: [&str; 2] = ["Focal", "Competitor"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub gamma: f64,
    pub delta: f64,
    pub p_shape: (f64, f64),
    pub q_shape: (f64, f64),
    /// Years simulated before the survey.
    pub past_years: f64,
    /// Years simulated after the survey.
    pub future_years: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            gamma: 3.0,
            delta: 10.0,
            p_shape: (4.0, 6.0),
            q_shape: (4.0, 6.0),
            past_years: 30.0,
            future_years: 40.0,
        }
    }
}

/// Purchases in years relative to the survey, strictly increasing, each with
/// the state entered (`true` for the focal company).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PurchaseHistory {
    pub purchases: Vec<(f64, bool)>,
}

impl PurchaseHistory {
    /// Purchases up to and including the survey time.
    pub fn before_survey(&self) -> &[(f64, bool)] {
        let k = self.purchases.partition_point(|(t, _)| *t <= 0.0);
        &self.purchases[..k]
    }

    pub fn after_survey(&self) -> &[(f64, bool)] {
        let k = self.purchases.partition_point(|(t, _)| *t <= 0.0);
        &self.purchases[k..]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub lambda: f64,
    pub p: f64,
    pub q: f64,
    /// State at the start of the simulated window.
    pub initial_focal: bool,
    pub history: PurchaseHistory,
}

impl Individual {
    /// State at the survey: that of the latest purchase before it.
    pub fn current_focal(&self) -> bool {
        self.history
            .before_survey()
            .last()
            .map_or(self.initial_focal, |&(_, s)| s)
    }
}

fn generate_one(config: &GeneratorConfig, rng: &mut RngStream) -> Result<Individual> {
    let lambda = sample_gamma(GammaSpec::new(config.gamma, config.delta)?, rng);
    let p = beta_sample(config.p_shape.0, config.p_shape.1, rng)?;
    let q = beta_sample(config.q_shape.0, config.q_shape.1, rng)?;
    let initial_focal = bernoulli_sample(equilibrium(p, q), rng)?;
    let mut state = initial_focal;
    let mut t = -config.past_years;
    let mut purchases = Vec::new();
    loop {
        t += exponential_sample(lambda, rng);
        if t > config.future_years {
            break;
        }
        state = bernoulli_sample(focal_next(p, q, state), rng)?;
        purchases.push((t, state));
    }
    Ok(Individual {
        lambda,
        p,
        q,
        initial_focal,
        history: PurchaseHistory { purchases },
    })
}

/// Simulates `n` individuals over `[-past_years, future_years]`.
pub fn generate_population(
    n: usize,
    config: &GeneratorConfig,
    seed: u64,
) -> Result<Vec<Individual>> {
    if n == 0 {
        return Err(Error::Validation("population size must be positive".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            generate_one(
                config,
                &mut RngStream::keyed(seed, &[tags::POPULATION, i as u64]),
            )
        })
        .collect()
}

/// What a survey records about one individual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurveyObservation {
    /// Current state.
    pub s0: bool,
    /// State before the current one.
    pub s1: bool,
    /// Years between the last two purchases.
    pub t: f64,
    /// Years since the last purchase.
    pub t_star: f64,
}

impl SurveyObservation {
    /// `None` unless the individual bought at least twice before the survey.
    pub fn of(individual: &Individual) -> Option<Self> {
        let pre = individual.history.before_survey();
        let [.., (t1, s1), (t0, s0)] = *pre else {
            return None;
        };
        Some(Self {
            s0,
            s1,
            t: t0 - t1,
            t_star: -t0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveySample {
    /// Population indices of the respondents, in draw order.
    pub members: Vec<usize>,
    pub observations: Vec<SurveyObservation>,
    /// Sampled individuals skipped for having fewer than two purchases.
    pub rejections: usize,
}

/// Draws `n` individuals uniformly without replacement, redrawing those who
/// have not bought twice before the survey.
pub fn extract_survey(population: &[Individual], n: usize, seed: u64) -> Result<SurveySample> {
    let eligible = population
        .iter()
        .filter(|i| SurveyObservation::of(i).is_some())
        .count();
    if n > eligible {
        return Err(Error::Validation(format!(
            "sample of {n} requested but only {eligible} individuals bought twice before the survey"
        )));
    }
    let mut rng = RngStream::keyed(seed, &[tags::SURVEY, n as u64]);
    let mut order: Vec<usize> = (0..population.len()).collect();
    let mut sample = SurveySample {
        members: Vec::with_capacity(n),
        observations: Vec::with_capacity(n),
        rejections: 0,
    };
    let mut k = 0;
    while sample.members.len() < n {
        let j = rng.random_range(k..order.len());
        order.swap(k, j);
        let idx = order[k];
        k += 1;
        match SurveyObservation::of(&population[idx]) {
            Some(obs) => {
                sample.members.push(idx);
                sample.observations.push(obs);
            }
            None => sample.rejections += 1,
        }
    }
    Ok(sample)
}

/// Revenue settings with `value` per focal purchase and nothing for the
/// competitors.
pub fn focal_revenue(value: f64, horizon_years: f64, annual_discount: f64) -> RevenueSpec {
    RevenueSpec {
        asp: vec![value, 0.0],
        annual_discount,
        horizon_months: 12.0 * horizon_years,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueCe {
    pub ce: f64,
    pub mean_clv: f64,
    /// Individuals whose latest purchase was with the focal company.
    pub focal: ClvDistribution,
    pub competitor: ClvDistribution,
    pub clv: Vec<f64>,
}

/// CLV of every individual from their simulated future purchases and the
/// customer equity as their sum.
pub fn true_ce_oracle(population: &[Individual], revenue: &RevenueSpec) -> Result<TrueCe> {
    revenue.validate(2)?;
    if population.is_empty() {
        return Err(Error::Validation("empty population".into()));
    }
    let clv: Vec<f64> = population
        .par_iter()
        .map(|ind| {
            ind.history
                .after_survey()
                .iter()
                .filter(|(t, _)| 12.0 * t <= revenue.horizon_months)
                .fold(0.0, |acc, &(t, focal)| {
                    acc + revenue.discounted(if focal { FOCAL } else { COMPETITOR }, 12.0 * t)
                })
        })
        .collect();
    let split = |want: bool| -> Vec<f64> {
        population
            .iter()
            .zip(&clv)
            .filter(|(ind, _)| ind.current_focal() == want)
            .map(|(_, v)| *v)
            .collect()
    };
    let ce: f64 = clv.iter().sum();
    Ok(TrueCe {
        ce,
        mean_clv: ce / clv.len() as f64,
        focal: ClvDistribution::of(&split(true))?,
        competitor: ClvDistribution::of(&split(false))?,
        clv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn individual(purchases: Vec<(f64, bool)>) -> Individual {
        Individual {
            lambda: 1.0,
            p: 0.5,
            q: 0.5,
            initial_focal: false,
            history: PurchaseHistory { purchases },
        }
    }

    #[test]
    fn absorbing_states_never_change() {
        let cfg = GeneratorConfig {
            p_shape: (1e6, 1e-6),
            q_shape: (1e6, 1e-6),
            ..Default::default()
        };
        for ind in generate_population(200, &cfg, 5).unwrap() {
            assert!(ind
                .history
                .purchases
                .iter()
                .all(|(_, s)| *s == ind.initial_focal));
        }
    }

    #[test]
    fn observation_from_last_two_purchases() {
        let ind = individual(vec![
            (-9.0, false),
            (-4.0, true),
            (-1.5, false),
            (2.0, true),
        ]);
        let obs = SurveyObservation::of(&ind).unwrap();
        assert_eq!(
            obs,
            SurveyObservation {
                s0: false,
                s1: true,
                t: 2.5,
                t_star: 1.5
            }
        );
        assert!(!ind.current_focal());
        assert!(SurveyObservation::of(&individual(vec![(-1.0, true), (3.0, true)])).is_none());
    }

    #[test]
    fn extraction() {
        let pop = generate_population(2000, &GeneratorConfig::default(), 2).unwrap();
        assert!(extract_survey(&pop, 0, 1).unwrap().members.is_empty());
        let s = extract_survey(&pop, 300, 1).unwrap();
        let mut m = s.members.clone();
        m.sort_unstable();
        m.dedup();
        assert_eq!(m.len(), 300);
        for (idx, obs) in s.members.iter().zip(&s.observations) {
            assert_eq!(SurveyObservation::of(&pop[*idx]).unwrap(), *obs);
        }
        assert!(extract_survey(&pop, 2001, 1).is_err());
    }

    #[test]
    fn oracle_by_hand() {
        let pop = vec![
            individual(vec![(-1.0, true), (1.0, true), (3.0, false)]),
            individual(vec![(-1.0, false), (2.0, true)]),
        ];
        let t = true_ce_oracle(&pop, &focal_revenue(100.0, 40.0, 0.1)).unwrap();
        let a = 100.0 / 1.1;
        let b = 100.0 / 1.21;
        assert!((t.ce - (a + b)).abs() < 1e-9);
        assert_eq!(t.focal.n, 1);
        assert!((t.competitor.mean - b).abs() < 1e-9);
        let zero = true_ce_oracle(&pop, &focal_revenue(100.0, 0.0, 0.1)).unwrap();
        assert_eq!(zero.ce, 0.0);
    }
}
