//! Synthetic survey answers generated from known mobile-model parameters.

use rand::seq::SliceRandom;

use super::params::{acquisition_probs, rate_of, reference, repurchase_prob, WeightMatrix};
use crate::dist::{bernoulli_sample, categorical_sample, sample_gamma, tags, GammaSpec, RngStream};
use crate::error::{Error, Result};
use crate::survey::{
    BrandCatalog, BrandId, Covariates, DateAnswer, Granularity, Respondent, YearMonth,
    MAX_INTERVAL_MONTHS,
};

/// Generating parameters (rate coefficients, repurchase coefficients,
/// popularity weights) for a synthetic survey.
#[derive(Debug, Clone, PartialEq)]
pub struct MobileTruth {
    pub kappa: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub w: WeightMatrix,
}

impl MobileTruth {
    /// Posterior means of the historical fit, four brands.
    pub fn reference() -> Self {
        Self {
            kappa: reference::KAPPA,
            beta: reference::BETA.to_vec(),
            alpha: reference::ALPHA.to_vec(),
            w: WeightMatrix::new(4, reference::W.to_vec()).expect("static weights"),
        }
    }

    /// Generating values in stored-parameter order (kappa, beta, alpha, w).
    pub fn as_vector(&self) -> Vec<f64> {
        let mut v = vec![self.kappa];
        v.extend(&self.beta);
        v.extend(&self.alpha);
        v.extend(&self.w.values);
        v
    }
}

/// Shape of the synthetic survey. Count vectors are relative weights and are
/// apportioned exactly to `n` respondents.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSurveyConfig {
    pub n: usize,
    pub survey_date: YearMonth,
    pub agegr_counts: Vec<f64>,
    pub gender_counts: Vec<f64>,
    pub region_counts: Vec<f64>,
    pub income_probs: Vec<f64>,
    pub previous_brand_probs: Vec<f64>,
    /// Month, season, year, unknown.
    pub current_granularity: [f64; 4],
    pub previous_granularity: [f64; 4],
    /// Respondents without a previous phone.
    pub no_previous: usize,
}

impl Default for SyntheticSurveyConfig {
    fn default() -> Self {
        Self {
            n: 536,
            survey_date: YearMonth {
                year: 2013,
                month: 2,
            },
            agegr_counts: vec![63.0, 88.0, 73.0, 89.0, 103.0, 120.0],
            gender_counts: vec![285.0, 251.0],
            region_counts: vec![143.0, 91.0, 155.0, 147.0],
            income_probs: vec![0.25, 0.25, 0.20, 0.15, 0.15],
            previous_brand_probs: vec![0.80, 0.04, 0.10, 0.06],
            current_granularity: [310.0, 115.0, 74.0, 37.0],
            previous_granularity: [117.0, 91.0, 146.0, 163.0],
            no_previous: 19,
        }
    }
}

/// Largest-remainder apportionment of `n` over `weights`.
fn apportion(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &j in order.iter().take(short) {
        counts[j] += 1;
    }
    counts
}

/// Shuffled list of 1-based codes with exactly the apportioned counts.
fn shuffled_codes(weights: &[f64], n: usize, rng: &mut RngStream) -> Vec<u8> {
    let mut v: Vec<u8> = apportion(weights, n)
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j as u8 + 1, c))
        .collect();
    v.shuffle(rng);
    v
}

const GRANULARITIES: [Granularity; 4] = [
    Granularity::Month,
    Granularity::Season,
    Granularity::Year,
    Granularity::Unknown,
];

fn transition(
    from: BrandId,
    c: &Covariates,
    truth: &MobileTruth,
    rng: &mut RngStream,
) -> Result<BrandId> {
    if bernoulli_sample(repurchase_prob(from, c, &truth.alpha), rng)? {
        Ok(from)
    } else {
        let probs = acquisition_probs(from, &truth.w.column(c.agegr))?;
        Ok(BrandId(categorical_sample(&probs, rng)?))
    }
}

/// Calendar month of a purchase made `elapsed` months before the end of the
/// survey month.
fn purchase_month(survey: YearMonth, elapsed: f64) -> YearMonth {
    YearMonth::from_index(survey.index() - elapsed.floor() as i64)
}

/// Generates survey answers from `truth`.
///
/// Each respondent's previous interval is a fresh Gamma draw under the
/// previous brand; the time since the current purchase is the stationary
/// backward recurrence time of the renewal process under the current brand.
/// Draws whose two purchases reach beyond the 200-month recall window are
/// redrawn.
pub fn generate_mobile_survey(
    truth: &MobileTruth,
    config: &SyntheticSurveyConfig,
    catalog: &BrandCatalog,
    seed: u64,
) -> Result<Vec<Respondent>> {
    let n = config.n;
    if n == 0 {
        return Err(Error::Validation(
            "synthetic survey size must be positive".into(),
        ));
    }
    if config.no_previous > n {
        return Err(Error::Validation(
            "more respondents without a previous phone than respondents".into(),
        ));
    }
    if truth.w.n_brands != catalog.len() || config.previous_brand_probs.len() != catalog.len() {
        return Err(Error::invalid(
            "generating parameters do not match the brand catalog",
        ));
    }
    let mut rng = RngStream::keyed(seed, &[tags::SYNTHETIC]);
    let agegr = shuffled_codes(&config.agegr_counts, n, &mut rng);
    let gender = shuffled_codes(&config.gender_counts, n, &mut rng);
    let region = shuffled_codes(&config.region_counts, n, &mut rng);
    let cur_gran = shuffled_codes(&config.current_granularity, n, &mut rng);
    let with_previous = n - config.no_previous;
    let prev_gran = shuffled_codes(&config.previous_granularity, with_previous, &mut rng);
    let mut has_previous: Vec<bool> = (0..n).map(|i| i < with_previous).collect();
    has_previous.shuffle(&mut rng);

    let mut prev_slot = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let income = categorical_sample(&config.income_probs, &mut rng)? as u8;
        let c = Covariates::new(agegr[i], gender[i], income, region[i])
            .ok_or_else(|| Error::invalid("generated covariates out of range"))?;
        let (prev, cur, e, t_prev) = loop {
            let prev = BrandId(categorical_sample(&config.previous_brand_probs, &mut rng)?);
            let cur = transition(prev, &c, truth, &mut rng)?;
            let prev_rate = rate_of(prev, &c, &truth.beta);
            let cur_rate = rate_of(cur, &c, &truth.beta);
            let t_prev = 12.0 * sample_gamma(GammaSpec::new(truth.kappa, prev_rate)?, &mut rng);
            let spanning = sample_gamma(GammaSpec::new(truth.kappa + 1.0, cur_rate)?, &mut rng);
            let e = 12.0 * rng.uniform() * spanning;
            let reach = if has_previous[i] { e + t_prev } else { e };
            if reach < MAX_INTERVAL_MONTHS {
                break (prev, cur, e, t_prev);
            }
        };
        let intended = transition(cur, &c, truth, &mut rng)?;
        let current_purchase = DateAnswer::coarsen(
            purchase_month(config.survey_date, e),
            GRANULARITIES[cur_gran[i] as usize - 1],
        );
        let (previous_brand, previous_purchase) = if has_previous[i] {
            let g = GRANULARITIES[prev_gran[prev_slot] as usize - 1];
            prev_slot += 1;
            (
                Some(prev),
                DateAnswer::coarsen(purchase_month(config.survey_date, e + t_prev), g),
            )
        } else {
            (None, DateAnswer::unknown())
        };
        out.push(Respondent {
            current_brand: cur,
            previous_brand,
            intended_brand: Some(intended),
            current_purchase,
            previous_purchase,
            covariates: c,
        });
    }
    Ok(out)
}
