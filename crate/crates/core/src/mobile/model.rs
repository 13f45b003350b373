use statrs::function::gamma::ln_gamma;

use super::params::{
    active_slots, coefficient_len, coefficient_names, weight_names, MobileModelParams, PriorSpec,
    WeightMatrix,
};
use crate::dist::{
    beta_logpdf, beta_sample, gamma_logpdf, normal_logpdf, normal_sample, sample_gamma,
    sample_truncated_gamma, GammaSpec, RngStream,
};
use crate::error::{Error, Result};
use crate::mcmc::{run_chains, ChainConfig, Model, ParameterBlock, PosteriorDraws, Support};
use crate::survey::{BrandId, CensoredInterval, ModelDataset, AGE_GROUPS, MAX_INTERVAL_MONTHS};

/// Excess over `t_min` used to start right-censored latent intervals, in months.
pub const RIGHT_CENSORED_INIT_EXCESS_MONTHS: f64 = 24.0;
/// Upper truncation applied to right-censored intervals while sampling, in years.
pub const RIGHT_CENSORED_CAP_YEARS: f64 = MAX_INTERVAL_MONTHS / 12.0;

/// Starting value of a latent interval, in years: the midpoint of finite
/// bounds, or `t_min` plus a fixed excess when right-censored.
pub fn initial_latent(interval: &CensoredInterval) -> f64 {
    if interval.is_right_censored() {
        (interval.t_min() + RIGHT_CENSORED_INIT_EXCESS_MONTHS) / 12.0
    } else {
        0.5 * (interval.t_min() + interval.t_max()) / 12.0
    }
}

/// Sampling bounds of a latent interval, in years.
fn latent_bounds(interval: &CensoredInterval) -> (f64, f64) {
    let lo = interval.t_min() / 12.0;
    let hi = if interval.is_right_censored() {
        RIGHT_CENSORED_CAP_YEARS.max(lo + 1.0)
    } else {
        interval.t_max() / 12.0
    };
    (lo, hi)
}

/// How the brand-popularity weights are grouped into Metropolis blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightUpdate {
    /// One block per weight.
    PerEntry,
    /// One joint block per age group, so the unidentified column scale
    /// moves freely.
    PerAgeGroup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobileFitOptions {
    pub priors: PriorSpec,
    /// Hold the Gamma shape at this value instead of sampling it.
    pub fixed_kappa: Option<f64>,
    pub weight_update: WeightUpdate,
    /// Metropolis updates per sweep of the rate and repurchase coefficients.
    pub coefficient_repeats: usize,
    pub weight_repeats: usize,
}

impl Default for MobileFitOptions {
    fn default() -> Self {
        Self {
            priors: PriorSpec::default(),
            fixed_kappa: None,
            weight_update: WeightUpdate::PerAgeGroup,
            coefficient_repeats: 5,
            weight_repeats: 2,
        }
    }
}

#[derive(Debug, Clone)]
struct Rec {
    slots: [usize; 6],
    n_slots: usize,
    lo: f64,
    hi: f64,
    init: f64,
    repurchase: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct MobileState {
    pub kappa: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub w: Vec<f64>,
    pub t: Vec<f64>,
    log_t: Vec<f64>,
}

impl MobileState {
    pub fn params(&self, n_brands: usize) -> MobileModelParams {
        MobileModelParams {
            kappa: self.kappa,
            beta: self.beta.clone(),
            alpha: self.alpha.clone(),
            w: WeightMatrix {
                n_brands,
                values: self.w.clone(),
            },
            latent_t: self.t.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockRole {
    Latent,
    KappaBeta,
    Beta,
    Alpha,
    /// Weight entries `start..start + len` with stride `stride`.
    Weights {
        start: usize,
        len: usize,
        stride: usize,
    },
}

/// The interval-censored Gamma / logistic / brand-choice model.
pub struct MobileModel {
    n_brands: usize,
    labels: Vec<String>,
    recs: Vec<Rec>,
    /// churned new-brand counts, `[brand * 6 + agegr]`
    new_counts: Vec<f64>,
    /// churned previous-brand counts, `[brand * 6 + agegr]`
    prev_counts: Vec<f64>,
    options: MobileFitOptions,
    roles: Vec<BlockRole>,
}

const N_AGE: usize = AGE_GROUPS.len();

impl MobileModel {
    pub fn new(data: &ModelDataset, options: MobileFitOptions) -> Result<Self> {
        options.priors.validate()?;
        if let Some(k) = options.fixed_kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::invalid(format!(
                    "fixed kappa must be positive, got {k}"
                )));
            }
        }
        let n_brands = data.n_brands();
        let mut new_counts = vec![0.0; n_brands * N_AGE];
        let mut prev_counts = vec![0.0; n_brands * N_AGE];
        let mut recs = Vec::with_capacity(data.records.len());
        for r in &data.records {
            let (slots, n_slots) = active_slots(n_brands, r.prev_brand, &r.covariates);
            let (lo, hi) = latent_bounds(&r.interval);
            if r.repurchase == Some(false) {
                let h = r.covariates.agegr as usize - 1;
                let v = r.new_brand.ok_or_else(|| {
                    Error::Validation("churned record without a new brand".into())
                })?;
                new_counts[v.index() * N_AGE + h] += 1.0;
                prev_counts[r.prev_brand.index() * N_AGE + h] += 1.0;
            }
            recs.push(Rec {
                slots,
                n_slots,
                lo,
                hi,
                init: initial_latent(&r.interval).clamp(lo, hi),
                repurchase: r.repurchase,
            });
        }
        let mut roles = vec![BlockRole::Latent];
        roles.push(if options.fixed_kappa.is_some() {
            BlockRole::Beta
        } else {
            BlockRole::KappaBeta
        });
        roles.push(BlockRole::Alpha);
        match options.weight_update {
            WeightUpdate::PerEntry => {
                for i in 0..n_brands * N_AGE {
                    roles.push(BlockRole::Weights {
                        start: i,
                        len: 1,
                        stride: 1,
                    });
                }
            }
            WeightUpdate::PerAgeGroup => {
                for h in 0..N_AGE {
                    roles.push(BlockRole::Weights {
                        start: h,
                        len: n_brands,
                        stride: N_AGE,
                    });
                }
            }
        }
        Ok(Self {
            n_brands,
            labels: data.brands.clone(),
            recs,
            new_counts,
            prev_counts,
            options,
            roles,
        })
    }

    pub fn n_brands(&self) -> usize {
        self.n_brands
    }

    pub fn n_records(&self) -> usize {
        self.recs.len()
    }

    fn n_coef(&self) -> usize {
        coefficient_len(self.n_brands)
    }

    fn eta(&self, rec: &Rec, coef: &[f64]) -> f64 {
        rec.slots[..rec.n_slots].iter().map(|&s| coef[s]).sum()
    }

    fn interval_term(&self, kappa: f64, beta: &[f64], t: &[f64], log_t: &[f64]) -> f64 {
        let lg = ln_gamma(kappa);
        let mut ll = 0.0;
        for (i, rec) in self.recs.iter().enumerate() {
            let eta = self.eta(rec, beta);
            ll += kappa * eta - lg + (kappa - 1.0) * log_t[i] - eta.exp() * t[i];
        }
        ll
    }

    fn repurchase_term(&self, alpha: &[f64]) -> f64 {
        let mut ll = 0.0;
        for rec in &self.recs {
            if let Some(r) = rec.repurchase {
                let eta = self.eta(rec, alpha);
                // log p = -softplus(-eta), log (1 - p) = -softplus(eta)
                ll -= softplus(if r { -eta } else { eta });
            }
        }
        ll
    }

    fn acquisition_column(&self, w: &[f64], h: usize) -> f64 {
        let total: f64 = (0..self.n_brands).map(|b| w[b * N_AGE + h]).sum();
        let mut ll = 0.0;
        for b in 0..self.n_brands {
            let k = b * N_AGE + h;
            if self.new_counts[k] > 0.0 {
                ll += self.new_counts[k] * w[k].ln();
            }
            if self.prev_counts[k] > 0.0 {
                ll -= self.prev_counts[k] * (total - w[k]).ln();
            }
        }
        ll
    }

    fn kappa_prior(&self, kappa: f64) -> f64 {
        let p = &self.options.priors;
        gamma_logpdf(
            kappa,
            GammaSpec {
                shape: p.kappa_shape,
                rate: p.kappa_rate,
            },
        )
    }

    fn coef_prior(&self, coef: &[f64]) -> f64 {
        let p = &self.options.priors;
        coef.iter()
            .map(|c| normal_logpdf(*c, p.coef_mean, p.coef_variance))
            .sum()
    }

    fn weight_prior(&self, w: impl Iterator<Item = f64>) -> f64 {
        let p = &self.options.priors;
        w.map(|x| beta_logpdf(x, p.weight_a, p.weight_b)).sum()
    }

    /// Full log-posterior, reporting which term went non-finite.
    pub fn evaluate(&self, s: &MobileState) -> Result<f64> {
        if s.t.len() != self.recs.len() {
            return Err(Error::invalid(
                "latent interval count does not match the records",
            ));
        }
        if s.t
            .iter()
            .zip(&self.recs)
            .any(|(t, r)| !(*t >= r.lo && *t <= r.hi))
        {
            return Ok(f64::NEG_INFINITY);
        }
        let terms = [
            (
                "interval",
                self.interval_term(s.kappa, &s.beta, &s.t, &s.log_t),
            ),
            ("repurchase", self.repurchase_term(&s.alpha)),
            (
                "acquisition",
                (0..N_AGE).map(|h| self.acquisition_column(&s.w, h)).sum(),
            ),
            (
                "prior",
                self.kappa_prior(s.kappa)
                    + self.coef_prior(&s.beta)
                    + self.coef_prior(&s.alpha)
                    + self.weight_prior(s.w.iter().copied()),
            ),
        ];
        let mut total = 0.0;
        for (name, v) in terms {
            if !v.is_finite() {
                return Err(Error::NonFinite { term: name.into() });
            }
            total += v;
        }
        Ok(total)
    }

    pub fn state_from_params(&self, p: &MobileModelParams) -> Result<MobileState> {
        let n = self.n_coef();
        if p.beta.len() != n || p.alpha.len() != n || p.w.values.len() != self.n_brands * N_AGE {
            return Err(Error::invalid(
                "parameter dimensions do not match the dataset",
            ));
        }
        Ok(MobileState {
            kappa: p.kappa,
            beta: p.beta.clone(),
            alpha: p.alpha.clone(),
            w: p.w.values.clone(),
            log_t: p.latent_t.iter().map(|t| t.ln()).collect(),
            t: p.latent_t.clone(),
        })
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-posterior of `params` given `data`, up to the normalizing constant.
///
/// Interval censoring enters through the latent intervals, which must lie
/// within their record's bounds.
pub fn log_posterior(
    params: &MobileModelParams,
    data: &ModelDataset,
    priors: &PriorSpec,
) -> Result<f64> {
    let model = MobileModel::new(
        data,
        MobileFitOptions {
            priors: *priors,
            ..MobileFitOptions::default()
        },
    )?;
    model.evaluate(&model.state_from_params(params)?)
}

impl Model for MobileModel {
    type State = MobileState;

    fn blocks(&self) -> Vec<ParameterBlock> {
        let n = self.n_coef();
        let reps = self.options.coefficient_repeats;
        self.roles
            .iter()
            .map(|role| match *role {
                BlockRole::Latent => ParameterBlock::direct("latent_t", self.recs.len().max(1)),
                BlockRole::KappaBeta => {
                    let mut s = vec![Support::Positive];
                    s.extend(std::iter::repeat_n(Support::Real, n));
                    ParameterBlock::mixed("kappa_beta", s).with_repeats(reps)
                }
                BlockRole::Beta => {
                    ParameterBlock::random_walk("beta", n, Support::Real).with_repeats(reps)
                }
                BlockRole::Alpha => {
                    ParameterBlock::random_walk("alpha", n, Support::Real).with_repeats(reps)
                }
                BlockRole::Weights { start, len, .. } => {
                    let name = if len == 1 {
                        weight_names(&self.labels)[start].clone()
                    } else {
                        format!("w[{}]", AGE_GROUPS[start])
                    };
                    ParameterBlock::random_walk(name, len, Support::UnitInterval)
                        .with_repeats(self.options.weight_repeats)
                }
            })
            .collect()
    }

    fn initial_state(&self, rng: &mut RngStream) -> MobileState {
        let n = self.n_coef();
        let coef = |rng: &mut RngStream| -> Vec<f64> {
            (0..n)
                .map(|_| normal_sample(0.0, 1.0, rng).expect("unit normal"))
                .collect()
        };
        let beta = coef(rng);
        let alpha = coef(rng);
        let p = &self.options.priors;
        let kappa = self.options.fixed_kappa.unwrap_or_else(|| {
            sample_gamma(
                GammaSpec {
                    shape: p.kappa_shape,
                    rate: p.kappa_rate,
                },
                rng,
            )
        });
        let w = (0..self.n_brands * N_AGE)
            .map(|_| beta_sample(p.weight_a, p.weight_b, rng).expect("valid beta prior"))
            .collect();
        let t: Vec<f64> = self.recs.iter().map(|r| r.init).collect();
        MobileState {
            kappa,
            beta,
            alpha,
            w,
            log_t: t.iter().map(|v| v.ln()).collect(),
            t,
        }
    }

    fn log_posterior(&self, s: &MobileState) -> f64 {
        self.evaluate(s).unwrap_or(f64::NEG_INFINITY)
    }

    fn block_log_density(&self, s: &MobileState, block: usize) -> f64 {
        match self.roles[block] {
            BlockRole::Latent => 0.0,
            BlockRole::KappaBeta | BlockRole::Beta => {
                let prior = if self.roles[block] == BlockRole::KappaBeta {
                    self.kappa_prior(s.kappa)
                } else {
                    0.0
                };
                self.interval_term(s.kappa, &s.beta, &s.t, &s.log_t)
                    + prior
                    + self.coef_prior(&s.beta)
            }
            BlockRole::Alpha => self.repurchase_term(&s.alpha) + self.coef_prior(&s.alpha),
            BlockRole::Weights { start, len, stride } => {
                let h = start % N_AGE;
                self.acquisition_column(&s.w, h)
                    + self.weight_prior((0..len).map(|k| s.w[start + k * stride]))
            }
        }
    }

    fn get_block(&self, s: &MobileState, block: usize, out: &mut [f64]) {
        match self.roles[block] {
            BlockRole::Latent => out.copy_from_slice(&s.t[..out.len()]),
            BlockRole::KappaBeta => {
                out[0] = s.kappa;
                out[1..].copy_from_slice(&s.beta);
            }
            BlockRole::Beta => out.copy_from_slice(&s.beta),
            BlockRole::Alpha => out.copy_from_slice(&s.alpha),
            BlockRole::Weights { start, len, stride } => {
                for k in 0..len {
                    out[k] = s.w[start + k * stride];
                }
            }
        }
    }

    fn set_block(&self, s: &mut MobileState, block: usize, v: &[f64]) {
        match self.roles[block] {
            BlockRole::Latent => {
                s.t[..v.len()].copy_from_slice(v);
                for (lt, t) in s.log_t.iter_mut().zip(&s.t) {
                    *lt = t.ln();
                }
            }
            BlockRole::KappaBeta => {
                s.kappa = v[0];
                s.beta.copy_from_slice(&v[1..]);
            }
            BlockRole::Beta => s.beta.copy_from_slice(v),
            BlockRole::Alpha => s.alpha.copy_from_slice(v),
            BlockRole::Weights { start, len, stride } => {
                for k in 0..len {
                    s.w[start + k * stride] = v[k];
                }
            }
        }
    }

    fn sample_conditional(
        &self,
        s: &mut MobileState,
        block: usize,
        rng: &mut RngStream,
    ) -> Result<()> {
        debug_assert_eq!(self.roles[block], BlockRole::Latent);
        for (i, rec) in self.recs.iter().enumerate() {
            let rate = self.eta(rec, &s.beta).exp();
            let spec = GammaSpec::new(s.kappa, rate)?;
            let t = sample_truncated_gamma(spec, rec.lo, rec.hi, rng)?;
            s.t[i] = t;
            s.log_t[i] = t.ln();
        }
        Ok(())
    }

    fn parameter_names(&self) -> Vec<String> {
        parameter_names(&self.labels)
    }

    fn record(&self, s: &MobileState, out: &mut [f64]) {
        let n = self.n_coef();
        out[0] = s.kappa;
        out[1..1 + n].copy_from_slice(&s.beta);
        out[1 + n..1 + 2 * n].copy_from_slice(&s.alpha);
        out[1 + 2 * n..].copy_from_slice(&s.w);
    }
}

/// Stored parameter names: `kappa`, the rate and repurchase coefficients,
/// then the popularity weights.
pub fn parameter_names(brand_labels: &[String]) -> Vec<String> {
    let mut names = vec!["kappa".to_string()];
    names.extend(coefficient_names("beta", brand_labels));
    names.extend(coefficient_names("alpha", brand_labels));
    names.extend(weight_names(brand_labels));
    names
}

/// Views one stored draw as model parameters.
#[derive(Debug, Clone, Copy)]
pub struct DrawView<'a> {
    pub kappa: f64,
    pub beta: &'a [f64],
    pub alpha: &'a [f64],
    /// Brand-major weights over age groups.
    pub w: &'a [f64],
}

impl<'a> DrawView<'a> {
    pub fn new(row: &'a [f64], n_brands: usize) -> Self {
        let n = coefficient_len(n_brands);
        Self {
            kappa: row[0],
            beta: &row[1..1 + n],
            alpha: &row[1 + n..1 + 2 * n],
            w: &row[1 + 2 * n..1 + 2 * n + n_brands * N_AGE],
        }
    }

    pub fn weight_column(&self, agegr: u8) -> Vec<f64> {
        let h = agegr as usize - 1;
        (0..self.w.len() / N_AGE)
            .map(|b| self.w[b * N_AGE + h])
            .collect()
    }

    pub fn weight(&self, brand: BrandId, agegr: u8) -> f64 {
        self.w[brand.index() * N_AGE + agegr as usize - 1]
    }
}

/// Checks that `draws` came from a mobile fit over `brand_labels`.
pub fn check_draws(draws: &PosteriorDraws, brand_labels: &[String]) -> Result<()> {
    if draws.names() != parameter_names(brand_labels).as_slice() {
        return Err(Error::Validation(
            "posterior draws do not match the mobile model for this brand catalog".into(),
        ));
    }
    Ok(())
}

pub fn fit_mobile(
    data: &ModelDataset,
    options: &MobileFitOptions,
    config: &ChainConfig,
) -> Result<PosteriorDraws> {
    if data.records.is_empty() {
        return Err(Error::Validation("dataset has no records to fit".into()));
    }
    let model = MobileModel::new(data, *options)?;
    run_chains(&model, config)
}
