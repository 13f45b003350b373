use rand::Rng;
use statrs::function::gamma::ln_gamma;

use super::params::{equilibrium, focal_next, SemiMarkovParams, SmHyper};
use super::population::SurveyObservation;
use crate::dist::{
    bernoulli_logpmf, bernoulli_sample, beta_logpdf, beta_sample, exponential_logpdf, gamma_logpdf,
    sample_gamma, GammaSpec, RngStream,
};
use crate::error::{Error, Result};
use crate::mcmc::{run_chains, ChainConfig, Model, ParameterBlock, PosteriorDraws, Support};

/// Shape and rate of the Gamma hyperpriors on the intensity mean and variance.
const MOMENT_PRIOR: (f64, f64) = (2.0, 1.0);
/// Shape and rate of the Gamma hyperpriors on the Beta concentrations.
const CONCENTRATION_PRIOR: (f64, f64) = (10.0, 1.0);
/// Independence proposals for each individual's `(p, q)` per sweep.
const PQ_PROPOSALS: usize = 3;

pub const HYPER_NAMES: [&str; 6] = ["m_lambda", "v_lambda", "m_p", "k_p", "m_q", "k_q"];

fn finite(term: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            term: term.to_string(),
        })
    }
}

fn gamma_prior(x: f64, (shape, rate): (f64, f64)) -> f64 {
    gamma_logpdf(x, GammaSpec { shape, rate })
}

fn hyperprior(h: &SmHyper) -> f64 {
    let unit = |m: f64| {
        if m > 0.0 && m < 1.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    };
    gamma_prior(h.m_lambda, MOMENT_PRIOR)
        + gamma_prior(h.v_lambda, MOMENT_PRIOR)
        + unit(h.m_p)
        + unit(h.m_q)
        + gamma_prior(h.k_p, CONCENTRATION_PRIOR)
        + gamma_prior(h.k_q, CONCENTRATION_PRIOR)
}

/// Log-probability of the observed and latent state chain of one individual.
fn state_terms(obs: &SurveyObservation, p: f64, q: f64, s2: bool) -> f64 {
    bernoulli_logpmf(s2, equilibrium(p, q))
        + bernoulli_logpmf(obs.s1, focal_next(p, q, s2))
        + bernoulli_logpmf(obs.s0, focal_next(p, q, obs.s1))
}

/// Joint log-density of the survey data, the individual parameters, the
/// latent states and the hyperparameters.
pub fn log_posterior_sm(params: &SemiMarkovParams, data: &[SurveyObservation]) -> Result<f64> {
    let n = data.len();
    if [
        params.lambda.len(),
        params.p.len(),
        params.q.len(),
        params.s2.len(),
    ] != [n; 4]
    {
        return Err(Error::invalid(
            "individual parameter vectors do not match the data",
        ));
    }
    let h = &params.hyper;
    let lambda_prior = GammaSpec {
        shape: h.gamma_shape(),
        rate: h.delta_rate(),
    };
    let mut intervals = 0.0;
    let mut states = 0.0;
    let mut population = 0.0;
    for (i, obs) in data.iter().enumerate() {
        let (l, p, q) = (params.lambda[i], params.p[i], params.q[i]);
        intervals += exponential_logpdf(obs.t, l) + exponential_logpdf(obs.t_star, l);
        states += state_terms(obs, p, q, params.s2[i]);
        population += gamma_logpdf(l, lambda_prior)
            + beta_logpdf(p, h.alpha_p(), h.beta_p())
            + beta_logpdf(q, h.alpha_q(), h.beta_q());
    }
    Ok(finite("purchase intervals", intervals)?
        + finite("state transitions", states)?
        + finite("population distributions", population)?
        + finite("hyperpriors", hyperprior(h))?)
}

#[derive(Debug, Clone)]
pub struct SmState {
    pub hyper: SmHyper,
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s2: Vec<bool>,
    sums: Sums,
}

/// Sufficient statistics of the individual parameters for the hyperparameter
/// updates.
#[derive(Debug, Clone, Default)]
struct Sums {
    lambda: f64,
    log_lambda: f64,
    log_p: f64,
    log_1m_p: f64,
    log_q: f64,
    log_1m_q: f64,
}

impl SmState {
    fn refresh_lambda(&mut self) {
        self.sums.lambda = self.lambda.iter().sum();
        self.sums.log_lambda = self.lambda.iter().map(|l| l.ln()).sum();
    }

    fn refresh_pq(&mut self) {
        self.sums.log_p = self.p.iter().map(|p| p.ln()).sum();
        self.sums.log_1m_p = self.p.iter().map(|p| (-p).ln_1p()).sum();
        self.sums.log_q = self.q.iter().map(|q| q.ln()).sum();
        self.sums.log_1m_q = self.q.iter().map(|q| (-q).ln_1p()).sum();
    }

    pub fn params(&self) -> SemiMarkovParams {
        SemiMarkovParams {
            hyper: self.hyper,
            lambda: self.lambda.clone(),
            p: self.p.clone(),
            q: self.q.clone(),
            s2: self.s2.clone(),
        }
    }
}

/// Posterior of the two-state switching model given survey observations.
///
/// Each sweep draws every intensity from its Gamma full conditional, each
/// `(p, q)` pair by independence Metropolis with the population Beta
/// distributions as proposal and the latent state summed out, the latent
/// states from their Bernoulli full conditionals, and the three
/// hyperparameter pairs by adaptive random walk.
pub struct SemiMarkovModel<'a> {
    data: &'a [SurveyObservation],
}

const LAMBDA: usize = 0;
const PQ: usize = 1;
const S2: usize = 2;
const LAMBDA_HYPER: usize = 3;
const P_HYPER: usize = 4;
const Q_HYPER: usize = 5;

impl<'a> SemiMarkovModel<'a> {
    pub fn new(data: &'a [SurveyObservation]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Validation("no survey observations to fit".into()));
        }
        if data
            .iter()
            .any(|o| !(o.t > 0.0 && o.t_star >= 0.0 && o.t.is_finite() && o.t_star.is_finite()))
        {
            return Err(Error::Validation(
                "purchase intervals must be positive and finite".into(),
            ));
        }
        Ok(Self { data })
    }

    /// Log-probability of the observed states with the latent one summed
    /// out; the previous state is then distributed as the equilibrium.
    fn observed_states(&self, i: usize, p: f64, q: f64) -> f64 {
        let obs = &self.data[i];
        bernoulli_logpmf(obs.s1, equilibrium(p, q))
            + bernoulli_logpmf(obs.s0, focal_next(p, q, obs.s1))
    }

    fn lambda_population(&self, s: &SmState) -> f64 {
        let n = self.data.len() as f64;
        let (g, d) = (s.hyper.gamma_shape(), s.hyper.delta_rate());
        n * (g * d.ln() - ln_gamma(g)) + (g - 1.0) * s.sums.log_lambda - d * s.sums.lambda
    }

    fn beta_population(&self, a: f64, b: f64, log_x: f64, log_1m_x: f64) -> f64 {
        let n = self.data.len() as f64;
        n * (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)) + (a - 1.0) * log_x + (b - 1.0) * log_1m_x
    }
}

impl Model for SemiMarkovModel<'_> {
    type State = SmState;

    fn blocks(&self) -> Vec<ParameterBlock> {
        let n = self.data.len();
        vec![
            ParameterBlock::direct("lambda", n),
            ParameterBlock::direct("p_q", 2 * n),
            ParameterBlock::direct("s2", n),
            ParameterBlock::random_walk("lambda_moments", 2, Support::Positive),
            ParameterBlock::mixed("p_hyper", vec![Support::UnitInterval, Support::Positive]),
            ParameterBlock::mixed("q_hyper", vec![Support::UnitInterval, Support::Positive]),
        ]
    }

    fn initial_state(&self, rng: &mut RngStream) -> SmState {
        let gamma =
            |shape: f64, rng: &mut RngStream| sample_gamma(GammaSpec { shape, rate: 1.0 }, rng);
        let hyper = SmHyper {
            m_lambda: gamma(MOMENT_PRIOR.0, rng),
            v_lambda: gamma(MOMENT_PRIOR.0, rng),
            m_p: rng.random_range(0.05..0.95),
            k_p: gamma(CONCENTRATION_PRIOR.0, rng),
            m_q: rng.random_range(0.05..0.95),
            k_q: gamma(CONCENTRATION_PRIOR.0, rng),
        };
        let n = self.data.len();
        let mut s = SmState {
            hyper,
            lambda: self
                .data
                .iter()
                .map(|o| {
                    sample_gamma(
                        GammaSpec {
                            shape: 2.0,
                            rate: o.t + o.t_star,
                        },
                        rng,
                    )
                })
                .collect(),
            p: (0..n)
                .map(|_| beta_sample(hyper.alpha_p(), hyper.beta_p(), rng).unwrap_or(0.5))
                .collect(),
            q: (0..n)
                .map(|_| beta_sample(hyper.alpha_q(), hyper.beta_q(), rng).unwrap_or(0.5))
                .collect(),
            s2: vec![false; n],
            sums: Sums::default(),
        };
        for i in 0..n {
            s.s2[i] = rng.random_bool(equilibrium(s.p[i], s.q[i]).clamp(0.0, 1.0));
        }
        s.refresh_lambda();
        s.refresh_pq();
        s
    }

    fn log_posterior(&self, s: &SmState) -> f64 {
        log_posterior_sm(&s.params(), self.data).unwrap_or(f64::NEG_INFINITY)
    }

    fn block_log_density(&self, s: &SmState, block: usize) -> f64 {
        let h = &s.hyper;
        match block {
            LAMBDA_HYPER => {
                self.lambda_population(s)
                    + gamma_prior(h.m_lambda, MOMENT_PRIOR)
                    + gamma_prior(h.v_lambda, MOMENT_PRIOR)
            }
            P_HYPER => {
                self.beta_population(h.alpha_p(), h.beta_p(), s.sums.log_p, s.sums.log_1m_p)
                    + gamma_prior(h.k_p, CONCENTRATION_PRIOR)
            }
            Q_HYPER => {
                self.beta_population(h.alpha_q(), h.beta_q(), s.sums.log_q, s.sums.log_1m_q)
                    + gamma_prior(h.k_q, CONCENTRATION_PRIOR)
            }
            _ => self.log_posterior(s),
        }
    }

    fn get_block(&self, s: &SmState, block: usize, out: &mut [f64]) {
        let h = &s.hyper;
        match block {
            LAMBDA_HYPER => out.copy_from_slice(&[h.m_lambda, h.v_lambda]),
            P_HYPER => out.copy_from_slice(&[h.m_p, h.k_p]),
            Q_HYPER => out.copy_from_slice(&[h.m_q, h.k_q]),
            _ => unreachable!("direct blocks are not read as vectors"),
        }
    }

    fn set_block(&self, s: &mut SmState, block: usize, v: &[f64]) {
        let h = &mut s.hyper;
        match block {
            LAMBDA_HYPER => (h.m_lambda, h.v_lambda) = (v[0], v[1]),
            P_HYPER => (h.m_p, h.k_p) = (v[0], v[1]),
            Q_HYPER => (h.m_q, h.k_q) = (v[0], v[1]),
            _ => unreachable!("direct blocks are not written as vectors"),
        }
    }

    fn sample_conditional(&self, s: &mut SmState, block: usize, rng: &mut RngStream) -> Result<()> {
        match block {
            LAMBDA => {
                let (g, d) = (s.hyper.gamma_shape(), s.hyper.delta_rate());
                for (i, obs) in self.data.iter().enumerate() {
                    s.lambda[i] =
                        sample_gamma(GammaSpec::new(g + 2.0, d + obs.t + obs.t_star)?, rng);
                }
                s.refresh_lambda();
            }
            PQ => {
                let h = s.hyper;
                for i in 0..self.data.len() {
                    let mut cur = self.observed_states(i, s.p[i], s.q[i]);
                    for _ in 0..PQ_PROPOSALS {
                        let p = beta_sample(h.alpha_p(), h.beta_p(), rng)?;
                        let q = beta_sample(h.alpha_q(), h.beta_q(), rng)?;
                        if !(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0) {
                            continue;
                        }
                        let prop = self.observed_states(i, p, q);
                        if rng.uniform().ln() < prop - cur {
                            (s.p[i], s.q[i], cur) = (p, q, prop);
                        }
                    }
                }
                s.refresh_pq();
            }
            S2 => {
                for (i, obs) in self.data.iter().enumerate() {
                    let (p, q) = (s.p[i], s.q[i]);
                    let m0 = equilibrium(p, q);
                    let given = |prev: bool| {
                        let f = focal_next(p, q, prev);
                        if obs.s1 {
                            f
                        } else {
                            1.0 - f
                        }
                    };
                    let focal = m0 * given(true);
                    let other = (1.0 - m0) * given(false);
                    s.s2[i] = bernoulli_sample(focal / (focal + other), rng)?;
                }
            }
            _ => {
                return Err(Error::invalid(format!(
                    "block {block} has no direct sampler"
                )))
            }
        }
        Ok(())
    }

    fn parameter_names(&self) -> Vec<String> {
        let n = self.data.len();
        let mut names: Vec<String> = HYPER_NAMES.iter().map(|s| s.to_string()).collect();
        for prefix in ["lambda", "p", "q"] {
            names.extend((1..=n).map(|i| format!("{prefix}[{i}]")));
        }
        names
    }

    fn record(&self, s: &SmState, out: &mut [f64]) {
        let h = &s.hyper;
        let n = self.data.len();
        out[..6].copy_from_slice(&[h.m_lambda, h.v_lambda, h.m_p, h.k_p, h.m_q, h.k_q]);
        out[6..6 + n].copy_from_slice(&s.lambda);
        out[6 + n..6 + 2 * n].copy_from_slice(&s.p);
        out[6 + 2 * n..6 + 3 * n].copy_from_slice(&s.q);
    }
}

pub fn fit_sm(data: &[SurveyObservation], config: &ChainConfig) -> Result<PosteriorDraws> {
    run_chains(&SemiMarkovModel::new(data)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> SmHyper {
        SmHyper {
            m_lambda: 0.3,
            v_lambda: 0.03,
            m_p: 0.4,
            k_p: 10.0,
            m_q: 0.4,
            k_q: 10.0,
        }
    }

    #[test]
    fn single_observation_by_hand() {
        let obs = [SurveyObservation {
            s0: true,
            s1: true,
            t: 1.0,
            t_star: 1.0,
        }];
        let params = SemiMarkovParams {
            hyper: hyper(),
            lambda: vec![1.0],
            p: vec![0.5],
            q: vec![0.5],
            s2: vec![true],
        };
        let h = hyper();
        let population = gamma_logpdf(
            1.0,
            GammaSpec {
                shape: h.gamma_shape(),
                rate: h.delta_rate(),
            },
        ) + 2.0 * beta_logpdf(0.5, 4.0, 6.0);
        let expect = -2.0 + 3.0 * 0.5f64.ln() + population + hyperprior(&h);
        assert!((log_posterior_sm(&params, &obs).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_data_is_prior_only() {
        let params = SemiMarkovParams {
            hyper: hyper(),
            lambda: vec![],
            p: vec![],
            q: vec![],
            s2: vec![],
        };
        assert_eq!(
            log_posterior_sm(&params, &[]).unwrap(),
            hyperprior(&hyper())
        );
    }

    #[test]
    fn non_finite_term_is_named() {
        let obs = [SurveyObservation {
            s0: true,
            s1: true,
            t: 1.0,
            t_star: 1.0,
        }];
        let params = SemiMarkovParams {
            hyper: hyper(),
            lambda: vec![1.0],
            p: vec![1.0],
            q: vec![0.5],
            s2: vec![false],
        };
        match log_posterior_sm(&params, &obs) {
            Err(Error::NonFinite { term }) => assert_eq!(term, "state transitions"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hyper_block_densities_match_full_posterior_differences() {
        let data: Vec<SurveyObservation> = (0..20)
            .map(|i| SurveyObservation {
                s0: i % 3 == 0,
                s1: i % 2 == 0,
                t: 0.5 + i as f64 * 0.3,
                t_star: 0.2 + i as f64 * 0.1,
            })
            .collect();
        let m = SemiMarkovModel::new(&data).unwrap();
        let mut rng = RngStream::new(4, 0);
        let a = m.initial_state(&mut rng);
        for block in [LAMBDA_HYPER, P_HYPER, Q_HYPER] {
            let mut b = a.clone();
            let mut v = [0.0; 2];
            m.get_block(&b, block, &mut v);
            m.set_block(&mut b, block, &[v[0] * 0.9, v[1] * 1.2]);
            let full = m.log_posterior(&b) - m.log_posterior(&a);
            let local = m.block_log_density(&b, block) - m.block_log_density(&a, block);
            assert!(
                (full - local).abs() < 1e-8,
                "block {block}: {full} vs {local}"
            );
        }
    }
}
