//! Multi-chain Metropolis-within-Gibbs driver.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::draws::PosteriorDraws;
use crate::dist::{logistic, tags, RngStream};
use crate::error::{Error, Result};

/// Attempts at drawing a finite initial state before giving up.
pub const INIT_RETRIES: usize = 100;

/// Initial random-walk scale on the transformed scale.
const INITIAL_SCALE: f64 = 0.1;
/// Sweeps between refreshes of the adapted proposal covariance.
const COVARIANCE_REFRESH: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Real,
    /// Sampled on the log scale.
    Positive,
    /// Sampled on the logit scale.
    UnitInterval,
    /// Positive weights whose overall scale is not identified; sampled on the
    /// log scale.
    SimplexFree,
}

impl Support {
    fn to_free(self, x: f64) -> f64 {
        match self {
            Support::Real => x,
            Support::Positive | Support::SimplexFree => x.ln(),
            Support::UnitInterval => (x / (1.0 - x)).ln(),
        }
    }

    fn from_free(self, z: f64) -> f64 {
        match self {
            Support::Real => z,
            Support::Positive | Support::SimplexFree => z.exp(),
            Support::UnitInterval => logistic(z),
        }
    }

    /// log |dx/dz| at `x`.
    fn log_jacobian(self, x: f64) -> f64 {
        match self {
            Support::Real => 0.0,
            Support::Positive | Support::SimplexFree => x.ln(),
            Support::UnitInterval => x.ln() + (1.0 - x).ln(),
        }
    }

    pub fn contains(self, x: f64) -> bool {
        match self {
            Support::Real => x.is_finite(),
            Support::Positive | Support::SimplexFree => x > 0.0 && x.is_finite(),
            Support::UnitInterval => x > 0.0 && x < 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateKind {
    RandomWalkMetropolis,
    /// Exact draw supplied by [`Model::sample_conditional`].
    DirectConditional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBlock {
    pub name: String,
    pub dimension: usize,
    pub update_kind: UpdateKind,
    /// Per-coordinate support; all equal for homogeneous blocks.
    pub supports: Vec<Support>,
    /// Updates of this block per sweep.
    pub repeats: usize,
}

impl ParameterBlock {
    pub fn random_walk(name: impl Into<String>, dimension: usize, support: Support) -> Self {
        Self {
            name: name.into(),
            dimension,
            update_kind: UpdateKind::RandomWalkMetropolis,
            supports: vec![support; dimension],
            repeats: 1,
        }
    }

    pub fn direct(name: impl Into<String>, dimension: usize) -> Self {
        Self {
            name: name.into(),
            dimension,
            update_kind: UpdateKind::DirectConditional,
            supports: vec![Support::Real; dimension],
            repeats: 1,
        }
    }

    /// Heterogeneous block, e.g. a positive shape jointly with real coefficients.
    pub fn mixed(name: impl Into<String>, supports: Vec<Support>) -> Self {
        Self {
            name: name.into(),
            dimension: supports.len(),
            update_kind: UpdateKind::RandomWalkMetropolis,
            supports,
            repeats: 1,
        }
    }

    pub fn with_repeats(mut self, repeats: usize) -> Self {
        self.repeats = repeats.max(1);
        self
    }

    /// The common support, or `None` for mixed blocks.
    pub fn support(&self) -> Option<Support> {
        let first = *self.supports.first()?;
        self.supports.iter().all(|s| *s == first).then_some(first)
    }
}

/// A posterior the engine can sample.
///
/// Random-walk blocks are read and written through `get_block`/`set_block` in
/// their natural parameterization; the engine handles transformation and the
/// Jacobian. `block_log_density` may drop any term that does not involve the
/// block.
pub trait Model: Sync {
    type State: Clone + Send;

    fn blocks(&self) -> Vec<ParameterBlock>;

    /// Draws a starting state.
    fn initial_state(&self, rng: &mut RngStream) -> Self::State;

    fn log_posterior(&self, state: &Self::State) -> f64;

    fn block_log_density(&self, state: &Self::State, _block: usize) -> f64 {
        self.log_posterior(state)
    }

    fn get_block(&self, state: &Self::State, block: usize, out: &mut [f64]);

    fn set_block(&self, state: &mut Self::State, block: usize, values: &[f64]);

    fn sample_conditional(
        &self,
        _state: &mut Self::State,
        block: usize,
        _rng: &mut RngStream,
    ) -> Result<()> {
        Err(Error::invalid(format!(
            "block {block} has no direct sampler"
        )))
    }

    /// Names of the scalars stored per draw.
    fn parameter_names(&self) -> Vec<String>;

    fn record(&self, state: &Self::State, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub n_chains: usize,
    pub burn_in: usize,
    /// Stored draws per chain, after thinning.
    pub keep: usize,
    pub thin: usize,
    pub seed: u64,
    pub target_accept: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_chains: 3,
            burn_in: 3000,
            keep: 3000,
            thin: 1,
            seed: 1,
            target_accept: 0.35,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains < 2 {
            return Err(Error::invalid("at least two chains are required"));
        }
        if self.keep == 0 {
            return Err(Error::invalid("keep must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::invalid("target_accept must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.n_chains * self.keep < 1000 {
            w.push(format!(
                "only {} pooled draws; interval diagnostics are unreliable below 1000",
                self.n_chains * self.keep
            ));
        }
        w
    }
}

/// Proposal state of one random-walk block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAdaptation {
    pub scale: f64,
    /// Lower-triangular proposal shape, column-major; identity until adapted.
    pub cholesky: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Adapter {
    dim: usize,
    log_scale: f64,
    chol: DMatrix<f64>,
    using_cov: bool,
    n: usize,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
    updates: usize,
    accepted: usize,
    proposed: usize,
}

impl Adapter {
    fn new(dim: usize) -> Self {
        Self {
            dim,
            log_scale: INITIAL_SCALE.ln(),
            chol: DMatrix::identity(dim, dim),
            using_cov: false,
            n: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
            updates: 0,
            accepted: 0,
            proposed: 0,
        }
    }

    fn robbins_monro(&mut self, accepted: bool, target: f64) {
        self.updates += 1;
        let gain = (self.updates as f64).powf(-0.6);
        let a = if accepted { 1.0 } else { 0.0 };
        self.log_scale = (self.log_scale + gain * (a - target)).clamp(-30.0, 10.0);
    }

    fn observe(&mut self, z: &[f64]) {
        self.n += 1;
        let x = DVector::from_column_slice(z);
        let delta = &x - &self.mean;
        self.mean += &delta / self.n as f64;
        let delta2 = &x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn refresh_covariance(&mut self) {
        if self.dim < 2 || self.n < COVARIANCE_REFRESH.max(3 * self.dim) {
            return;
        }
        let mut cov = &self.m2 / (self.n - 1) as f64;
        let ridge = 1e-8 * (cov.trace() / self.dim as f64).max(1e-12);
        for i in 0..self.dim {
            cov[(i, i)] += ridge;
        }
        if let Some(c) = cov.cholesky() {
            self.chol = c.l();
            if !self.using_cov {
                self.using_cov = true;
                self.log_scale = (2.38 / (self.dim as f64).sqrt()).ln();
            }
        }
    }

    fn snapshot(&self) -> BlockAdaptation {
        BlockAdaptation {
            scale: self.log_scale.exp(),
            cholesky: self.chol.as_slice().to_vec(),
        }
    }
}

/// Per-chain output besides the draws.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub acceptance: Vec<f64>,
    pub adaptation_at_freeze: Vec<Option<BlockAdaptation>>,
    pub adaptation_final: Vec<Option<BlockAdaptation>>,
}

/// Draws a starting state with finite log-posterior, retrying up to
/// [`INIT_RETRIES`] times.
pub fn initial_state<M: Model>(model: &M, rng: &mut RngStream) -> Result<M::State> {
    for _ in 0..INIT_RETRIES {
        let s = model.initial_state(rng);
        if model.log_posterior(&s).is_finite() {
            return Ok(s);
        }
    }
    Err(Error::Initialization {
        attempts: INIT_RETRIES,
    })
}

pub fn run_chains<M: Model>(model: &M, config: &ChainConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    let blocks = model.blocks();
    for b in &blocks {
        if b.dimension == 0 || b.supports.len() != b.dimension {
            return Err(Error::invalid(format!(
                "block `{}` declares dimension {} with {} supports",
                b.name,
                b.dimension,
                b.supports.len()
            )));
        }
    }
    let names = model.parameter_names();
    let results: Vec<Result<(Vec<f64>, ChainReport)>> = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_one_chain(model, &blocks, names.len(), config, c))
        .collect();
    let mut values = Vec::with_capacity(config.n_chains * config.keep * names.len());
    let mut reports = Vec::with_capacity(config.n_chains);
    for r in results {
        let (v, rep) = r?;
        values.extend(v);
        reports.push(rep);
    }
    let acceptance = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mean = reports.iter().map(|r| r.acceptance[i]).sum::<f64>() / reports.len() as f64;
            (b.name.clone(), mean)
        })
        .collect();
    Ok(PosteriorDraws::new(
        names,
        config.n_chains,
        config.keep,
        values,
        acceptance,
        reports,
        config.warnings(),
    ))
}

fn run_one_chain<M: Model>(
    model: &M,
    blocks: &[ParameterBlock],
    n_params: usize,
    config: &ChainConfig,
    chain: usize,
) -> Result<(Vec<f64>, ChainReport)> {
    let mut init_rng = RngStream::keyed(config.seed, &[tags::INIT, chain as u64]);
    let mut state = initial_state(model, &mut init_rng)?;
    let mut rng = RngStream::keyed(config.seed, &[tags::CHAIN, chain as u64]);

    let mut adapters: Vec<Option<Adapter>> = blocks
        .iter()
        .map(|b| {
            (b.update_kind == UpdateKind::RandomWalkMetropolis).then(|| Adapter::new(b.dimension))
        })
        .collect();
    let max_dim = blocks.iter().map(|b| b.dimension).max().unwrap_or(0);
    let mut cur = vec![0.0; max_dim];
    let mut z = vec![0.0; max_dim];
    let mut prop = vec![0.0; max_dim];
    let mut eps: DVector<f64> = DVector::zeros(max_dim);

    let total = config.burn_in + config.keep * config.thin;
    let cov_start = config.burn_in / 3;
    let mut out = Vec::with_capacity(config.keep * n_params);
    let mut row = vec![0.0; n_params];
    let mut freeze = None;

    for iter in 0..total {
        let adapting = iter < config.burn_in;
        if iter == config.burn_in {
            freeze = Some(snapshots(&adapters));
            for a in adapters.iter_mut().flatten() {
                a.accepted = 0;
                a.proposed = 0;
            }
        }
        for (bi, block) in blocks.iter().enumerate() {
            for _ in 0..block.repeats {
                match block.update_kind {
                    UpdateKind::DirectConditional => {
                        model
                            .sample_conditional(&mut state, bi, &mut rng)
                            .map_err(|e| sampling_error(block, iter, e.to_string()))?;
                    }
                    UpdateKind::RandomWalkMetropolis => {
                        let ad = adapters[bi]
                            .as_mut()
                            .expect("random-walk block has an adapter");
                        let d = block.dimension;
                        model.get_block(&state, bi, &mut cur[..d]);
                        let lp_cur = model.block_log_density(&state, bi)
                            + jacobian(&block.supports, &cur[..d]);
                        if lp_cur.is_nan() {
                            return Err(sampling_error(block, iter, "log-density is NaN".into()));
                        }
                        for k in 0..d {
                            z[k] = block.supports[k].to_free(cur[k]);
                        }
                        let scale = ad.log_scale.exp();
                        for k in 0..d {
                            eps[k] = <StandardNormal as Distribution<f64>>::sample(
                                &StandardNormal,
                                &mut rng,
                            );
                        }
                        let mut ok = true;
                        for k in 0..d {
                            let mut step = 0.0;
                            for j in 0..=k {
                                step += ad.chol[(k, j)] * eps[j];
                            }
                            prop[k] = block.supports[k].from_free(z[k] + scale * step);
                            ok &= block.supports[k].contains(prop[k]);
                        }
                        let log_u = rng.uniform().ln();
                        let mut accepted = false;
                        if ok {
                            model.set_block(&mut state, bi, &prop[..d]);
                            let lp_prop = model.block_log_density(&state, bi)
                                + jacobian(&block.supports, &prop[..d]);
                            if lp_prop.is_nan() {
                                return Err(sampling_error(
                                    block,
                                    iter,
                                    "log-density is NaN at proposal".into(),
                                ));
                            }
                            accepted = log_u < lp_prop - lp_cur;
                            if !accepted {
                                model.set_block(&mut state, bi, &cur[..d]);
                            }
                        }
                        ad.proposed += 1;
                        ad.accepted += accepted as usize;
                        if adapting {
                            ad.robbins_monro(accepted, config.target_accept);
                        }
                    }
                }
            }
            if adapting && iter >= cov_start {
                if let Some(ad) = adapters[bi].as_mut() {
                    if ad.dim > 1 {
                        let d = block.dimension;
                        model.get_block(&state, bi, &mut cur[..d]);
                        for k in 0..d {
                            z[k] = block.supports[k].to_free(cur[k]);
                        }
                        ad.observe(&z[..d]);
                        if (iter - cov_start + 1) % COVARIANCE_REFRESH == 0 {
                            ad.refresh_covariance();
                        }
                    }
                }
            }
        }
        if !adapting && (iter - config.burn_in + 1) % config.thin == 0 {
            model.record(&state, &mut row);
            if let Some(pos) = row.iter().position(|v| v.is_nan()) {
                return Err(Error::Sampling {
                    block: model.parameter_names()[pos].clone(),
                    iteration: iter,
                    message: "recorded value is NaN".into(),
                });
            }
            out.extend_from_slice(&row);
        }
    }

    let acceptance = adapters
        .iter()
        .map(|a| match a {
            Some(a) if a.proposed > 0 => a.accepted as f64 / a.proposed as f64,
            _ => 1.0,
        })
        .collect();
    let finals = snapshots(&adapters);
    Ok((
        out,
        ChainReport {
            acceptance,
            adaptation_at_freeze: freeze.unwrap_or_else(|| finals.clone()),
            adaptation_final: finals,
        },
    ))
}

fn snapshots(adapters: &[Option<Adapter>]) -> Vec<Option<BlockAdaptation>> {
    adapters
        .iter()
        .map(|a| a.as_ref().map(Adapter::snapshot))
        .collect()
}

fn jacobian(supports: &[Support], x: &[f64]) -> f64 {
    supports
        .iter()
        .zip(x)
        .map(|(s, &v)| s.log_jacobian(v))
        .sum()
}

fn sampling_error(block: &ParameterBlock, iteration: usize, message: String) -> Error {
    Error::Sampling {
        block: block.name.clone(),
        iteration,
        message,
    }
}
