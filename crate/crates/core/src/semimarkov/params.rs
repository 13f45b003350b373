use crate::error::{Error, Result};

/// Added to the intensity variance before deriving the Gamma shape and rate.
pub const VARIANCE_STABILIZER: f64 = 1e-5;

/// Population-level parameters of the two-state switching model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmHyper {
    /// Mean of the purchase intensity distribution (purchases per year).
    pub m_lambda: f64,
    /// Variance of the purchase intensity distribution.
    pub v_lambda: f64,
    pub m_p: f64,
    pub k_p: f64,
    pub m_q: f64,
    pub k_q: f64,
}

impl SmHyper {
    pub fn gamma_shape(&self) -> f64 {
        self.m_lambda * self.m_lambda / (self.v_lambda + VARIANCE_STABILIZER)
    }

    pub fn delta_rate(&self) -> f64 {
        self.m_lambda / (self.v_lambda + VARIANCE_STABILIZER)
    }

    pub fn alpha_p(&self) -> f64 {
        self.k_p * self.m_p
    }

    pub fn beta_p(&self) -> f64 {
        self.k_p * (1.0 - self.m_p)
    }

    pub fn alpha_q(&self) -> f64 {
        self.k_q * self.m_q
    }

    pub fn beta_q(&self) -> f64 {
        self.k_q * (1.0 - self.m_q)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.m_lambda, self.v_lambda, self.k_p, self.k_q];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(
                "intensity moments and Beta concentrations must be positive",
            ));
        }
        if [self.m_p, self.m_q].iter().any(|m| !(*m > 0.0 && *m < 1.0)) {
            return Err(Error::invalid(
                "mean repurchase probabilities must lie in (0, 1)",
            ));
        }
        Ok(())
    }
}

/// Hyperparameters together with the per-individual parameters and the
/// latent state before the previous purchase.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovParams {
    pub hyper: SmHyper,
    pub lambda: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `true` when the purchase before the previous one was with the focal
    /// company.
    pub s2: Vec<bool>,
}

/// Stationary probability of being in the focal state, `(1-q)/(2-q-p)`.
/// When `p = q = 1` both states are absorbing and one half is returned.
pub fn equilibrium(p: f64, q: f64) -> f64 {
    let denom = 2.0 - q - p;
    if denom <= 0.0 {
        0.5
    } else {
        (1.0 - q) / denom
    }
}

/// Probability that the next purchase is with the focal company given the
/// current state.
pub fn focal_next(p: f64, q: f64, focal: bool) -> f64 {
    if focal {
        p
    } else {
        1.0 - q
    }
}
