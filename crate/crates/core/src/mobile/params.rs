use crate::dist::logistic;
use crate::error::{Error, Result};
use crate::survey::{BrandId, Covariates, AGE_GROUPS, GENDERS, INCOME_GROUPS, REGIONS};

/// Covariate slots after the intercept and brand effects.
const NON_BRAND_SLOTS: usize =
    (AGE_GROUPS.len() - 1) + (GENDERS.len() - 1) + (INCOME_GROUPS.len() - 1) + (REGIONS.len() - 1);

/// Length of a coefficient vector for `n_brands` brands.
pub fn coefficient_len(n_brands: usize) -> usize {
    1 + (n_brands - 1) + NON_BRAND_SLOTS
}

/// Number of brands implied by a coefficient vector length.
pub fn brands_of(coef_len: usize) -> usize {
    coef_len - NON_BRAND_SLOTS
}

/// Coefficient indices that are switched on for a record (intercept first).
/// Reference categories contribute nothing.
pub fn active_slots(n_brands: usize, brand: BrandId, c: &Covariates) -> ([usize; 6], usize) {
    let mut out = [0usize; 6];
    let mut n = 1;
    let mut push = |slot: usize| {
        out[n] = slot;
        n += 1;
    };
    let mut base = 1;
    if brand.0 > 1 {
        push(base + brand.0 - 2);
    }
    base += n_brands - 1;
    if c.agegr > 1 {
        push(base + c.agegr as usize - 2);
    }
    base += AGE_GROUPS.len() - 1;
    if c.gender > 1 {
        push(base + c.gender as usize - 2);
    }
    base += GENDERS.len() - 1;
    if c.incomegr > 1 {
        push(base + c.incomegr as usize - 2);
    }
    base += INCOME_GROUPS.len() - 1;
    if c.region > 1 {
        push(base + c.region as usize - 2);
    }
    (out, n)
}

/// `coef · x` for a record with brand covariate `brand`.
pub fn linear_predictor(coef: &[f64], brand: BrandId, c: &Covariates) -> f64 {
    let (slots, n) = active_slots(brands_of(coef.len()), brand, c);
    slots[..n].iter().map(|&s| coef[s]).sum()
}

/// Purchase rate: `exp(beta · x)`, with `brand` the brand held during the interval.
pub fn rate_of(brand: BrandId, c: &Covariates, beta: &[f64]) -> f64 {
    linear_predictor(beta, brand, c).exp()
}

/// Probability that the next purchase is again `brand`.
pub fn repurchase_prob(brand: BrandId, c: &Covariates, alpha: &[f64]) -> f64 {
    logistic(linear_predictor(alpha, brand, c))
}

/// Brand-choice probabilities on churn from `current`, given the popularity
/// weights of the customer's age group (`column[j]` for brand `j + 1`).
pub fn acquisition_probs(current: BrandId, column: &[f64]) -> Result<Vec<f64>> {
    if column.len() < 2 {
        return Err(Error::invalid("acquisition needs at least two brands"));
    }
    let u = current.index();
    let total: f64 = column
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != u)
        .map(|(_, w)| *w)
        .sum();
    if !(total > 0.0) {
        return Err(Error::invalid(
            "all competing brand weights are zero; acquisition is undefined",
        ));
    }
    Ok(column
        .iter()
        .enumerate()
        .map(|(j, w)| if j == u { 0.0 } else { w / total })
        .collect())
}

/// Brand-popularity weights, brand-major: `w[(brand - 1) * 6 + (agegr - 1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub n_brands: usize,
    pub values: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(n_brands: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_brands * AGE_GROUPS.len() {
            return Err(Error::invalid(format!(
                "weight matrix needs {} entries, got {}",
                n_brands * AGE_GROUPS.len(),
                values.len()
            )));
        }
        Ok(Self { n_brands, values })
    }

    pub fn get(&self, brand: BrandId, agegr: u8) -> f64 {
        self.values[brand.index() * AGE_GROUPS.len() + agegr as usize - 1]
    }

    pub fn column(&self, agegr: u8) -> Vec<f64> {
        (0..self.n_brands)
            .map(|b| self.get(BrandId::from_index(b), agegr))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileModelParams {
    pub kappa: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub w: WeightMatrix,
    /// Imputed purchase interval per record, in years.
    pub latent_t: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub kappa_shape: f64,
    pub kappa_rate: f64,
    pub coef_mean: f64,
    pub coef_variance: f64,
    pub weight_a: f64,
    pub weight_b: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            kappa_shape: 1.0,
            kappa_rate: 1.0,
            coef_mean: 0.0,
            coef_variance: 1000.0,
            weight_a: 2.0,
            weight_b: 2.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.kappa_shape,
            self.kappa_rate,
            self.coef_variance,
            self.weight_a,
            self.weight_b,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !self.coef_mean.is_finite() {
            return Err(Error::invalid(
                "prior hyperparameters must be finite and positive",
            ));
        }
        Ok(())
    }
}

/// Display names of the coefficient slots, e.g. `beta[Apple]`, `alpha[65-79]`.
pub fn coefficient_names(prefix: &str, brand_labels: &[String]) -> Vec<String> {
    let mut names = vec![format!("{prefix}0")];
    let others = brand_labels
        .iter()
        .skip(1)
        .map(String::as_str)
        .chain(AGE_GROUPS.iter().skip(1).copied())
        .chain(GENDERS.iter().skip(1).copied())
        .chain(INCOME_GROUPS.iter().skip(1).copied())
        .chain(REGIONS.iter().skip(1).copied());
    names.extend(others.map(|l| format!("{prefix}[{l}]")));
    names
}

pub fn weight_names(brand_labels: &[String]) -> Vec<String> {
    brand_labels
        .iter()
        .flat_map(|b| AGE_GROUPS.iter().map(move |a| format!("w[{b},{a}]")))
        .collect()
}

/// Posterior means of the historical-repurchase fit to the Finnish mobile
/// phone survey (brands Nokia, Apple, Samsung, Other).
pub mod reference {
    pub const KAPPA: f64 = 1.53;
    pub const BETA: [f64; 17] = [
        -0.46, 0.71, 0.55, 0.10, -0.09, -0.23, -0.34, -0.44, -0.62, 0.06, 0.20, 0.16, 0.22, 0.28,
        -0.02, -0.16, 0.01,
    ];
    pub const ALPHA: [f64; 17] = [
        0.25, -0.05, -1.11, -3.11, 0.80, 1.02, 1.33, 1.84, 2.27, 0.22, 0.42, 0.06, -0.60, -0.34,
        -1.09, -0.16, -0.33,
    ];
    /// Popularity weights used for synthetic surveys, brand-major over the
    /// six age groups.
    pub const W: [f64; 24] = [
        0.55, 0.60, 0.65, 0.70, 0.75, 0.80, // Nokia
        0.45, 0.35, 0.30, 0.25, 0.15, 0.10, // Apple
        0.60, 0.55, 0.50, 0.45, 0.40, 0.30, // Samsung
        0.35, 0.35, 0.30, 0.30, 0.25, 0.25, // Other
    ];
}
