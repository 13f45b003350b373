//! Interval-censored Gamma purchase intervals with logistic repurchase and
//! age-group brand choice.

mod checks;
mod model;
mod params;
mod process;
mod synthetic;

pub use checks::{
    cdf_envelope, default_grid, regenerate_brands, BrandRegeneration, CdfEnvelope,
    DEFAULT_REALIZATIONS,
};
pub use model::{
    check_draws, fit_mobile, initial_latent, log_posterior, parameter_names, DrawView,
    MobileFitOptions, MobileModel, MobileState, WeightUpdate, RIGHT_CENSORED_CAP_YEARS,
    RIGHT_CENSORED_INIT_EXCESS_MONTHS,
};
pub use params::{
    acquisition_probs, active_slots, brands_of, coefficient_len, coefficient_names,
    linear_predictor, rate_of, reference, repurchase_prob, weight_names, MobileModelParams,
    PriorSpec, WeightMatrix,
};
pub use process::MobileProcess;
pub use synthetic::{generate_mobile_survey, MobileTruth, SyntheticSurveyConfig};
