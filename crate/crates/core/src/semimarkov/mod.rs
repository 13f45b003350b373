//! Two-state (focal company against the rest) brand switching with Poisson
//! purchase timing and individual heterogeneity.

mod io;
mod model;
mod params;
mod population;
mod process;

pub use io::{read_observations, write_observations, write_population, OBSERVATION_COLUMNS};
pub use model::{fit_sm, log_posterior_sm, SemiMarkovModel, SmState, HYPER_NAMES};
pub use params::{equilibrium, focal_next, SemiMarkovParams, SmHyper, VARIANCE_STABILIZER};
pub use population::{
    extract_survey, focal_revenue, generate_population, true_ce_oracle, GeneratorConfig,
    Individual, PurchaseHistory, SurveyObservation, SurveySample, TrueCe, COMPETITOR, FOCAL,
    STATE_LABELS,
};
pub use process::{estimate_ce, CeEstimate, SemiMarkovProcess};
