//! Shared fixtures for the benchmarks.

use survey_clv::mcmc::{ChainConfig, PosteriorDraws};
use survey_clv::mobile::{generate_mobile_survey, MobileTruth, SyntheticSurveyConfig};
use survey_clv::semimarkov::{
    extract_survey, fit_sm, generate_population, GeneratorConfig, SurveyObservation,
};
use survey_clv::survey::{build_dataset, BrandCatalog, ModelDataset, Variant};

/// Historical-variant dataset built from a synthetic 536-respondent survey.
pub fn mobile_dataset(seed: u64) -> ModelDataset {
    let catalog = BrandCatalog::mobile_default();
    let shape = SyntheticSurveyConfig::default();
    let respondents = generate_mobile_survey(&MobileTruth::reference(), &shape, &catalog, seed)
        .expect("synthetic survey");
    build_dataset(
        &respondents,
        Variant::Historical,
        shape.survey_date,
        &catalog,
    )
    .expect("dataset")
}

/// Survey of `n` individuals from a default semi-Markov population.
pub fn semimarkov_survey(n: usize, seed: u64) -> Vec<SurveyObservation> {
    let population =
        generate_population(20 * n, &GeneratorConfig::default(), seed).expect("population");
    extract_survey(&population, n, seed)
        .expect("survey")
        .observations
}

/// Short chains, enough to drive the CLV simulation.
pub fn short_chains(keep: usize, seed: u64) -> ChainConfig {
    ChainConfig {
        n_chains: 2,
        burn_in: 0,
        keep,
        seed,
        ..ChainConfig::default()
    }
}

pub fn semimarkov_draws(data: &[SurveyObservation], keep: usize) -> PosteriorDraws {
    fit_sm(data, &short_chains(keep, 1)).expect("fit")
}
