use std::path::PathBuf;

use survey_clv::clv::ClvDistribution;
use survey_clv::mobile::{
    generate_mobile_survey, parameter_names, reference, MobileTruth, SyntheticSurveyConfig,
};
use survey_clv::semimarkov::{
    extract_survey, focal_revenue, generate_population, true_ce_oracle, write_observations,
    write_population,
};
use survey_clv::survey::write_survey;

use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::output::{num, Output};

pub fn simulate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    match config.model {
        ModelKind::Semimarkov => simulate_semimarkov(config),
        ModelKind::Mobile => simulate_mobile(config),
    }
}

pub(crate) fn distribution_row(segment: &str, d: &ClvDistribution) -> Vec<String> {
    vec![
        segment.to_string(),
        d.n.to_string(),
        num(d.min),
        num(d.q1),
        num(d.median),
        num(d.mean),
        num(d.q3),
        num(d.max),
    ]
}

pub(crate) const DISTRIBUTION_COLUMNS: [&str; 8] =
    ["segment", "n", "min", "q1", "median", "mean", "q3", "max"];

fn simulate_semimarkov(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let g = &config.generator;
    if g.sample == 0 || g.population == 0 {
        return Err(CliError::Config(
            "generator.population and generator.sample must be positive".into(),
        ));
    }
    let population = generate_population(g.population, &config.generator_config(), config.seed)
        .context("generating the population")?;
    let survey =
        extract_survey(&population, g.sample, config.seed).context("extracting the survey")?;
    let revenue = focal_revenue(
        config.revenue.value_per_purchase,
        config.horizon_months() / 12.0,
        config.revenue.annual_discount,
    );
    let truth = true_ce_oracle(&population, &revenue).context("valuing the population")?;

    let mut out = Output::new(config)?;
    let header = out.header_lines();
    let path = out.path("population.csv");
    write_population(
        out.create("population.csv")?,
        &population,
        Some(&truth.clv),
        &header,
    )
    .context(path.display().to_string())?;
    let path = out.path("survey.csv");
    write_observations(out.create("survey.csv")?, &survey.observations, &header)
        .context(path.display().to_string())?;

    let all = ClvDistribution::of(&truth.clv).context("summarizing CLVs")?;
    let mut oracle_cols = DISTRIBUTION_COLUMNS.to_vec();
    oracle_cols.push("total");
    let row = |name: &str, d: &ClvDistribution| {
        let mut r = distribution_row(name, d);
        r.push(num(d.mean * d.n as f64));
        r
    };
    out.table(
        "oracle.csv",
        &oracle_cols,
        [
            row("population", &all),
            row("focal", &truth.focal),
            row("competitor", &truth.competitor),
        ],
    )?;
    out.table(
        "survey_extraction.csv",
        &["sample", "rejections"],
        [vec![g.sample.to_string(), survey.rejections.to_string()]],
    )?;
    println!(
        "true CE {:.0} (mean CLV {:.2}) over {} individuals",
        truth.ce, truth.mean_clv, g.population
    );
    Ok(out.written().to_vec())
}

fn simulate_mobile(config: &RunConfig) -> Result<Vec<PathBuf>> {
    if config.mobile.respondents == 0 {
        return Err(CliError::Config(
            "mobile.respondents must be positive".into(),
        ));
    }
    let catalog = config.catalog()?;
    let mut truth = MobileTruth::reference();
    if catalog.len() != truth.w.n_brands {
        return Err(CliError::Config(format!(
            "synthetic mobile surveys use the {} reference brands, got {}",
            truth.w.n_brands,
            catalog.len()
        )));
    }
    if let Some(k) = config.mobile.generator_kappa {
        if !(k > 0.0 && k.is_finite()) {
            return Err(CliError::Config(
                "mobile.generator_kappa must be positive".into(),
            ));
        }
        // shift the intercept so the mean interval stays at the reference
        truth.beta[0] += (k / reference::KAPPA).ln();
        truth.kappa = k;
    }
    let mut shape = SyntheticSurveyConfig {
        n: config.mobile.respondents,
        survey_date: config.survey_date()?,
        ..SyntheticSurveyConfig::default()
    };
    if config.mobile.month_exact {
        shape.current_granularity = [1.0, 0.0, 0.0, 0.0];
        shape.previous_granularity = [1.0, 0.0, 0.0, 0.0];
    }
    let respondents = generate_mobile_survey(&truth, &shape, &catalog, config.seed)
        .context("generating the synthetic survey")?;

    let mut out = Output::new(config)?;
    let header = out.header_lines();
    let path = out.path("survey.csv");
    write_survey(out.create("survey.csv")?, &respondents, &catalog, &header)
        .context(path.display().to_string())?;
    let names = parameter_names(&catalog.labels());
    out.table(
        "truth.csv",
        &["parameter", "value"],
        names
            .into_iter()
            .zip(truth.as_vector())
            .map(|(n, v)| vec![n, num(v)]),
    )?;
    Ok(out.written().to_vec())
}
