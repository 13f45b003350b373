use std::path::PathBuf;

use survey_clv::mcmc::{
    all_diagnostics, PosteriorDraws, Summary, CONVERGENCE_THRESHOLD, DEFAULT_COVERAGE,
};
use survey_clv::mobile::fit_mobile;
use survey_clv::semimarkov::{fit_sm, read_observations};
use survey_clv::survey::{build_dataset, parse_survey, write_dataset, ModelDataset};

use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::output::{num, open, Output};

/// Parses the configured survey file and builds the dataset of the
/// configured variant.
pub(crate) fn load_mobile_dataset(config: &RunConfig) -> Result<ModelDataset> {
    let path = config.survey_path();
    let catalog = config.catalog()?;
    let respondents =
        parse_survey(open(&path, "survey file")?, &catalog).context(path.display().to_string())?;
    build_dataset(
        &respondents,
        config.variant()?,
        config.survey_date()?,
        &catalog,
    )
    .context("building the dataset")
}

pub(crate) fn load_observations(
    config: &RunConfig,
) -> Result<Vec<survey_clv::semimarkov::SurveyObservation>> {
    let path = config.survey_path();
    read_observations(open(&path, "survey file")?).context(path.display().to_string())
}

pub fn fit(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let chain_config = config.chain_config()?;
    let (draws, dataset) = match config.model {
        ModelKind::Semimarkov => {
            let data = load_observations(config)?;
            (
                fit_sm(&data, &chain_config).context("fitting the semi-Markov model")?,
                None,
            )
        }
        ModelKind::Mobile => {
            let data = load_mobile_dataset(config)?;
            let draws = fit_mobile(&data, &config.fit_options(), &chain_config)
                .context("fitting the mobile model")?;
            (draws, Some(data))
        }
    };
    let mut out = Output::new(config)?;
    if let Some(data) = dataset {
        let header = out.header_lines();
        let path = out.path("dataset.csv");
        write_dataset(out.create("dataset.csv")?, &data, &header)
            .context(path.display().to_string())?;
    }
    for w in draws.warnings() {
        eprintln!("warning: {w}");
    }
    write_fit(&mut out, config, &draws)
}

fn write_fit(out: &mut Output, config: &RunConfig, draws: &PosteriorDraws) -> Result<Vec<PathBuf>> {
    let header = out.header_lines();
    let path = config.draws_path();
    let file = std::fs::File::create(&path).map_err(crate::error::io_error(&path))?;
    draws
        .thinned(config.chains.export_per_chain)
        .write_csv(std::io::BufWriter::new(file), &header)
        .context(path.display().to_string())?;

    let diagnostics =
        all_diagnostics(draws, DEFAULT_COVERAGE).context("computing interval diagnostics")?;
    let summaries: Vec<Vec<String>> = draws
        .names()
        .iter()
        .enumerate()
        .zip(&diagnostics)
        .map(|((j, name), (_, diag))| {
            let s = Summary::of(&draws.pooled_by_index(j));
            vec![
                name.clone(),
                num(s.mean),
                num(s.sd),
                num(s.lo95),
                num(s.median),
                num(s.hi95),
                num(diag.ratio),
            ]
        })
        .collect();
    out.table(
        "summary.csv",
        &[
            "parameter",
            "mean",
            "sd",
            "lo95",
            "median",
            "hi95",
            "diagnostic",
        ],
        summaries,
    )?;
    out.table(
        "convergence.csv",
        &["parameter", "ratio", "converged"],
        diagnostics
            .iter()
            .map(|(n, d)| vec![n.clone(), num(d.ratio), d.converged().to_string()]),
    )?;
    out.table(
        "acceptance.csv",
        &["block", "rate"],
        draws
            .acceptance()
            .iter()
            .map(|(b, r)| vec![b.clone(), num(*r)]),
    )?;

    let mut written = out.written().to_vec();
    written.push(path);
    let failing: Vec<_> = diagnostics.iter().filter(|(_, d)| !d.converged()).collect();
    if let Some((worst, d)) = failing
        .iter()
        .max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio))
    {
        let msg = format!(
            "{} of {} parameters exceed the interval diagnostic threshold {CONVERGENCE_THRESHOLD} (worst {worst} at {:.3})",
            failing.len(),
            diagnostics.len(),
            d.ratio
        );
        if config.chains.strict {
            for p in &written {
                eprintln!("wrote {}", p.display());
            }
            return Err(CliError::Convergence(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(written)
}
