use std::path::PathBuf;

use survey_clv::mcmc::PosteriorDraws;
use survey_clv::mobile::{cdf_envelope, regenerate_brands};

use super::fit::load_mobile_dataset;
use crate::config::{ModelKind, RunConfig};
use crate::error::{CliError, Context, Result};
use crate::output::{num, open, Output};

/// Share of envelope realizations that must stay inside the empirical band.
pub const ENVELOPE_PASS_FRACTION: f64 = 0.95;

pub fn diagnose(config: &RunConfig) -> Result<Vec<PathBuf>> {
    if config.model != ModelKind::Mobile {
        return Err(CliError::Config(
            "diagnose supports the mobile model only".into(),
        ));
    }
    let d = &config.diagnose;
    if !(d.grid_step_months > 0.0) || d.realizations == 0 {
        return Err(CliError::Config(
            "diagnose needs a positive grid step and at least one realization".into(),
        ));
    }
    let path = config.draws_path();
    let draws =
        PosteriorDraws::read_csv(open(&path, "draws file")?).context(path.display().to_string())?;
    let data = load_mobile_dataset(config)?;

    let regen = regenerate_brands(&draws, &data, config.seed).context("regenerating brands")?;
    let n_grid = (d.grid_max_months / d.grid_step_months).floor() as usize + 1;
    let grid: Vec<f64> = (0..n_grid).map(|i| i as f64 * d.grid_step_months).collect();
    let env = cdf_envelope(&draws, &data, &grid, d.realizations, config.seed)
        .context("computing the CDF envelope")?;

    let mut out = Output::new(config)?;
    let outside = regen.outside_band();
    out.table(
        "brand_regeneration.csv",
        &["brand", "observed", "mean", "lo95", "hi95", "inside"],
        (0..regen.labels.len()).map(|b| {
            vec![
                regen.labels[b].clone(),
                regen.observed[b].to_string(),
                num(regen.mean[b]),
                num(regen.lo95[b]),
                num(regen.hi95[b]),
                (!outside.contains(&b)).to_string(),
            ]
        }),
    )?;

    let mut cols = vec![
        "month".to_string(),
        "tmin_cdf".to_string(),
        "tmax_cdf".to_string(),
    ];
    cols.extend((1..=env.realizations.len()).map(|r| format!("r{r}")));
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    out.table(
        "cdf_envelope.csv",
        &col_refs,
        (0..grid.len()).map(|g| {
            let mut row = vec![num(grid[g]), num(env.tmin_cdf[g]), num(env.tmax_cdf[g])];
            row.extend(env.realizations.iter().map(|r| num(r[g])));
            row
        }),
    )?;

    let fraction = env.fraction_within_band();
    let envelope_ok = fraction >= ENVELOPE_PASS_FRACTION;
    out.table(
        "ppc.csv",
        &["check", "value", "threshold", "pass"],
        [
            vec![
                "brands_inside_band".into(),
                (regen.labels.len() - outside.len()).to_string(),
                regen.labels.len().to_string(),
                outside.is_empty().to_string(),
            ],
            vec![
                "envelope_fraction_inside".into(),
                num(fraction),
                num(ENVELOPE_PASS_FRACTION),
                envelope_ok.to_string(),
            ],
        ],
    )?;
    for &b in &outside {
        eprintln!(
            "warning: observed {} count outside its 95% band",
            regen.labels[b]
        );
    }
    if !envelope_ok {
        eprintln!(
            "warning: CDF envelope violation: only {:.1}% of realizations stay inside the empirical band",
            100.0 * fraction
        );
    }
    Ok(out.written().to_vec())
}
