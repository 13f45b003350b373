use std::path::PathBuf;

use survey_clv::clv::{
    ce_by_stratum, clv_distribution, simulate_histories, summarize_clv, ClvSamples, ClvSummary,
    HistoryPlan, Segment, Segmentation,
};
use survey_clv::mcmc::{mean, quantile_sorted, PosteriorDraws};
use survey_clv::mobile::MobileProcess;
use survey_clv::semimarkov::{estimate_ce, focal_revenue, COMPETITOR, FOCAL, STATE_LABELS};
use survey_clv::survey::{BrandId, PopulationStrata, StratumKey, AGE_GROUPS};

use super::fit::{load_mobile_dataset, load_observations};
use super::simulate::{distribution_row, DISTRIBUTION_COLUMNS};
use crate::config::{ModelKind, RunConfig};
use crate::error::{Context, Result};
use crate::output::{num, open, Output};

const CE_COLUMNS: [&str; 8] = [
    "brand", "stratum", "mean", "lo95", "decile1", "median", "decile9", "hi95",
];
const SUMMARY_COLUMNS: [&str; 6] = ["brand", "segment", "n", "mean", "lo95", "hi95"];

fn ce_row(brand: &str, stratum: &str, per_draw: &[f64]) -> Vec<String> {
    let mut s = per_draw.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p| num(quantile_sorted(&s, p));
    vec![
        brand.into(),
        stratum.into(),
        num(mean(&s)),
        q(0.025),
        q(0.1),
        q(0.5),
        q(0.9),
        q(0.975),
    ]
}

fn segment_label(s: Segment) -> String {
    match s {
        Segment::Customer(true) => "customers".into(),
        Segment::Customer(false) => "non-customers".into(),
        Segment::AgeGroup(a) => format!("agegr={}", AGE_GROUPS[a as usize - 1]),
    }
}

fn summary_rows<'a>(
    rows: &'a [ClvSummary],
    label: &'a dyn Fn(BrandId) -> String,
) -> impl Iterator<Item = Vec<String>> + 'a {
    rows.iter().map(move |r| {
        vec![
            label(r.brand),
            segment_label(r.segment),
            r.n_individuals.to_string(),
            num(r.mean),
            num(r.lo95),
            num(r.hi95),
        ]
    })
}

fn load_draws(config: &RunConfig) -> Result<PosteriorDraws> {
    let path = config.draws_path();
    PosteriorDraws::read_csv(open(&path, "draws file")?).context(path.display().to_string())
}

fn plan(config: &RunConfig) -> HistoryPlan {
    HistoryPlan {
        n_histories: config.revenue.histories,
        seed: config.seed,
    }
}

pub fn estimate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    match config.model {
        ModelKind::Mobile => estimate_mobile(config),
        ModelKind::Semimarkov => estimate_semimarkov(config),
    }
}

fn estimate_mobile(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let draws = load_draws(config)?;
    let data = load_mobile_dataset(config)?;
    let variant = data.variant;
    let process = MobileProcess::new(&draws, &data).context("matching draws to the dataset")?;
    let samples = simulate_histories(&process, &config.mobile_revenue(), plan(config))
        .context("simulating purchase histories")?;

    let current: Vec<BrandId> = data.customers.iter().map(|c| c.current_brand).collect();
    let agegr: Vec<u8> = data.customers.iter().map(|c| c.covariates.agegr).collect();
    let keys: Vec<StratumKey> = agegr.iter().map(|&a| StratumKey::AgeGroup(a)).collect();
    let strata = PopulationStrata::by_agegr(&config.strata.age_population, &data.customers)
        .context("building population strata")?;
    let contributions =
        ce_by_stratum(&samples, &keys, &strata).context("scaling CLVs to the population")?;

    let catalog = data.catalog();
    let label = |b: BrandId| catalog.label(b).to_string();
    let mut out = Output::new(config)?;

    let mut summaries = summarize_clv(&samples, Segmentation::Status, &current, &agegr)
        .context("summarizing CLVs")?;
    summaries.extend(
        summarize_clv(&samples, Segmentation::AgeGroup, &current, &agegr)
            .context("summarizing CLVs")?,
    );
    out.table(
        &format!("clv_summary_{variant}.csv"),
        &SUMMARY_COLUMNS,
        summary_rows(&summaries, &label),
    )?;

    let mut quantile_rows = Vec::new();
    for b in catalog.ids() {
        for customer in [true, false] {
            let members: Vec<usize> = (0..current.len())
                .filter(|&i| (current[i] == b) == customer)
                .collect();
            if members.is_empty() {
                continue;
            }
            let d = clv_distribution(&samples, &members, b).context("summarizing CLVs")?;
            let mut row = vec![label(b)];
            row.extend(distribution_row(
                &segment_label(Segment::Customer(customer)),
                &d,
            ));
            quantile_rows.push(row);
        }
    }
    let mut cols = vec!["brand"];
    cols.extend(DISTRIBUTION_COLUMNS);
    out.table(
        &format!("clv_quantiles_{variant}.csv"),
        &cols,
        quantile_rows,
    )?;

    let totals = totals_by_brand(&contributions, samples.n_draws);
    let mut ce_rows = Vec::new();
    for (b, per_stratum) in contributions.iter().enumerate() {
        let brand = label(BrandId::from_index(b));
        ce_rows.push(ce_row(&brand, "total", &totals[b]));
        for (s, per_draw) in strata.strata().iter().zip(per_stratum) {
            ce_rows.push(ce_row(&brand, &s.key.to_string(), per_draw));
        }
    }
    out.table(&format!("ce_{variant}.csv"), &CE_COLUMNS, ce_rows)?;
    write_ce_draws(
        &mut out,
        &format!("ce_draws_{variant}.csv"),
        &samples,
        &catalog.labels(),
        &totals,
    )?;
    Ok(out.written().to_vec())
}

fn totals_by_brand(contributions: &[Vec<Vec<f64>>], n_draws: usize) -> Vec<Vec<f64>> {
    contributions
        .iter()
        .map(|per_stratum| {
            (0..n_draws)
                .map(|d| per_stratum.iter().map(|s| s[d]).sum())
                .collect()
        })
        .collect()
}

/// Population CE per draw and brand, the data behind an equity histogram.
fn write_ce_draws(
    out: &mut Output,
    name: &str,
    samples: &ClvSamples,
    labels: &[String],
    totals: &[Vec<f64>],
) -> Result<()> {
    let mut cols = vec!["draw"];
    cols.extend(labels.iter().map(String::as_str));
    let rows = (0..samples.n_draws).map(|d| {
        let mut row = vec![samples.draw_indices[d].to_string()];
        row.extend(totals.iter().map(|t| num(t[d])));
        row
    });
    out.table(name, &cols, rows)
}

fn estimate_semimarkov(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let draws = load_draws(config)?;
    let data = load_observations(config)?;
    let revenue = focal_revenue(
        config.revenue.value_per_purchase,
        config.horizon_months() / 12.0,
        config.revenue.annual_discount,
    );
    let est = estimate_ce(
        &draws,
        &data,
        config.generator.population as f64,
        &revenue,
        plan(config),
    )
    .context("estimating customer equity")?;
    let label = |b: BrandId| STATE_LABELS[b.index()].to_string();
    let mut out = Output::new(config)?;

    let current: Vec<BrandId> = data
        .iter()
        .map(|o| if o.s0 { FOCAL } else { COMPETITOR })
        .collect();
    let summaries: Vec<ClvSummary> =
        summarize_clv(&est.samples, Segmentation::Status, &current, &[])
            .context("summarizing CLVs")?
            .into_iter()
            .filter(|s| s.brand == FOCAL)
            .collect();
    out.table(
        "clv_summary.csv",
        &SUMMARY_COLUMNS,
        summary_rows(&summaries, &label),
    )?;

    let mut cols = vec!["brand"];
    cols.extend(DISTRIBUTION_COLUMNS);
    let focal = label(FOCAL);
    out.table(
        "clv_quantiles.csv",
        &cols,
        [
            ("customers", &est.focal),
            ("non-customers", &est.competitor),
        ]
        .map(|(seg, d)| {
            let mut row = vec![focal.clone()];
            row.extend(distribution_row(seg, d));
            row
        }),
    )?;
    out.table(
        "ce.csv",
        &CE_COLUMNS,
        [ce_row(&focal, "all", &est.ce_draws)],
    )?;
    write_ce_draws(
        &mut out,
        "ce_draws.csv",
        &est.samples,
        &[focal],
        std::slice::from_ref(&est.ce_draws),
    )?;
    println!(
        "posterior CE mean {:.0}, 10-90% band {:.0} to {:.0}",
        est.mean, est.decile1, est.decile9
    );
    Ok(out.written().to_vec())
}
