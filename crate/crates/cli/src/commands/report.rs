use std::fs;
use std::path::PathBuf;

use crate::config::RunConfig;
use crate::error::{io_error, CliError, Result};
use crate::output::Output;

/// Tables gathered into the report, in pipeline order.
const SECTIONS: [(&str, &str); 17] = [
    ("oracle.csv", "True population values"),
    ("survey_extraction.csv", "Survey extraction"),
    ("truth.csv", "Generating parameters"),
    ("summary.csv", "Posterior summary"),
    ("convergence.csv", "Interval diagnostics"),
    ("acceptance.csv", "Block acceptance rates"),
    ("ppc.csv", "Posterior predictive checks"),
    ("brand_regeneration.csv", "Brand regeneration"),
    ("clv_summary.csv", "CLV by segment"),
    ("clv_quantiles.csv", "CLV distribution"),
    ("ce.csv", "Customer equity"),
    ("clv_summary_historical.csv", "CLV by segment (historical)"),
    (
        "clv_quantiles_historical.csv",
        "CLV distribution (historical)",
    ),
    ("ce_historical.csv", "Customer equity (historical)"),
    ("clv_summary_intended.csv", "CLV by segment (intended)"),
    ("clv_quantiles_intended.csv", "CLV distribution (intended)"),
    ("ce_intended.csv", "Customer equity (intended)"),
];

pub fn report(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut body = String::new();
    for (name, title) in SECTIONS {
        let path = config.out_dir.join(name);
        if !path.is_file() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        body.push_str(&format!("\n## {title} ({name})\n"));
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            body.push_str(line);
            body.push('\n');
        }
    }
    if body.is_empty() {
        return Err(CliError::Config(format!(
            "no result tables found in {}",
            config.out_dir.display()
        )));
    }
    let mut out = Output::new(config)?;
    out.text("report.txt", &body)?;
    Ok(out.written().to_vec())
}
