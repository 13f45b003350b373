use std::io::{Read, Write};

use super::brand::{BrandCatalog, BrandId};
use super::covariates::{
    parse_agegr, parse_gender, parse_incomegr, parse_region, Covariates, AGE_GROUPS, GENDERS,
    INCOME_GROUPS, REGIONS,
};
use super::dates::DateAnswer;
use crate::error::{Error, Result};

/// Required input columns, in canonical order.
pub const SURVEY_COLUMNS: [&str; 9] = [
    "current_brand",
    "current_date",
    "previous_brand",
    "previous_date",
    "intended_brand",
    "agegr",
    "gender",
    "incomegr",
    "region",
];

/// One survey answer row.
#[derive(Debug, Clone, PartialEq)]
pub struct Respondent {
    pub current_brand: BrandId,
    pub previous_brand: Option<BrandId>,
    pub intended_brand: Option<BrandId>,
    pub current_purchase: DateAnswer,
    pub previous_purchase: DateAnswer,
    pub covariates: Covariates,
}

/// Parses the survey CSV. Columns are located by header name; extra columns
/// are ignored and `#` lines are comments.
pub fn parse_survey<R: Read>(input: R, catalog: &BrandCatalog) -> Result<Vec<Respondent>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(input);

    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let mut cols = [0usize; 9];
    for (slot, name) in cols.iter_mut().zip(SURVEY_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MalformedRow {
                row: 1,
                message: format!("missing required column `{name}`"),
            })?;
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::MalformedRow {
                row,
                message: e.to_string(),
            }
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(cols[i]).unwrap_or("");

        let brand = |name: &'static str, raw: &str| -> Result<Option<BrandId>> {
            if raw.is_empty() {
                return Ok(None);
            }
            catalog
                .resolve(raw)
                .map(Some)
                .ok_or(Error::FieldOutOfRange {
                    row,
                    field: name,
                    value: raw.to_string(),
                })
        };
        let date = |name: &'static str, raw: &str| -> Result<DateAnswer> {
            raw.parse::<DateAnswer>()
                .map_err(|message| Error::MalformedRow {
                    row,
                    message: format!("{name}: {message}"),
                })
        };
        let code = |name: &'static str, raw: &str, f: fn(&str) -> Option<u8>| -> Result<u8> {
            f(raw).ok_or(Error::FieldOutOfRange {
                row,
                field: name,
                value: raw.to_string(),
            })
        };

        let current_brand = brand("current_brand", field(0))?.ok_or(Error::MalformedRow {
            row,
            message: "current_brand is required".into(),
        })?;
        let covariates = Covariates {
            agegr: code("agegr", field(5), parse_agegr)?,
            gender: code("gender", field(6), parse_gender)?,
            incomegr: code("incomegr", field(7), parse_incomegr)?,
            region: code("region", field(8), parse_region)?,
        };
        out.push(Respondent {
            current_brand,
            current_purchase: date("current_date", field(1))?,
            previous_brand: brand("previous_brand", field(2))?,
            previous_purchase: date("previous_date", field(3))?,
            intended_brand: brand("intended_brand", field(4))?,
            covariates,
        });
    }
    Ok(out)
}

/// Writes respondents in the input schema using canonical labels.
pub fn write_survey<W: Write>(
    out: W,
    respondents: &[Respondent],
    catalog: &BrandCatalog,
    header_lines: &[String],
) -> Result<()> {
    let mut out = out;
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(SURVEY_COLUMNS)?;
    let label = |b: Option<BrandId>| b.map(|b| catalog.label(b).to_string()).unwrap_or_default();
    for r in respondents {
        let c = r.covariates;
        w.write_record([
            catalog.label(r.current_brand).to_string(),
            r.current_purchase.to_string(),
            label(r.previous_brand),
            r.previous_purchase.to_string(),
            label(r.intended_brand),
            AGE_GROUPS[c.agegr as usize - 1].to_string(),
            GENDERS[c.gender as usize - 1].to_string(),
            INCOME_GROUPS[c.incomegr as usize - 1].to_string(),
            REGIONS[c.region as usize - 1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
