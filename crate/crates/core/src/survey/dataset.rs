//! Model-ready transition records and their canonical text format.
//!
//! The canonical file is CSV preceded by `#` metadata lines:
//!
//! ```text
//! # survey-clv dataset v1
//! # brands=Nokia|Apple|Samsung|Other
//! # variant=historical
//! # survey_date=2013-02
//! # clamped=0 dropped=19 unknown_current_date=37
//! kind,respondent,source,t_min,t_max,prev_brand,agegr,gender,incomegr,region,repurchase,new_brand,elapsed_lo,elapsed_hi,current_brand
//! R,0,historical,18,29,1,3,1,2,3,1,,,,
//! C,0,,,,,3,1,2,3,,,8,9,1
//! ```
//!
//! `R` lines are transition records (retained, then churned, then
//! interval-only); `C` lines are the surveyed customers. Times are months,
//! `inf` marks a right-censored interval, and floats use the shortest
//! representation that parses back to the same bits.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use super::brand::{BrandCatalog, BrandId};
use super::covariates::Covariates;
use super::dates::{build_interval, date_bounds, CensoredInterval, ElapsedBounds, YearMonth};
use super::parse::Respondent;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Historical,
    Intended,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Historical => "historical",
            Variant::Intended => "intended",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "historical" => Ok(Variant::Historical),
            "intended" => Ok(Variant::Intended),
            other => Err(Error::invalid(format!(
                "variant must be `historical` or `intended`, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordSource {
    /// Observed previous → current transition.
    Historical,
    /// Current → intended transition with a right-censored interval.
    Intended,
    /// Interval known but no usable transition.
    IntervalOnly,
}

impl RecordSource {
    fn as_str(self) -> &'static str {
        match self {
            RecordSource::Historical => "historical",
            RecordSource::Intended => "intended",
            RecordSource::IntervalOnly => "interval",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "historical" => Some(RecordSource::Historical),
            "intended" => Some(RecordSource::Intended),
            "interval" => Some(RecordSource::IntervalOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub respondent: usize,
    pub source: RecordSource,
    pub interval: CensoredInterval,
    pub covariates: Covariates,
    /// Brand held during the interval; the dynamic brand covariate.
    pub prev_brand: BrandId,
    /// Present iff the record is in the retained or churned block.
    pub repurchase: Option<bool>,
    /// Present iff `repurchase == Some(false)`.
    pub new_brand: Option<BrandId>,
}

impl TransitionRecord {
    /// Brand held after the transition, when one is recorded.
    pub fn next_brand(&self) -> Option<BrandId> {
        match self.repurchase {
            Some(true) => Some(self.prev_brand),
            Some(false) => self.new_brand,
            None => None,
        }
    }
}

/// A surveyed individual as seen at the survey date.
#[derive(Debug, Clone, PartialEq)]
pub struct Customer {
    pub respondent: usize,
    pub covariates: Covariates,
    pub current_brand: BrandId,
    /// Months since the current purchase.
    pub elapsed: ElapsedBounds,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildReport {
    /// Intervals produced by clamping inconsistent answers.
    pub clamped: usize,
    /// Respondents with neither a previous brand nor a previous date.
    pub dropped: usize,
    /// Respondents whose current purchase date is fully unknown.
    pub unknown_current_date: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDataset {
    pub brands: Vec<String>,
    pub variant: Variant,
    pub survey_date: YearMonth,
    pub records: Vec<TransitionRecord>,
    pub n_retained: usize,
    pub n_churned: usize,
    pub n_interval_only: usize,
    pub customers: Vec<Customer>,
    pub report: BuildReport,
}

impl ModelDataset {
    pub fn catalog(&self) -> BrandCatalog {
        BrandCatalog::new(&self.brands).expect("dataset brands were validated")
    }

    pub fn n_brands(&self) -> usize {
        self.brands.len()
    }

    pub fn retained(&self) -> &[TransitionRecord] {
        &self.records[..self.n_retained]
    }

    pub fn churned(&self) -> &[TransitionRecord] {
        &self.records[self.n_retained..self.n_retained + self.n_churned]
    }

    pub fn transitions(&self) -> &[TransitionRecord] {
        &self.records[..self.n_retained + self.n_churned]
    }

    pub fn interval_only(&self) -> &[TransitionRecord] {
        &self.records[self.n_retained + self.n_churned..]
    }
}

/// Builds the model dataset for the chosen variant.
///
/// Respondents without a previous brand contribute an interval-only record
/// when their previous purchase date was recalled at all, using the catalog's
/// "Other" brand (or their current brand) as the brand covariate; otherwise
/// they are dropped and counted in the report.
pub fn build_dataset(
    respondents: &[Respondent],
    variant: Variant,
    survey_date: YearMonth,
    catalog: &BrandCatalog,
) -> Result<ModelDataset> {
    if respondents.is_empty() {
        return Err(Error::Validation(
            "no respondents to build a dataset from".into(),
        ));
    }
    if variant == Variant::Intended && respondents.iter().all(|r| r.intended_brand.is_none()) {
        return Err(Error::Validation(
            "intended variant requested but no respondent named an intended brand".into(),
        ));
    }

    let mut report = BuildReport::default();
    let mut retained = Vec::new();
    let mut churned = Vec::new();
    let mut interval_only = Vec::new();
    let mut customers = Vec::with_capacity(respondents.len());

    for (i, r) in respondents.iter().enumerate() {
        let elapsed = date_bounds(&r.current_purchase, survey_date)?;
        if r.current_purchase.is_unknown() {
            report.unknown_current_date += 1;
        }
        customers.push(Customer {
            respondent: i,
            covariates: r.covariates,
            current_brand: r.current_brand,
            elapsed,
        });

        match r.previous_brand {
            Some(prev) => {
                let built = build_interval(&r.current_purchase, &r.previous_purchase, survey_date)?;
                report.clamped += built.clamped as usize;
                let repurchase = prev == r.current_brand;
                let rec = TransitionRecord {
                    respondent: i,
                    source: RecordSource::Historical,
                    interval: built.interval,
                    covariates: r.covariates,
                    prev_brand: prev,
                    repurchase: Some(repurchase),
                    new_brand: (!repurchase).then_some(r.current_brand),
                };
                if repurchase {
                    retained.push(rec);
                } else {
                    churned.push(rec);
                }
            }
            None if !r.previous_purchase.is_unknown() => {
                let built = build_interval(&r.current_purchase, &r.previous_purchase, survey_date)?;
                report.clamped += built.clamped as usize;
                interval_only.push(TransitionRecord {
                    respondent: i,
                    source: RecordSource::IntervalOnly,
                    interval: built.interval,
                    covariates: r.covariates,
                    prev_brand: catalog.other().unwrap_or(r.current_brand),
                    repurchase: None,
                    new_brand: None,
                });
            }
            None => report.dropped += 1,
        }

        if variant == Variant::Intended {
            if let Some(intended) = r.intended_brand {
                let repurchase = intended == r.current_brand;
                let rec = TransitionRecord {
                    respondent: i,
                    source: RecordSource::Intended,
                    interval: CensoredInterval::right_censored(elapsed.earliest)?,
                    covariates: r.covariates,
                    prev_brand: r.current_brand,
                    repurchase: Some(repurchase),
                    new_brand: (!repurchase).then_some(intended),
                };
                if repurchase {
                    retained.push(rec);
                } else {
                    churned.push(rec);
                }
            }
        }
    }

    let (n_retained, n_churned, n_interval_only) =
        (retained.len(), churned.len(), interval_only.len());
    let mut records = retained;
    records.extend(churned);
    records.extend(interval_only);
    Ok(ModelDataset {
        brands: catalog.labels(),
        variant,
        survey_date,
        records,
        n_retained,
        n_churned,
        n_interval_only,
        customers,
        report,
    })
}

const DATASET_COLUMNS: [&str; 15] = [
    "kind",
    "respondent",
    "source",
    "t_min",
    "t_max",
    "prev_brand",
    "agegr",
    "gender",
    "incomegr",
    "region",
    "repurchase",
    "new_brand",
    "elapsed_lo",
    "elapsed_hi",
    "current_brand",
];

/// Writes the canonical dataset file. `header_lines` are emitted first as
/// `#` comments (e.g. provenance).
pub fn write_dataset<W: Write>(out: W, data: &ModelDataset, header_lines: &[String]) -> Result<()> {
    let mut out = out;
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "# survey-clv dataset v1")?;
    writeln!(out, "# brands={}", data.brands.join("|"))?;
    writeln!(out, "# variant={}", data.variant)?;
    writeln!(out, "# survey_date={}", data.survey_date)?;
    writeln!(
        out,
        "# clamped={} dropped={} unknown_current_date={}",
        data.report.clamped, data.report.dropped, data.report.unknown_current_date
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_COLUMNS)?;
    for r in &data.records {
        let c = r.covariates;
        w.write_record([
            "R".to_string(),
            r.respondent.to_string(),
            r.source.as_str().to_string(),
            r.interval.t_min().to_string(),
            r.interval.t_max().to_string(),
            r.prev_brand.to_string(),
            c.agegr.to_string(),
            c.gender.to_string(),
            c.incomegr.to_string(),
            c.region.to_string(),
            r.repurchase
                .map(|b| (b as u8).to_string())
                .unwrap_or_default(),
            r.new_brand.map(|b| b.to_string()).unwrap_or_default(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    for cu in &data.customers {
        let c = cu.covariates;
        w.write_record([
            "C".to_string(),
            cu.respondent.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            c.agegr.to_string(),
            c.gender.to_string(),
            c.incomegr.to_string(),
            c.region.to_string(),
            String::new(),
            String::new(),
            cu.elapsed.earliest.to_string(),
            cu.elapsed.latest.to_string(),
            cu.current_brand.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<ModelDataset> {
    let mut lines = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if let Some(meta) = line.strip_prefix('#') {
            lines.push(meta.trim().to_string());
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let meta = |key: &str| -> Result<String> {
        lines
            .iter()
            .flat_map(|l| l.split_whitespace())
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .map(str::to_string)
            .ok_or_else(|| Error::Validation(format!("dataset file lacks `{key}` metadata")))
    };
    let brands_line = lines
        .iter()
        .find_map(|l| l.strip_prefix("brands="))
        .ok_or_else(|| Error::Validation("dataset file lacks `brands` metadata".into()))?;
    let brands: Vec<String> = brands_line.split('|').map(str::to_string).collect();
    let catalog = BrandCatalog::new(&brands)?;
    let variant: Variant = meta("variant")?.parse()?;
    let survey_date: YearMonth = meta("survey_date")?.parse()?;
    let num = |k: &str| -> Result<usize> {
        meta(k)?
            .parse()
            .map_err(|_| Error::Validation(format!("bad `{k}` metadata")))
    };
    let report = BuildReport {
        clamped: num("clamped")?,
        dropped: num("dropped")?,
        unknown_current_date: num("unknown_current_date")?,
    };

    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let mut records = Vec::new();
    let mut customers = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |what: &str| Error::MalformedRow {
            row: line,
            message: format!("bad {what}"),
        };
        let f = |k: usize| row.get(k).unwrap_or("");
        let float = |k: usize, what: &str| f(k).parse::<f64>().map_err(|_| bad(what));
        let uint = |k: usize, what: &str| f(k).parse::<usize>().map_err(|_| bad(what));
        let brand = |k: usize, what: &str| -> Result<BrandId> {
            let b = uint(k, what)?;
            if b == 0 || b > catalog.len() {
                return Err(bad(what));
            }
            Ok(BrandId(b))
        };
        let covariates = Covariates::new(
            uint(6, "agegr")? as u8,
            uint(7, "gender")? as u8,
            uint(8, "incomegr")? as u8,
            uint(9, "region")? as u8,
        )
        .ok_or_else(|| bad("covariates"))?;
        let respondent = uint(1, "respondent")?;
        match f(0) {
            "R" => {
                let source = RecordSource::parse(f(2)).ok_or_else(|| bad("source"))?;
                let t_min = float(3, "t_min")?;
                let t_max = float(4, "t_max")?;
                let interval = if t_max.is_infinite() {
                    CensoredInterval::right_censored(t_min)?
                } else {
                    CensoredInterval::new(t_min, t_max)?
                };
                let repurchase = match f(10) {
                    "" => None,
                    "1" => Some(true),
                    "0" => Some(false),
                    _ => return Err(bad("repurchase")),
                };
                let new_brand = match f(11) {
                    "" => None,
                    _ => Some(brand(11, "new_brand")?),
                };
                records.push(TransitionRecord {
                    respondent,
                    source,
                    interval,
                    covariates,
                    prev_brand: brand(5, "prev_brand")?,
                    repurchase,
                    new_brand,
                });
            }
            "C" => customers.push(Customer {
                respondent,
                covariates,
                current_brand: brand(14, "current_brand")?,
                elapsed: ElapsedBounds {
                    earliest: float(12, "elapsed_lo")?,
                    latest: float(13, "elapsed_hi")?,
                },
            }),
            _ => return Err(bad("kind")),
        }
    }

    let n_retained = records
        .iter()
        .take_while(|r| r.repurchase == Some(true))
        .count();
    let n_churned = records[n_retained..]
        .iter()
        .take_while(|r| r.repurchase == Some(false))
        .count();
    let n_interval_only = records.len() - n_retained - n_churned;
    if records[n_retained + n_churned..]
        .iter()
        .any(|r| r.repurchase.is_some())
    {
        return Err(Error::Validation(
            "dataset records are not ordered retained, churned, interval-only".into(),
        ));
    }
    Ok(ModelDataset {
        brands,
        variant,
        survey_date,
        records,
        n_retained,
        n_churned,
        n_interval_only,
        customers,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::DateAnswer;

    fn feb2013() -> YearMonth {
        YearMonth::new(2013, 2).unwrap()
    }

    fn respondent(cur: usize, prev: Option<usize>, intended: Option<usize>) -> Respondent {
        Respondent {
            current_brand: BrandId(cur),
            previous_brand: prev.map(BrandId),
            intended_brand: intended.map(BrandId),
            current_purchase: DateAnswer::month(2012, 3),
            previous_purchase: DateAnswer::year(2010),
            covariates: Covariates::REFERENCE,
        }
    }

    #[test]
    fn retained_record() {
        let d = build_dataset(
            &[respondent(1, Some(1), None)],
            Variant::Historical,
            feb2013(),
            &BrandCatalog::mobile_default(),
        )
        .unwrap();
        assert_eq!(d.n_retained, 1);
        assert_eq!(d.records[0].repurchase, Some(true));
        assert_eq!(d.records[0].new_brand, None);
    }

    #[test]
    fn intended_record_is_right_censored() {
        let mut r = respondent(1, Some(1), Some(3));
        r.current_purchase = DateAnswer::month(2012, 4);
        let d = build_dataset(
            &[r],
            Variant::Intended,
            feb2013(),
            &BrandCatalog::mobile_default(),
        )
        .unwrap();
        let rec = d
            .records
            .iter()
            .find(|r| r.source == RecordSource::Intended)
            .unwrap();
        assert_eq!(rec.interval.t_min(), 10.0);
        assert!(rec.interval.t_max().is_infinite());
        assert_eq!(rec.repurchase, Some(false));
        assert_eq!(rec.new_brand, Some(BrandId(3)));
        assert_eq!(rec.prev_brand, BrandId(1));
        // the historical record is kept alongside
        assert_eq!(d.records.len(), 2);
    }

    #[test]
    fn intended_without_answers_is_error() {
        let err = build_dataset(
            &[respondent(1, Some(1), None)],
            Variant::Intended,
            feb2013(),
            &BrandCatalog::mobile_default(),
        );
        assert!(err.is_err());
        assert!(build_dataset(
            &[],
            Variant::Historical,
            feb2013(),
            &BrandCatalog::mobile_default()
        )
        .is_err());
    }

    #[test]
    fn missing_previous_brand_routing() {
        let mut informative = respondent(2, None, None);
        informative.previous_purchase = DateAnswer::year(2009);
        let mut blank = respondent(2, None, None);
        blank.previous_purchase = DateAnswer::unknown();
        let d = build_dataset(
            &[respondent(1, Some(2), None), informative, blank],
            Variant::Historical,
            feb2013(),
            &BrandCatalog::mobile_default(),
        )
        .unwrap();
        assert_eq!((d.n_retained, d.n_churned, d.n_interval_only), (0, 1, 1));
        assert_eq!(d.report.dropped, 1);
        assert_eq!(d.interval_only()[0].prev_brand, BrandId(4));
        assert_eq!(d.customers.len(), 3);
    }

    #[test]
    fn canonical_roundtrip() {
        let d = build_dataset(
            &[
                respondent(1, Some(1), Some(2)),
                respondent(3, Some(1), Some(3)),
                respondent(2, Some(2), None),
            ],
            Variant::Intended,
            feb2013(),
            &BrandCatalog::mobile_default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d, &["provenance".into()]).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }
}
