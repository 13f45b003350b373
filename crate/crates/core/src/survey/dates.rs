//! Recalled purchase dates and the interval censoring they induce.
//!
//! Elapsed time is measured in months back from the end of the survey month:
//! a purchase in calendar month `m` lies between `S - m` and `S - m + 1`
//! months before a survey held in month `S`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper cap on any purchase interval, in months.
pub const MAX_INTERVAL_MONTHS: f64 = 200.0;
/// Width kept when clamping collapses an interval to a point, in months.
pub const ZERO_WIDTH_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    Month,
    Season,
    Year,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Season {
    Winter,
    Spring,
    Summer,
    Autumn,
}

impl Season {
    /// Months covered, as `(first, last)` relative to January of the season's
    /// year; winter starts in the previous December (offset -1).
    fn month_offsets(self) -> (i64, i64) {
        match self {
            Season::Winter => (-1, 1),
            Season::Spring => (2, 4),
            Season::Summer => (5, 7),
            Season::Autumn => (8, 10),
        }
    }

    fn code(self) -> char {
        match self {
            Season::Winter => 'W',
            Season::Spring => 'P',
            Season::Summer => 'S',
            Season::Autumn => 'A',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'W' => Some(Season::Winter),
            'P' => Some(Season::Spring),
            'S' => Some(Season::Summer),
            'A' => Some(Season::Autumn),
            _ => None,
        }
    }

    pub fn of_month(month: u8) -> Self {
        match month {
            12 | 1 | 2 => Season::Winter,
            3..=5 => Season::Spring,
            6..=8 => Season::Summer,
            _ => Season::Autumn,
        }
    }
}

/// A calendar month, e.g. the survey date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::invalid(format!("month {month} outside 1..=12")));
        }
        Ok(Self { year, month })
    }

    /// Absolute month counter.
    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_index(index: i64) -> Self {
        Self {
            year: index.div_euclid(12) as i32,
            month: (index.rem_euclid(12) + 1) as u8,
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("expected YYYY-MM, got {s:?}")))?;
        let year = y
            .parse()
            .map_err(|_| Error::invalid(format!("bad year in {s:?}")))?;
        let month = m
            .parse()
            .map_err(|_| Error::invalid(format!("bad month in {s:?}")))?;
        YearMonth::new(year, month)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateAnswer {
    pub granularity: Granularity,
    pub year: Option<i32>,
    pub month: Option<u8>,
    pub season: Option<Season>,
}

impl DateAnswer {
    pub fn month(year: i32, month: u8) -> Self {
        Self {
            granularity: Granularity::Month,
            year: Some(year),
            month: Some(month),
            season: None,
        }
    }

    pub fn season(year: i32, season: Season) -> Self {
        Self {
            granularity: Granularity::Season,
            year: Some(year),
            month: None,
            season: Some(season),
        }
    }

    pub fn year(year: i32) -> Self {
        Self {
            granularity: Granularity::Year,
            year: Some(year),
            month: None,
            season: None,
        }
    }

    pub fn unknown() -> Self {
        Self {
            granularity: Granularity::Unknown,
            year: None,
            month: None,
            season: None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        self.granularity == Granularity::Unknown
    }

    /// Coarsens a known month to the requested granularity.
    pub fn coarsen(month: YearMonth, granularity: Granularity) -> Self {
        match granularity {
            Granularity::Month => Self::month(month.year, month.month),
            Granularity::Season => {
                let season = Season::of_month(month.month);
                let year = if month.month == 12 {
                    month.year + 1
                } else {
                    month.year
                };
                Self::season(year, season)
            }
            Granularity::Year => Self::year(month.year),
            Granularity::Unknown => Self::unknown(),
        }
    }

    /// Absolute month indices `(first, last)` the answer can refer to.
    pub fn month_window(&self) -> Option<(i64, i64)> {
        let year = self.year? as i64;
        let jan = year * 12;
        match self.granularity {
            Granularity::Month => {
                let m = jan + self.month? as i64 - 1;
                Some((m, m))
            }
            Granularity::Season => {
                let (a, b) = self.season?.month_offsets();
                Some((jan + a, jan + b))
            }
            Granularity::Year => Some((jan, jan + 11)),
            Granularity::Unknown => None,
        }
    }
}

impl fmt::Display for DateAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.granularity, self.year, self.month, self.season) {
            (Granularity::Month, Some(y), Some(m), _) => write!(f, "{y:04}-{m:02}"),
            (Granularity::Season, Some(y), _, Some(s)) => write!(f, "{y:04}-Q{}", s.code()),
            (Granularity::Year, Some(y), _, _) => write!(f, "{y:04}-??"),
            _ => write!(f, "??"),
        }
    }
}

impl FromStr for DateAnswer {
    type Err = String;

    /// Accepts `YYYY-MM`, `YYYY-Qs` (s in W/P/S/A), `YYYY-??` and `??`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s == "??" || s.is_empty() {
            return Ok(Self::unknown());
        }
        let (y, rest) = s
            .split_once('-')
            .ok_or_else(|| format!("unrecognised date {s:?}"))?;
        let year: i32 = y.parse().map_err(|_| format!("bad year in {s:?}"))?;
        if !(1900..=2999).contains(&year) {
            return Err(format!("implausible year in {s:?}"));
        }
        if rest == "??" {
            return Ok(Self::year(year));
        }
        if let Some(code) = rest.strip_prefix('Q').or_else(|| rest.strip_prefix('q')) {
            let mut chars = code.chars();
            return match (chars.next().and_then(Season::from_code), chars.next()) {
                (Some(season), None) => Ok(Self::season(year, season)),
                _ => Err(format!("bad season code in {s:?}")),
            };
        }
        let month: u8 = rest.parse().map_err(|_| format!("bad month in {s:?}"))?;
        if !(1..=12).contains(&month) {
            return Err(format!("month out of range in {s:?}"));
        }
        Ok(Self::month(year, month))
    }
}

/// Elapsed-time window of a purchase, in months before the survey.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElapsedBounds {
    pub earliest: f64,
    pub latest: f64,
}

impl ElapsedBounds {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.earliest + self.latest)
    }
}

/// Months-before-survey window implied by a recalled date.
///
/// Unknown dates span `[0, 200]`. Windows that straddle the survey month are
/// cut at the survey; windows entirely after it are an error.
pub fn date_bounds(answer: &DateAnswer, survey: YearMonth) -> Result<ElapsedBounds> {
    let Some((first, last)) = answer.month_window() else {
        return Ok(ElapsedBounds {
            earliest: 0.0,
            latest: MAX_INTERVAL_MONTHS,
        });
    };
    let s = survey.index();
    if first > s {
        return Err(Error::FutureDate {
            date: answer.to_string(),
            survey: survey.to_string(),
        });
    }
    let last = last.min(s);
    Ok(ElapsedBounds {
        earliest: (s - last) as f64,
        latest: (s - first + 1) as f64,
    })
}

/// Bounds on a purchase interval, in months.
///
/// `t_max` is `+inf` for right-censored (backward recurrence) intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoredInterval {
    t_min: f64,
    t_max: f64,
}

impl CensoredInterval {
    pub fn new(t_min: f64, t_max: f64) -> Result<Self> {
        let ok = t_min >= 0.0
            && t_min <= t_max
            && (t_max <= MAX_INTERVAL_MONTHS || t_max == f64::INFINITY)
            && t_max > 0.0;
        if !ok {
            return Err(Error::invalid(format!(
                "censored interval [{t_min}, {t_max}] violates 0 <= t_min <= t_max <= {MAX_INTERVAL_MONTHS}"
            )));
        }
        Ok(Self { t_min, t_max })
    }

    pub fn right_censored(t_min: f64) -> Result<Self> {
        if !(t_min >= 0.0 && t_min.is_finite()) {
            return Err(Error::invalid(format!(
                "right-censored t_min {t_min} must be finite and >= 0"
            )));
        }
        Ok(Self {
            t_min,
            t_max: f64::INFINITY,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn is_right_censored(&self) -> bool {
        self.t_max.is_infinite()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltInterval {
    pub interval: CensoredInterval,
    /// Inconsistent answers had to be clamped to produce a valid interval.
    pub clamped: bool,
}

/// Purchase-interval bounds from the recalled current and previous purchase
/// dates.
///
/// With calendar-month windows `[c_first, c_last]` and `[p_first, p_last]` the
/// interval spans `c_first - p_last ..= c_last - p_first` whole months. An
/// unknown previous date yields the 200-month cap. Two purchases in the same
/// month give `[0, 1]`; other point intervals keep a width of
/// [`ZERO_WIDTH_EPS`].
pub fn build_interval(
    current: &DateAnswer,
    previous: &DateAnswer,
    survey: YearMonth,
) -> Result<BuiltInterval> {
    let cur = date_bounds(current, survey)?;
    let prev = date_bounds(previous, survey)?;
    let raw_min = prev.earliest - cur.latest + 1.0;
    let raw_max = if previous.is_unknown() {
        MAX_INTERVAL_MONTHS
    } else {
        prev.latest - cur.earliest - 1.0
    };

    let mut clamped = raw_max < 0.0;
    let mut t_min = raw_min.max(0.0);
    let mut t_max = raw_max.min(MAX_INTERVAL_MONTHS);
    if t_min >= MAX_INTERVAL_MONTHS {
        clamped = true;
        t_min = MAX_INTERVAL_MONTHS;
        t_max = MAX_INTERVAL_MONTHS;
    }
    if t_max < t_min {
        clamped = true;
        t_max = t_min;
    }
    if t_max <= 0.0 {
        t_max = 1.0;
    } else if t_max == t_min {
        t_min = t_max - ZERO_WIDTH_EPS;
    }
    Ok(BuiltInterval {
        interval: CensoredInterval::new(t_min, t_max)?,
        clamped,
    })
}
