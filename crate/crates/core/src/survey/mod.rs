//! Survey answers, recalled-date censoring and the model-ready dataset.

mod brand;
mod covariates;
mod dataset;
mod dates;
mod parse;
mod strata;

pub use brand::{Brand, BrandCatalog, BrandId, OTHER_LABEL};
pub use covariates::{
    parse_agegr, parse_gender, parse_incomegr, parse_region, Covariates, AGE_GROUPS, GENDERS,
    INCOME_GROUPS, REGIONS,
};
pub use dataset::{
    build_dataset, read_dataset, write_dataset, BuildReport, Customer, ModelDataset, RecordSource,
    TransitionRecord, Variant,
};
pub use dates::{
    build_interval, date_bounds, BuiltInterval, CensoredInterval, DateAnswer, ElapsedBounds,
    Granularity, Season, YearMonth, MAX_INTERVAL_MONTHS, ZERO_WIDTH_EPS,
};
pub use parse::{parse_survey, write_survey, Respondent, SURVEY_COLUMNS};
pub use strata::{PopulationStrata, Stratum, StratumKey, DEFAULT_AGE_POPULATION};
