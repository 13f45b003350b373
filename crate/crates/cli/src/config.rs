//! Run configuration.
//!
//! The file is TOML: top-level keys followed by optional sections, every key
//! optional and defaulted. Unknown keys are rejected.
//!
//! ```toml
//! model = "semimarkov"          # or "mobile"
//! seed = 1
//! out_dir = "out"
//!
//! [data]
//! survey = "out/survey.csv"     # default: <out_dir>/survey.csv
//! draws = "out/draws.csv"       # default: <out_dir>/draws.csv
//!
//! [generator]                   # semimarkov population and survey
//! population = 100000
//! sample = 1000
//! gamma = 3.0
//! delta = 10.0
//! p_shape = [4.0, 6.0]
//! q_shape = [4.0, 6.0]
//! past_years = 30.0
//! future_years = 40.0
//!
//! [mobile]
//! brands = ["Nokia", "Apple", "Samsung", "Other"]
//! survey_date = "2013-02"
//! variant = "historical"        # or "intended"
//! respondents = 536             # synthetic survey size
//! month_exact = false           # synthetic answers recalled to the month
//! generator_kappa = 1.53        # synthetic interval shape, mean held fixed
//! fixed_kappa = 1.0             # hold the shape fixed while fitting
//! weight_blocks = "age_group"   # or "entry"
//!
//! [chains]
//! chains = 3
//! burnin = 3000
//! keep = 3000
//! thin = 1
//! target_accept = 0.35
//! strict = true
//! export_per_chain = 700
//!
//! [revenue]
//! asp = [68.0, 473.0, 178.0, 100.0]   # mobile, per brand
//! value_per_purchase = 100.0          # semimarkov, focal purchases
//! annual_discount = 0.10
//! horizon_months = 60.0               # default 60 mobile, 480 semimarkov
//! histories = 2000
//!
//! [strata]
//! age_population = [656000.0, 656000.0, 656000.0, 738000.0, 738000.0, 697000.0]
//!
//! [diagnose]
//! realizations = 100
//! grid_step_months = 2.0
//! grid_max_months = 198.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use survey_clv::clv::{RevenueSpec, DEFAULT_HISTORIES, DEFAULT_OTHER_ASP};
use survey_clv::mcmc::ChainConfig;
use survey_clv::mobile::{MobileFitOptions, WeightUpdate};
use survey_clv::semimarkov::GeneratorConfig;
use survey_clv::survey::{BrandCatalog, Variant, YearMonth, DEFAULT_AGE_POPULATION};

use crate::error::{io_error, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mobile,
    Semimarkov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightBlocks {
    AgeGroup,
    Entry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataSection,
    pub generator: GeneratorSection,
    pub mobile: MobileSection,
    pub chains: ChainSection,
    pub revenue: RevenueSection,
    pub strata: StrataSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Semimarkov,
            seed: 1,
            out_dir: PathBuf::from("out"),
            data: DataSection::default(),
            generator: GeneratorSection::default(),
            mobile: MobileSection::default(),
            chains: ChainSection::default(),
            revenue: RevenueSection::default(),
            strata: StrataSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub survey: Option<PathBuf>,
    pub draws: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub population: usize,
    pub sample: usize,
    pub gamma: f64,
    pub delta: f64,
    pub p_shape: [f64; 2],
    pub q_shape: [f64; 2],
    pub past_years: f64,
    pub future_years: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            population: 100_000,
            sample: 1000,
            gamma: g.gamma,
            delta: g.delta,
            p_shape: [g.p_shape.0, g.p_shape.1],
            q_shape: [g.q_shape.0, g.q_shape.1],
            past_years: g.past_years,
            future_years: g.future_years,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobileSection {
    pub brands: Vec<String>,
    pub survey_date: String,
    pub variant: String,
    pub respondents: usize,
    pub month_exact: bool,
    pub generator_kappa: Option<f64>,
    pub fixed_kappa: Option<f64>,
    pub weight_blocks: WeightBlocks,
}

impl Default for MobileSection {
    fn default() -> Self {
        Self {
            brands: BrandCatalog::mobile_default().labels(),
            survey_date: "2013-02".into(),
            variant: "historical".into(),
            respondents: 536,
            month_exact: false,
            generator_kappa: None,
            fixed_kappa: None,
            weight_blocks: WeightBlocks::AgeGroup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub chains: usize,
    pub burnin: usize,
    pub keep: usize,
    pub thin: usize,
    pub target_accept: f64,
    pub strict: bool,
    /// Draws per chain written to the draws file (evenly thinned).
    pub export_per_chain: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainConfig::default();
        Self {
            chains: c.n_chains,
            burnin: c.burn_in,
            keep: c.keep,
            thin: c.thin,
            target_accept: c.target_accept,
            strict: true,
            export_per_chain: 700,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevenueSection {
    pub asp: Vec<f64>,
    pub value_per_purchase: f64,
    pub annual_discount: f64,
    pub horizon_months: Option<f64>,
    pub histories: usize,
}

impl Default for RevenueSection {
    fn default() -> Self {
        Self {
            asp: vec![68.0, 473.0, 178.0, DEFAULT_OTHER_ASP],
            value_per_purchase: 100.0,
            annual_discount: 0.10,
            horizon_months: None,
            histories: DEFAULT_HISTORIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrataSection {
    pub age_population: Vec<f64>,
}

impl Default for StrataSection {
    fn default() -> Self {
        Self {
            age_population: DEFAULT_AGE_POPULATION.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseSection {
    pub realizations: usize,
    pub grid_step_months: f64,
    pub grid_max_months: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self {
            realizations: 100,
            grid_step_months: 2.0,
            grid_max_months: 198.0,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub chains: Option<usize>,
    pub keep: Option<usize>,
    pub burnin: Option<usize>,
    pub strict: Option<bool>,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.model {
            self.model = m;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(v) = o.variant {
            self.mobile.variant = v.as_str().into();
        }
        if let Some(c) = o.chains {
            self.chains.chains = c;
        }
        if let Some(k) = o.keep {
            self.chains.keep = k;
        }
        if let Some(b) = o.burnin {
            self.chains.burnin = b;
        }
        if let Some(s) = o.strict {
            self.chains.strict = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn survey_path(&self) -> PathBuf {
        self.data
            .survey
            .clone()
            .unwrap_or_else(|| self.out_dir.join("survey.csv"))
    }

    pub fn draws_path(&self) -> PathBuf {
        self.data
            .draws
            .clone()
            .unwrap_or_else(|| self.out_dir.join("draws.csv"))
    }

    pub fn variant(&self) -> Result<Variant> {
        self.mobile
            .variant
            .parse()
            .map_err(|e| CliError::Config(format!("{e}")))
    }

    pub fn survey_date(&self) -> Result<YearMonth> {
        let bad = || {
            CliError::Config(format!(
                "survey_date must be YYYY-MM, got {:?}",
                self.mobile.survey_date
            ))
        };
        let (y, m) = self.mobile.survey_date.split_once('-').ok_or_else(bad)?;
        let (y, m) = (y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?);
        YearMonth::new(y, m).map_err(|_| bad())
    }

    pub fn catalog(&self) -> Result<BrandCatalog> {
        BrandCatalog::new(&self.mobile.brands).map_err(|e| CliError::Config(format!("brands: {e}")))
    }

    pub fn chain_config(&self) -> Result<ChainConfig> {
        let c = &self.chains;
        let config = ChainConfig {
            n_chains: c.chains,
            burn_in: c.burnin,
            keep: c.keep,
            thin: c.thin,
            seed: self.seed,
            target_accept: c.target_accept,
        };
        config
            .validate()
            .map_err(|e| CliError::Config(format!("chains: {e}")))?;
        if c.export_per_chain == 0 {
            return Err(CliError::Config(
                "chains: export_per_chain must be at least 1".into(),
            ));
        }
        Ok(config)
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let g = &self.generator;
        GeneratorConfig {
            gamma: g.gamma,
            delta: g.delta,
            p_shape: (g.p_shape[0], g.p_shape[1]),
            q_shape: (g.q_shape[0], g.q_shape[1]),
            past_years: g.past_years,
            future_years: g.future_years,
        }
    }

    pub fn horizon_months(&self) -> f64 {
        self.revenue.horizon_months.unwrap_or(match self.model {
            ModelKind::Mobile => 60.0,
            ModelKind::Semimarkov => 480.0,
        })
    }

    pub fn mobile_revenue(&self) -> RevenueSpec {
        RevenueSpec {
            asp: self.revenue.asp.clone(),
            annual_discount: self.revenue.annual_discount,
            horizon_months: self.horizon_months(),
        }
    }

    pub fn fit_options(&self) -> MobileFitOptions {
        MobileFitOptions {
            fixed_kappa: self.mobile.fixed_kappa,
            weight_update: match self.mobile.weight_blocks {
                WeightBlocks::AgeGroup => WeightUpdate::PerAgeGroup,
                WeightBlocks::Entry => WeightUpdate::PerEntry,
            },
            ..MobileFitOptions::default()
        }
    }

    /// First line of every output file.
    pub fn provenance(&self) -> String {
        format!(
            "survey-clv {} seed={} config={}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.digest()
        )
    }
}
