use std::fmt;

use super::brand::BrandId;
use super::covariates::AGE_GROUPS;
use super::dataset::Customer;
use crate::error::{Error, Result};

/// Finnish population per age group (15-24 .. 65-79), used when no strata
/// table is configured.
pub const DEFAULT_AGE_POPULATION: [f64; 6] = [
    656_000.0, 656_000.0, 656_000.0, 738_000.0, 738_000.0, 697_000.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StratumKey {
    /// Single stratum covering the whole population.
    Whole,
    AgeGroup(u8),
    AgeBrand(u8, BrandId),
}

impl StratumKey {
    pub fn agegr(&self) -> Option<u8> {
        match *self {
            StratumKey::Whole => None,
            StratumKey::AgeGroup(a) | StratumKey::AgeBrand(a, _) => Some(a),
        }
    }
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratumKey::Whole => write!(f, "all"),
            StratumKey::AgeGroup(a) => write!(f, "agegr={}", AGE_GROUPS[*a as usize - 1]),
            StratumKey::AgeBrand(a, b) => {
                write!(f, "agegr={} brand={b}", AGE_GROUPS[*a as usize - 1])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub key: StratumKey,
    pub population_count: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationStrata {
    strata: Vec<Stratum>,
}

impl PopulationStrata {
    /// Age-group strata with sample counts tallied from `customers`.
    ///
    /// `population[h - 1]` is the population of age group `h`.
    pub fn by_agegr(population: &[f64], customers: &[Customer]) -> Result<Self> {
        if population.len() != AGE_GROUPS.len() {
            return Err(Error::invalid(format!(
                "expected {} age-group population counts, got {}",
                AGE_GROUPS.len(),
                population.len()
            )));
        }
        let mut strata: Vec<Stratum> = population
            .iter()
            .enumerate()
            .map(|(h, &p)| Stratum {
                key: StratumKey::AgeGroup(h as u8 + 1),
                population_count: p,
                sample_count: 0,
            })
            .collect();
        for c in customers {
            strata[c.covariates.agegr as usize - 1].sample_count += 1;
        }
        Self::new(strata)
    }

    /// One stratum of `population` individuals represented by `sample_count`
    /// sampled ones.
    pub fn whole(population: f64, sample_count: usize) -> Result<Self> {
        Self::new(vec![Stratum {
            key: StratumKey::Whole,
            population_count: population,
            sample_count,
        }])
    }

    pub fn new(strata: Vec<Stratum>) -> Result<Self> {
        for s in &strata {
            if !(s.population_count > 0.0 && s.population_count.is_finite()) {
                return Err(Error::invalid(format!(
                    "population count for {} must be positive, got {}",
                    s.key, s.population_count
                )));
            }
        }
        Ok(Self { strata })
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn get(&self, key: StratumKey) -> Option<&Stratum> {
        self.strata.iter().find(|s| s.key == key)
    }

    pub fn sample_total(&self) -> usize {
        self.strata.iter().map(|s| s.sample_count).sum()
    }

    /// Same strata with every population count multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.strata
                .iter()
                .map(|s| Stratum {
                    population_count: s.population_count * factor,
                    ..s.clone()
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::{Covariates, ElapsedBounds};

    fn customer(agegr: u8) -> Customer {
        Customer {
            respondent: 0,
            covariates: Covariates::new(agegr, 1, 1, 1).unwrap(),
            current_brand: BrandId(1),
            elapsed: ElapsedBounds {
                earliest: 0.0,
                latest: 1.0,
            },
        }
    }

    #[test]
    fn sample_counts_sum_to_survey_size() {
        let cs: Vec<_> = [1, 1, 3, 6, 6, 6].into_iter().map(customer).collect();
        let s = PopulationStrata::by_agegr(&DEFAULT_AGE_POPULATION, &cs).unwrap();
        assert_eq!(s.sample_total(), cs.len());
        assert_eq!(s.get(StratumKey::AgeGroup(6)).unwrap().sample_count, 3);
    }

    #[test]
    fn nonpositive_population_rejected() {
        let mut pop = DEFAULT_AGE_POPULATION;
        pop[2] = 0.0;
        assert!(PopulationStrata::by_agegr(&pop, &[]).is_err());
        assert!(PopulationStrata::by_agegr(&pop[..3], &[]).is_err());
    }
}
