use std::collections::BTreeMap;

use super::simulate::ClvSamples;
use crate::error::{Error, Result};
use crate::mcmc::{mean, quantile_sorted, Summary};
use crate::survey::{BrandId, PopulationStrata, StratumKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segmentation {
    /// Current customers of the brand against everyone else.
    Status,
    AgeGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Segment {
    /// `true` for current customers of the brand.
    Customer(bool),
    AgeGroup(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClvSummary {
    pub brand: BrandId,
    pub segment: Segment,
    pub n_individuals: usize,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Segment means of the CLV with 95% intervals over posterior draws.
///
/// For every draw the CLV is averaged over the individuals of the segment;
/// the reported mean and interval are taken over those per-draw averages.
/// Empty segments are skipped.
pub fn summarize_clv(
    samples: &ClvSamples,
    segmentation: Segmentation,
    current: &[BrandId],
    agegr: &[u8],
) -> Result<Vec<ClvSummary>> {
    let n = samples.n_individuals;
    if current.len() != n || (segmentation == Segmentation::AgeGroup && agegr.len() != n) {
        return Err(Error::invalid(
            "segment labels do not match the simulated individuals",
        ));
    }
    let mut out = Vec::new();
    for b in 0..samples.n_brands {
        let brand = BrandId::from_index(b);
        let mut groups: BTreeMap<Segment, Vec<usize>> = BTreeMap::new();
        for i in 0..n {
            let seg = match segmentation {
                Segmentation::Status => Segment::Customer(current[i] == brand),
                Segmentation::AgeGroup => Segment::AgeGroup(agegr[i]),
            };
            groups.entry(seg).or_default().push(i);
        }
        // customers first
        let mut keys: Vec<Segment> = groups.keys().copied().collect();
        if segmentation == Segmentation::Status {
            keys.reverse();
        }
        for seg in keys {
            let members = &groups[&seg];
            let per_draw: Vec<f64> = (0..samples.n_draws)
                .map(|d| {
                    members.iter().map(|&i| samples.get(d, i, b)).sum::<f64>()
                        / members.len() as f64
                })
                .collect();
            let s = Summary::of(&per_draw);
            out.push(ClvSummary {
                brand,
                segment: seg,
                n_individuals: members.len(),
                mean: s.mean,
                lo95: s.lo95,
                hi95: s.hi95,
            });
        }
    }
    Ok(out)
}

/// Spread of CLV values over individuals (and histories).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClvDistribution {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

impl ClvDistribution {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Validation("no CLV values to summarize".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            n: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            mean: mean(&v),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Distribution of the simulated CLVs of `individuals` for `brand`, pooled
/// over draws. With one history per draw every pooled value is the value of
/// a single simulated history.
pub fn clv_distribution(
    samples: &ClvSamples,
    individuals: &[usize],
    brand: BrandId,
) -> Result<ClvDistribution> {
    let values: Vec<f64> = (0..samples.n_draws)
        .flat_map(|d| {
            individuals
                .iter()
                .map(move |&i| samples.get(d, i, brand.index()))
        })
        .collect();
    ClvDistribution::of(&values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeSummary {
    pub brand: BrandId,
    /// `None` for the population total.
    pub stratum: Option<StratumKey>,
    pub mean: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Maps individuals to stratum positions, checking that every stratum with
/// population is represented in the sample.
fn assign(keys: &[StratumKey], strata: &PopulationStrata) -> Result<Vec<Vec<usize>>> {
    let mut members = vec![Vec::new(); strata.strata().len()];
    for (i, k) in keys.iter().enumerate() {
        let pos = strata
            .strata()
            .iter()
            .position(|s| s.key == *k)
            .ok_or_else(|| Error::MissingStratum(k.to_string()))?;
        members[pos].push(i);
    }
    if let Some(pos) = members.iter().position(Vec::is_empty) {
        return Err(Error::MissingStratum(format!(
            "{} (no sampled individuals)",
            strata.strata()[pos].key
        )));
    }
    Ok(members)
}

/// Customer equity per brand and draw, `[brand][draw]`: the sum over strata
/// of the stratum population times the stratum's mean CLV under that draw.
pub fn ce_by_draw(
    samples: &ClvSamples,
    keys: &[StratumKey],
    strata: &PopulationStrata,
) -> Result<Vec<Vec<f64>>> {
    Ok(ce_by_stratum(samples, keys, strata)?
        .into_iter()
        .map(|per_stratum| {
            (0..samples.n_draws)
                .map(|d| per_stratum.iter().map(|s| s[d]).sum())
                .collect()
        })
        .collect())
}

/// Contribution of every stratum to the customer equity under each draw,
/// `[brand][stratum][draw]`, strata in the order of `strata`.
pub fn ce_by_stratum(
    samples: &ClvSamples,
    keys: &[StratumKey],
    strata: &PopulationStrata,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if keys.len() != samples.n_individuals {
        return Err(Error::invalid(
            "stratum keys do not match the simulated individuals",
        ));
    }
    let members = assign(keys, strata)?;
    Ok((0..samples.n_brands)
        .map(|b| {
            members
                .iter()
                .zip(strata.strata())
                .map(|(m, s)| {
                    (0..samples.n_draws)
                        .map(|d| {
                            let avg = m.iter().map(|&i| samples.get(d, i, b)).sum::<f64>()
                                / m.len() as f64;
                            avg * s.population_count
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

/// Customer equity per brand, in total and per stratum, with 95% intervals
/// over posterior draws.
pub fn scale_to_population(
    samples: &ClvSamples,
    keys: &[StratumKey],
    strata: &PopulationStrata,
) -> Result<Vec<CeSummary>> {
    let contributions = ce_by_stratum(samples, keys, strata)?;
    let mut out = Vec::new();
    for (b, per_stratum) in contributions.iter().enumerate() {
        let brand = BrandId::from_index(b);
        let total: Vec<f64> = (0..samples.n_draws)
            .map(|d| per_stratum.iter().map(|s| s[d]).sum())
            .collect();
        let push = |out: &mut Vec<CeSummary>, stratum, values: &[f64]| {
            let s = Summary::of(values);
            out.push(CeSummary {
                brand,
                stratum,
                mean: s.mean,
                lo95: s.lo95,
                hi95: s.hi95,
            });
        };
        push(&mut out, None, &total);
        if strata.strata().len() > 1 {
            for (s, values) in strata.strata().iter().zip(per_stratum) {
                push(&mut out, Some(s.key), values);
            }
        }
    }
    Ok(out)
}
