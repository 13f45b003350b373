use std::io::{BufRead, BufReader, Read, Write};

use super::engine::ChainReport;
use crate::error::{Error, Result};

/// Post-burn-in draws, stored draw-major: `values[(chain * n_iter + iter) * n_params + param]`.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    names: Vec<String>,
    n_chains: usize,
    n_iter: usize,
    values: Vec<f64>,
    acceptance: Vec<(String, f64)>,
    reports: Vec<ChainReport>,
    warnings: Vec<String>,
}

impl PartialEq for PosteriorDraws {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.n_chains == other.n_chains
            && self.n_iter == other.n_iter
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.acceptance == other.acceptance
    }
}

impl PosteriorDraws {
    pub(crate) fn new(
        names: Vec<String>,
        n_chains: usize,
        n_iter: usize,
        values: Vec<f64>,
        acceptance: Vec<(String, f64)>,
        reports: Vec<ChainReport>,
        warnings: Vec<String>,
    ) -> Self {
        debug_assert_eq!(values.len(), n_chains * n_iter * names.len());
        Self {
            names,
            n_chains,
            n_iter,
            values,
            acceptance,
            reports,
            warnings,
        }
    }

    /// Builds draws from per-chain rows, `chains[c][i]` being one draw.
    pub fn from_chains(names: Vec<String>, chains: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_iter = chains.first().map_or(0, Vec::len);
        let mut values = Vec::new();
        for chain in chains {
            if chain.len() != n_iter {
                return Err(Error::invalid("chains must have equal length"));
            }
            for row in chain {
                if row.len() != names.len() {
                    return Err(Error::invalid(format!(
                        "draw has {} values for {} parameters",
                        row.len(),
                        names.len()
                    )));
                }
                values.extend_from_slice(row);
            }
        }
        Ok(Self::new(
            names,
            chains.len(),
            n_iter,
            values,
            Vec::new(),
            Vec::new(),
            Vec::new(),
        ))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn n_chains(&self) -> usize {
        self.n_chains
    }

    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    pub fn n_pooled(&self) -> usize {
        self.n_chains * self.n_iter
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::invalid(format!("no parameter named `{name}` in draws")))
    }

    pub fn draw(&self, chain: usize, iter: usize) -> &[f64] {
        self.pooled_draw(chain * self.n_iter + iter)
    }

    /// Draw `k` of the pooled sample, chains concatenated in index order.
    pub fn pooled_draw(&self, k: usize) -> &[f64] {
        let p = self.names.len();
        &self.values[k * p..(k + 1) * p]
    }

    pub fn chain_values(&self, name: &str, chain: usize) -> Result<Vec<f64>> {
        let j = self.require(name)?;
        Ok((0..self.n_iter).map(|i| self.draw(chain, i)[j]).collect())
    }

    pub fn chains(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        (0..self.n_chains)
            .map(|c| self.chain_values(name, c))
            .collect()
    }

    pub fn pooled(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.require(name)?;
        Ok((0..self.n_pooled())
            .map(|k| self.pooled_draw(k)[j])
            .collect())
    }

    pub fn pooled_by_index(&self, j: usize) -> Vec<f64> {
        (0..self.n_pooled())
            .map(|k| self.pooled_draw(k)[j])
            .collect()
    }

    pub fn acceptance(&self) -> &[(String, f64)] {
        &self.acceptance
    }

    pub fn reports(&self) -> &[ChainReport] {
        &self.reports
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// At most `max_per_chain` evenly spaced draws from each chain.
    pub fn thinned(&self, max_per_chain: usize) -> Self {
        if max_per_chain == 0 || self.n_iter <= max_per_chain {
            return self.clone();
        }
        let keep: Vec<usize> = (0..max_per_chain)
            .map(|i| i * self.n_iter / max_per_chain)
            .collect();
        let mut values = Vec::with_capacity(self.n_chains * keep.len() * self.names.len());
        for c in 0..self.n_chains {
            for &i in &keep {
                values.extend_from_slice(self.draw(c, i));
            }
        }
        Self {
            names: self.names.clone(),
            n_chains: self.n_chains,
            n_iter: keep.len(),
            values,
            acceptance: self.acceptance.clone(),
            reports: self.reports.clone(),
            warnings: self.warnings.clone(),
        }
    }

    /// Columnar text export: `chain,iteration,<params...>`, preceded by
    /// `header_lines` and block acceptance rates as `#` comments.
    pub fn write_csv<W: Write>(&self, out: W, header_lines: &[String]) -> Result<()> {
        let mut out = out;
        for line in header_lines {
            writeln!(out, "# {line}")?;
        }
        for (name, rate) in &self.acceptance {
            writeln!(out, "# acceptance {name}={rate}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for c in 0..self.n_chains {
            for i in 0..self.n_iter {
                rec.clear();
                rec.push(c.to_string());
                rec.push(i.to_string());
                rec.extend(self.draw(c, i).iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut acceptance = Vec::new();
        let mut body = String::new();
        for line in BufReader::new(input).lines() {
            let line = line?;
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((name, rate)) = meta
                    .trim()
                    .strip_prefix("acceptance ")
                    .and_then(|s| s.rsplit_once('='))
                {
                    let rate = rate
                        .parse()
                        .map_err(|_| Error::Validation(format!("bad acceptance line {line:?}")))?;
                    acceptance.push((name.to_string(), rate));
                }
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() < 2 || &header[0] != "chain" || &header[1] != "iteration" {
            return Err(Error::Validation(
                "draws file must start with chain,iteration columns".into(),
            ));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut chains: Vec<Vec<Vec<f64>>> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let bad = |m: &str| Error::MalformedRow {
                row: i + 2,
                message: m.to_string(),
            };
            let chain: usize = rec[0].parse().map_err(|_| bad("bad chain index"))?;
            if chain > chains.len() {
                return Err(bad("chains out of order"));
            }
            if chain == chains.len() {
                chains.push(Vec::new());
            }
            let row = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad("non-numeric draw"))?;
            chains[chain].push(row);
        }
        let mut d = Self::from_chains(names, &chains)?;
        d.acceptance = acceptance;
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PosteriorDraws {
        let chains = vec![
            vec![vec![0.1, 1.0], vec![0.2, 2.0], vec![0.3, 3.0]],
            vec![vec![-0.1, 1.5], vec![1.0 / 3.0, 2.5], vec![1e-300, 3.5]],
        ];
        PosteriorDraws::from_chains(vec!["a".into(), "b".into()], &chains).unwrap()
    }

    #[test]
    fn indexing() {
        let d = sample();
        assert_eq!(d.n_pooled(), 6);
        assert_eq!(d.draw(1, 0), &[-0.1, 1.5]);
        assert_eq!(d.pooled("b").unwrap(), vec![1.0, 2.0, 3.0, 1.5, 2.5, 3.5]);
        assert!(d.pooled("c").is_err());
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let d = sample();
        let mut buf = Vec::new();
        d.write_csv(&mut buf, &["hdr".into()]).unwrap();
        let back = PosteriorDraws::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn thinning_keeps_evenly_spaced() {
        let d = sample().thinned(2);
        assert_eq!(d.n_iter(), 2);
        assert_eq!(d.chain_values("b", 0).unwrap(), vec![1.0, 2.0]);
    }
}
