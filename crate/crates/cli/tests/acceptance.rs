//! End-to-end acceptance run. Drives the `survey-clv` binary through the
//! semi-Markov and mobile pipelines at full scale, then prints one PASS/FAIL
//! line per criterion. Exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand_distr::Distribution;
use survey_clv::clv::{npv, Purchase, RevenueSpec};
use survey_clv::dist::{gamma_quantile, sample_truncated_gamma, GammaSpec, RngStream};
use survey_clv::semimarkov::equilibrium;
use survey_clv::survey::BrandId;
use survey_clv_cli::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_survey-clv");

// A1: true-CE oracle, relative tolerance on each target
const A1_TOL: f64 = 0.03;
const A1_CE: f64 = 10.0e6;
const A1_MEAN: f64 = 100.0;
const A1_FOCAL_MEAN: f64 = 120.6;
const A1_COMPETITOR_MEAN: f64 = 90.57;

// A2: posterior CLV at n = 1000
const A2_TOL: f64 = 0.15;
const A2_FOCAL_MEDIAN: f64 = 93.65;
const A2_FOCAL_MEAN: f64 = 118.1;
const A2_COMPETITOR_MEAN: f64 = 88.11;

// A3: sample sizes 100..=1000
const A3_SIZES: [usize; 10] = [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000];
const A3_MIN_INSIDE: usize = 8;

// A4: mobile recovery
const A4_MIN_COVERAGE: f64 = 0.80;
const A4_N_PARAMS: usize = 35;
const A4_KEY: [&str; 4] = ["kappa", "beta[Apple]", "beta[Samsung]", "alpha[Other]"];

// A5
const A5_MAX_DIAGNOSTIC: f64 = 1.1;
const A5_CHAINS: usize = 3;
const A5_KEEP: usize = 3000;

// A6
const A6_MIN_ENVELOPE: f64 = 0.95;

// A7
const A7_KS: f64 = 0.01;
const A7_CASES: u64 = 20;
const A7_DRAWS: usize = 100_000;
const A7_NPV_TOL: f64 = 1e-9;

type Check = std::result::Result<(bool, String), String>;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> std::result::Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let body: String = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect();
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let header = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> std::result::Result<usize, String> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or(format!("missing column {name}"))
    }

    /// Numeric cell of the first row whose column `key_col` equals `key`.
    fn value(&self, key_col: &str, key: &str, col: &str) -> std::result::Result<f64, String> {
        let (k, c) = (self.col(key_col)?, self.col(col)?);
        let row = self
            .rows
            .iter()
            .find(|r| r[k] == key)
            .ok_or(format!("no row {key}"))?;
        row[c].parse().map_err(|e| format!("{key}.{col}: {e}"))
    }
}

fn run(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let out = Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

/// Runs `steps` in a fresh directory `root/name` holding `toml` as its config.
fn pipeline(
    root: &Path,
    name: &str,
    toml: &str,
    steps: &[&str],
) -> std::result::Result<PathBuf, String> {
    let dir = root.join(name);
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    fs::write(dir.join("run.toml"), toml).map_err(|e| e.to_string())?;
    for step in steps {
        run(&dir, &["--config", "run.toml", step])?;
    }
    Ok(dir.join("out"))
}

fn semimarkov_toml(sample: usize) -> String {
    format!("model = \"semimarkov\"\nout_dir = \"out\"\n[generator]\nsample = {sample}\n[chains]\nstrict = false\n")
}

const MOBILE_TOML: &str = "model = \"mobile\"\nout_dir = \"out\"\n[chains]\nstrict = false\n";

const SM_STEPS: [&str; 3] = ["simulate", "fit", "estimate"];
const MOBILE_STEPS: [&str; 4] = ["simulate", "fit", "estimate", "diagnose"];

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol * target.abs()
}

fn a1(sm: &Path) -> Check {
    let oracle = Table::read(&sm.join("oracle.csv"))?;
    let ce = oracle.value("segment", "population", "total")?;
    let mean = oracle.value("segment", "population", "mean")?;
    let focal = oracle.value("segment", "focal", "mean")?;
    let competitor = oracle.value("segment", "competitor", "mean")?;
    let pass = within(ce, A1_CE, A1_TOL)
        && within(mean, A1_MEAN, A1_TOL)
        && within(focal, A1_FOCAL_MEAN, A1_TOL)
        && within(competitor, A1_COMPETITOR_MEAN, A1_TOL);
    Ok((
        pass,
        format!(
            "CE {ce:.0} vs {A1_CE:.0}, mean {mean:.2} vs {A1_MEAN}, focal {focal:.2} vs {A1_FOCAL_MEAN}, competitor {competitor:.2} vs {A1_COMPETITOR_MEAN} (tol {A1_TOL})"
        ),
    ))
}

fn a2(sm: &Path) -> Check {
    let q = Table::read(&sm.join("clv_quantiles.csv"))?;
    let median = q.value("segment", "customers", "median")?;
    let mean = q.value("segment", "customers", "mean")?;
    let competitor = q.value("segment", "non-customers", "mean")?;
    let pass = within(median, A2_FOCAL_MEDIAN, A2_TOL)
        && within(mean, A2_FOCAL_MEAN, A2_TOL)
        && within(competitor, A2_COMPETITOR_MEAN, A2_TOL);
    Ok((
        pass,
        format!(
            "focal median {median:.2} vs {A2_FOCAL_MEDIAN}, focal mean {mean:.2} vs {A2_FOCAL_MEAN}, competitor mean {competitor:.2} vs {A2_COMPETITOR_MEAN} (tol {A2_TOL})"
        ),
    ))
}

/// Average ranks, ties sharing the mean of their positions.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Posterior CE decile band for one sample size, against the true CE.
fn a3_point(out: &Path) -> std::result::Result<(f64, f64, f64), String> {
    let ce = Table::read(&out.join("ce.csv"))?;
    let truth = Table::read(&out.join("oracle.csv"))?.value("segment", "population", "total")?;
    Ok((
        ce.value("stratum", "all", "decile1")?,
        ce.value("stratum", "all", "decile9")?,
        truth,
    ))
}

fn a3(points: &[(usize, (f64, f64, f64))]) -> Check {
    let inside = points
        .iter()
        .filter(|(_, (lo, hi, t))| lo <= t && t <= hi)
        .count();
    let n: Vec<f64> = points.iter().map(|(n, _)| *n as f64).collect();
    let width: Vec<f64> = points.iter().map(|(_, (lo, hi, _))| hi - lo).collect();
    let rho = spearman(&n, &width);
    let bands: Vec<String> = points
        .iter()
        .map(|(n, (lo, hi, _))| format!("{n}:[{:.2},{:.2}]M", lo / 1e6, hi / 1e6))
        .collect();
    Ok((
        inside >= A3_MIN_INSIDE && rho < 0.0,
        format!(
            "true CE inside 10-90% band for {inside}/{} sizes (need {A3_MIN_INSIDE}), Spearman(width, n) = {rho:.3}; {}",
            points.len(),
            bands.join(" ")
        ),
    ))
}

fn a4(mobile: &Path) -> Check {
    let truth = Table::read(&mobile.join("truth.csv"))?;
    let summary = Table::read(&mobile.join("summary.csv"))?;
    let (p, lo, hi) = (
        summary.col("parameter")?,
        summary.col("lo95")?,
        summary.col("hi95")?,
    );
    let mut covered = BTreeMap::new();
    for row in summary.rows.iter().take(A4_N_PARAMS) {
        let name = &row[p];
        let t = truth.value("parameter", name, "value")?;
        let (l, h): (f64, f64) = (
            row[lo].parse().map_err(|_| "bad lo95")?,
            row[hi].parse().map_err(|_| "bad hi95")?,
        );
        covered.insert(name.clone(), l <= t && t <= h);
    }
    if covered.len() != A4_N_PARAMS {
        return Err(format!(
            "expected {A4_N_PARAMS} kappa/beta/alpha rows, found {}",
            covered.len()
        ));
    }
    let n_cov = covered.values().filter(|&&c| c).count();
    let missed_keys: Vec<&str> = A4_KEY
        .iter()
        .copied()
        .filter(|k| covered.get(*k) != Some(&true))
        .collect();
    let missed: Vec<&String> = covered
        .iter()
        .filter(|(_, &c)| !c)
        .map(|(n, _)| n)
        .collect();
    let fraction = n_cov as f64 / A4_N_PARAMS as f64;
    Ok((
        fraction >= A4_MIN_COVERAGE && missed_keys.is_empty(),
        format!(
            "95% intervals cover {n_cov}/{A4_N_PARAMS} ({:.0}%, need {:.0}%); key parameters missed: {missed_keys:?}; all missed: {missed:?}",
            fraction * 100.0,
            A4_MIN_COVERAGE * 100.0
        ),
    ))
}

fn worst_diagnostic(out: &Path) -> std::result::Result<(String, f64), String> {
    let t = Table::read(&out.join("convergence.csv"))?;
    let (p, r) = (t.col("parameter")?, t.col("ratio")?);
    t.rows
        .iter()
        .map(|row| {
            Ok((
                row[p].clone(),
                row[r].parse::<f64>().map_err(|e| e.to_string())?,
            ))
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("empty convergence table".into())
}

fn a5(sm: &Path, mobile: &Path) -> Check {
    let (sm_worst, sm_ratio) = worst_diagnostic(sm)?;
    let (mo_worst, mo_ratio) = worst_diagnostic(mobile)?;
    let mut shape_ok = true;
    for toml in [semimarkov_toml(1000).as_str(), MOBILE_TOML] {
        let c = RunConfig::from_toml(toml)
            .and_then(|c| c.chain_config())
            .map_err(|e| e.to_string())?;
        shape_ok &= c.n_chains == A5_CHAINS && c.keep == A5_KEEP;
    }
    Ok((
        sm_ratio <= A5_MAX_DIAGNOSTIC && mo_ratio <= A5_MAX_DIAGNOSTIC && shape_ok,
        format!(
            "{A5_CHAINS} chains x {A5_KEEP} kept; worst semi-Markov {sm_worst} = {sm_ratio:.4}, worst mobile {mo_worst} = {mo_ratio:.4} (max {A5_MAX_DIAGNOSTIC})"
        ),
    ))
}

fn a6(mobile: &Path) -> Check {
    let ppc = Table::read(&mobile.join("ppc.csv"))?;
    let regen = Table::read(&mobile.join("brand_regeneration.csv"))?;
    let inside_col = regen.col("inside")?;
    let outside: Vec<&str> = regen
        .rows
        .iter()
        .filter(|r| r[inside_col] != "true")
        .map(|r| r[0].as_str())
        .collect();
    let fraction = ppc.value("check", "envelope_fraction_inside", "value")?;
    Ok((
        outside.is_empty() && fraction >= A6_MIN_ENVELOPE,
        format!(
            "brands outside 95% band: {outside:?}; envelope realizations inside {:.1}% (need {:.0}%)",
            fraction * 100.0,
            A6_MIN_ENVELOPE * 100.0
        ),
    ))
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn a7() -> Check {
    let mut worst = 0.0f64;
    let mut setup = RngStream::new(31, 0);
    for case in 0..A7_CASES {
        let shape = (0.3f64.ln() + setup.uniform() * (8.0f64 / 0.3).ln()).exp();
        let rate = (0.2f64.ln() + setup.uniform() * 25.0f64.ln()).exp();
        let s = GammaSpec::new(shape, rate).map_err(|e| e.to_string())?;
        let u1 = 0.9 * setup.uniform();
        let u2 = u1 + 0.05 + setup.uniform() * (0.95 - u1);
        let lo = gamma_quantile(u1, s);
        let hi = if u2 > 0.97 {
            f64::INFINITY
        } else {
            gamma_quantile(u2, s)
        };

        let mut rng = RngStream::new(32, case);
        let ours = (0..A7_DRAWS)
            .map(|_| sample_truncated_gamma(s, lo, hi, &mut rng))
            .collect::<survey_clv::Result<Vec<f64>>>()
            .map_err(|e| e.to_string())?;
        let g = rand_distr::Gamma::new(shape, 1.0 / rate).map_err(|e| e.to_string())?;
        let mut orng = RngStream::new(33, case);
        let mut oracle = Vec::with_capacity(A7_DRAWS);
        while oracle.len() < A7_DRAWS {
            let x: f64 = g.sample(&mut orng);
            if x >= lo && x <= hi {
                oracle.push(x);
            }
        }
        worst = worst.max(ks_two_sample(ours, oracle));
    }

    let spec = RevenueSpec {
        asp: vec![100.0],
        annual_discount: 0.10,
        horizon_months: 12.0,
    };
    let value = npv(
        &[Purchase {
            time: 12.0,
            brand: BrandId(1),
        }],
        &spec,
    );
    let npv_err = (value - 100.0 / 1.1).abs();
    let eq = equilibrium(0.5, 0.5);
    Ok((
        worst < A7_KS && npv_err <= A7_NPV_TOL && eq == 0.5,
        format!(
            "worst KS over {A7_CASES} cases of {A7_DRAWS} = {worst:.5} (max {A7_KS}); NPV {value:.12} (err {npv_err:.1e}); equilibrium(0.5, 0.5) = {eq}"
        ),
    ))
}

/// Files of `a` that are missing from `b` or differ byte for byte.
fn differing_files(a: &Path, b: &Path) -> std::result::Result<Vec<String>, String> {
    let mut bad = Vec::new();
    let mut names: Vec<_> = fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(format!("{} is empty", a.display()));
    }
    for name in names {
        if fs::read(a.join(&name)).ok() != fs::read(b.join(&name)).ok() {
            bad.push(name.to_string_lossy().into_owned());
        }
    }
    Ok(bad)
}

fn a8(pairs: &[(&str, &Path, &Path)]) -> Check {
    let mut notes = Vec::new();
    let mut pass = true;
    for (label, a, b) in pairs {
        let bad = differing_files(a, b)?;
        let n = fs::read_dir(a).map_err(|e| e.to_string())?.count();
        pass &= bad.is_empty();
        notes.push(format!("{label}: {n} files, differing {bad:?}"));
    }
    Ok((pass, notes.join("; ")))
}

fn report(id: &str, title: &str, check: Check, failures: &mut usize) {
    let (pass, detail) = match check {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    if !pass {
        *failures += 1;
    }
    println!(
        "{id} {} {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn main() {
    let started = Instant::now();
    let root = tempfile::tempdir().expect("temporary directory");
    let root = root.path();
    let mut failures = 0;

    let a7_result = a7();

    let sm = pipeline(root, "a2", &semimarkov_toml(1000), &SM_STEPS);
    let mobile = pipeline(root, "a4", MOBILE_TOML, &MOBILE_STEPS);
    let mobile_rerun = pipeline(root, "a4-rerun", MOBILE_TOML, &MOBILE_STEPS);

    let mut points = Vec::new();
    let mut a3_error = None;
    let mut sm_rerun = None;
    for n in A3_SIZES {
        let name = format!("a3-{n}");
        match pipeline(root, &name, &semimarkov_toml(n), &SM_STEPS)
            .and_then(|out| Ok((a3_point(&out)?, out)))
        {
            Ok((point, out)) => {
                points.push((n, point));
                if n == 1000 {
                    sm_rerun = Some(out);
                } else {
                    let _ = fs::remove_dir_all(root.join(&name));
                }
            }
            Err(e) => {
                a3_error = Some(format!("n={n}: {e}"));
                break;
            }
        }
    }

    let with = |r: &std::result::Result<PathBuf, String>, f: &dyn Fn(&Path) -> Check| match r {
        Ok(p) => f(p),
        Err(e) => Err(e.clone()),
    };
    report("A1", "true-CE oracle", with(&sm, &a1), &mut failures);
    report(
        "A2",
        "posterior CLV at n=1000",
        with(&sm, &a2),
        &mut failures,
    );
    report(
        "A3",
        "CE band across sample sizes",
        match a3_error {
            Some(e) => Err(e),
            None => a3(&points),
        },
        &mut failures,
    );
    report(
        "A4",
        "mobile parameter recovery",
        with(&mobile, &a4),
        &mut failures,
    );
    report(
        "A5",
        "convergence",
        match (&sm, &mobile) {
            (Ok(s), Ok(m)) => a5(s, m),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        },
        &mut failures,
    );
    report(
        "A6",
        "posterior predictive checks",
        with(&mobile, &a6),
        &mut failures,
    );
    report("A7", "kernel correctness", a7_result, &mut failures);
    report(
        "A8",
        "determinism",
        match (&sm, &sm_rerun, &mobile, &mobile_rerun) {
            (Ok(s), Some(s2), Ok(m), Ok(m2)) => a8(&[("semi-Markov", s, s2), ("mobile", m, m2)]),
            _ => Err("a pipeline run failed".into()),
        },
        &mut failures,
    );
    println!(
        "{failures} of 8 criteria failed ({:.0} s)",
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
