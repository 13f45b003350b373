use rand_distr::{Distribution, Normal};
use survey_clv::dist::RngStream;
use survey_clv::mcmc::{
    interval_diagnostic, interval_ratio, run_chains, ChainConfig, Model, ParameterBlock, Support,
};
use survey_clv::Error;

/// One scalar with a user-supplied log-density.
struct Scalar<F: Fn(f64) -> f64 + Sync> {
    support: Support,
    log_density: F,
    init: f64,
}

impl<F: Fn(f64) -> f64 + Sync> Model for Scalar<F> {
    type State = f64;

    fn blocks(&self) -> Vec<ParameterBlock> {
        vec![ParameterBlock::random_walk("x", 1, self.support)]
    }

    fn initial_state(&self, _rng: &mut RngStream) -> f64 {
        self.init
    }

    fn log_posterior(&self, x: &f64) -> f64 {
        (self.log_density)(*x)
    }

    fn get_block(&self, x: &f64, _: usize, out: &mut [f64]) {
        out[0] = *x;
    }

    fn set_block(&self, x: &mut f64, _: usize, v: &[f64]) {
        *x = v[0];
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["x".into()]
    }

    fn record(&self, x: &f64, out: &mut [f64]) {
        out[0] = *x;
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var)
}

#[test]
fn standard_normal_target() {
    let model = Scalar {
        support: Support::Real,
        log_density: |x: f64| -0.5 * x * x,
        init: 0.0,
    };
    let config = ChainConfig {
        seed: 11,
        ..ChainConfig::default()
    };
    let draws = run_chains(&model, &config).unwrap();
    assert_eq!(draws.n_pooled(), 9000);
    let (m, v) = mean_var(&draws.pooled("x").unwrap());
    assert!(m.abs() < 0.05, "mean {m}");
    assert!((v - 1.0).abs() < 0.05, "variance {v}");
    assert!(interval_diagnostic(&draws, "x", 0.8).unwrap().ratio <= 1.1);
}

#[test]
fn beta_target_on_unit_interval() {
    let model = Scalar {
        support: Support::UnitInterval,
        log_density: |x: f64| x.ln() + (1.0 - x).ln(),
        init: 0.5,
    };
    let config = ChainConfig {
        seed: 12,
        keep: 20_000,
        ..ChainConfig::default()
    };
    let draws = run_chains(&model, &config).unwrap();
    let x = draws.pooled("x").unwrap();
    assert!(x.iter().all(|v| *v > 0.0 && *v < 1.0));
    let (m, _) = mean_var(&x);
    assert!((m - 0.5).abs() < 0.01, "mean {m}");
}

#[test]
fn zero_keep_is_error() {
    let model = Scalar {
        support: Support::Real,
        log_density: |x: f64| -0.5 * x * x,
        init: 0.0,
    };
    let config = ChainConfig {
        keep: 0,
        ..ChainConfig::default()
    };
    assert!(matches!(
        run_chains(&model, &config),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn two_state_piecewise_target() {
    // density 1.4 on (0, 0.5) and 0.6 on [0.5, 1): mass 0.7 below one half
    let model = Scalar {
        support: Support::UnitInterval,
        log_density: |x: f64| if x < 0.5 { 1.4f64.ln() } else { 0.6f64.ln() },
        init: 0.25,
    };
    let config = ChainConfig {
        n_chains: 2,
        burn_in: 2000,
        keep: 500_000,
        seed: 13,
        ..ChainConfig::default()
    };
    let draws = run_chains(&model, &config).unwrap();
    let x = draws.pooled("x").unwrap();
    let low = x.iter().filter(|v| **v < 0.5).count() as f64 / x.len() as f64;
    assert!((low - 0.7).abs() < 0.007, "P(low) = {low}");
}

#[test]
fn adaptation_frozen_after_burn_in() {
    let model = Scalar {
        support: Support::Positive,
        log_density: |x: f64| 2.0 * x.ln() - x,
        init: 1.0,
    };
    let config = ChainConfig {
        burn_in: 500,
        keep: 1000,
        seed: 14,
        ..ChainConfig::default()
    };
    let draws = run_chains(&model, &config).unwrap();
    for r in draws.reports() {
        let a = r.adaptation_at_freeze[0].as_ref().unwrap();
        let b = r.adaptation_final[0].as_ref().unwrap();
        assert_eq!(a.scale.to_bits(), b.scale.to_bits());
        assert_eq!(a.cholesky, b.cholesky);
        assert_ne!(a.scale, 0.1, "scale should have adapted during burn-in");
    }
}

#[test]
fn identical_config_identical_draws() {
    let model = Scalar {
        support: Support::Real,
        log_density: |x: f64| -0.5 * (x - 3.0).powi(2),
        init: 0.0,
    };
    let config = ChainConfig {
        burn_in: 300,
        keep: 400,
        seed: 15,
        ..ChainConfig::default()
    };
    let a = run_chains(&model, &config).unwrap();
    let b = run_chains(&model, &config).unwrap();
    assert_eq!(a, b);
    let c = run_chains(&model, &ChainConfig { seed: 16, ..config }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn nan_density_reports_block_and_iteration() {
    let model = Scalar {
        support: Support::Real,
        log_density: |x: f64| if x > 0.5 { f64::NAN } else { -0.5 * x * x },
        init: 0.0,
    };
    let config = ChainConfig {
        burn_in: 1000,
        keep: 1000,
        ..ChainConfig::default()
    };
    match run_chains(&model, &config) {
        Err(Error::Sampling { block, .. }) => assert_eq!(block, "x"),
        other => panic!("expected sampling error, got {other:?}"),
    }
}

#[test]
fn non_finite_initialization_fails() {
    let model = Scalar {
        support: Support::Real,
        log_density: |_| f64::NEG_INFINITY,
        init: 0.0,
    };
    assert!(matches!(
        run_chains(&model, &ChainConfig::default()),
        Err(Error::Initialization { attempts: 100 })
    ));
}

/// Bivariate normal with correlation 0.9 updated jointly.
struct Correlated;

impl Model for Correlated {
    type State = [f64; 2];

    fn blocks(&self) -> Vec<ParameterBlock> {
        vec![ParameterBlock::random_walk("xy", 2, Support::Real)]
    }

    fn initial_state(&self, _: &mut RngStream) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn log_posterior(&self, s: &[f64; 2]) -> f64 {
        let (x, y) = (s[0], s[1]);
        -(x * x - 1.8 * x * y + y * y) / (2.0 * 0.19)
    }

    fn get_block(&self, s: &[f64; 2], _: usize, out: &mut [f64]) {
        out.copy_from_slice(s);
    }

    fn set_block(&self, s: &mut [f64; 2], _: usize, v: &[f64]) {
        s.copy_from_slice(v);
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    fn record(&self, s: &[f64; 2], out: &mut [f64]) {
        out.copy_from_slice(s);
    }
}

#[test]
fn joint_block_learns_correlation() {
    let draws = run_chains(
        &Correlated,
        &ChainConfig {
            seed: 17,
            ..ChainConfig::default()
        },
    )
    .unwrap();
    let x = draws.pooled("x").unwrap();
    let y = draws.pooled("y").unwrap();
    let (mx, vx) = mean_var(&x);
    let (my, vy) = mean_var(&y);
    let cov = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() - 1) as f64;
    let rho = cov / (vx * vy).sqrt();
    assert!((rho - 0.9).abs() < 0.03, "rho {rho}");
    assert!((vx - 1.0).abs() < 0.15, "var {vx}");
    let acc = draws.acceptance()[0].1;
    assert!((0.2..0.5).contains(&acc), "acceptance {acc}");
}

#[test]
fn diagnostic_separated_chains() {
    let mut rng = RngStream::new(3, 0);
    let a: Vec<f64> = (0..3000)
        .map(|_| Normal::new(0.0, 1.0).unwrap().sample(&mut rng))
        .collect();
    let b: Vec<f64> = (0..3000)
        .map(|_| Normal::new(10.0, 1.0).unwrap().sample(&mut rng))
        .collect();
    let d = interval_ratio(&[a, b], 0.8).unwrap();
    assert!(d.ratio > 3.0, "ratio {}", d.ratio);
}

#[test]
fn diagnostic_same_distribution() {
    let mut rng = RngStream::new(4, 0);
    let n = Normal::new(0.0, 1.0).unwrap();
    let chains: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3000).map(|_| n.sample(&mut rng)).collect())
        .collect();
    let d = interval_ratio(&chains, 0.8).unwrap();
    assert!((0.95..=1.05).contains(&d.ratio), "ratio {}", d.ratio);
}
