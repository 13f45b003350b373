use statrs::distribution::{Beta, Continuous, Exp, Gamma};
use survey_clv::clv::HistoryPlan;
use survey_clv::dist::{bernoulli_sample, RngStream};
use survey_clv::mcmc::{ChainConfig, Summary};
use survey_clv::semimarkov::{
    equilibrium, estimate_ce, extract_survey, fit_sm, focal_next, focal_revenue,
    generate_population, log_posterior_sm, true_ce_oracle, GeneratorConfig, SemiMarkovParams,
    SmHyper, SurveyObservation, VARIANCE_STABILIZER,
};

#[test]
fn occupancy_matches_equilibrium() {
    for (k, &(p, q)) in [(0.4, 0.4), (0.7, 0.2), (0.3, 0.6), (0.5, 0.5)]
        .iter()
        .enumerate()
    {
        let mut rng = RngStream::new(31, k as u64);
        let mut focal = true;
        let mut visits = 0usize;
        for _ in 0..10_000 {
            focal = bernoulli_sample(focal_next(p, q, focal), &mut rng).unwrap();
            visits += focal as usize;
        }
        let occupancy = visits as f64 / 10_000.0;
        let pi = (1.0 - q) / (2.0 - q - p);
        assert!(
            (occupancy - pi).abs() < 0.01,
            "p={p} q={q}: {occupancy} vs {pi}"
        );
    }
    assert_eq!(equilibrium(0.5, 0.5), 0.5);
}

#[test]
fn mean_purchase_rate_is_gamma_over_delta() {
    let cfg = GeneratorConfig::default();
    let pop = generate_population(100_000, &cfg, 1).unwrap();
    let span = cfg.past_years + cfg.future_years;
    let rate = pop
        .iter()
        .map(|i| i.history.purchases.len() as f64 / span)
        .sum::<f64>()
        / pop.len() as f64;
    assert!((rate - 0.30).abs() < 0.01, "{rate}");
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

#[test]
fn time_since_purchase_is_distributed_like_an_interval() {
    let pop = generate_population(20_000, &GeneratorConfig::default(), 2).unwrap();
    let s = extract_survey(&pop, 10_000, 2).unwrap();
    let t = s.observations.iter().map(|o| o.t).collect();
    let t_star = s.observations.iter().map(|o| o.t_star).collect();
    let d = ks_two_sample(t, t_star);
    assert!(d < 0.02, "KS={d}");
}

#[test]
fn survey_focal_share_matches_population() {
    let pop = generate_population(20_000, &GeneratorConfig::default(), 3).unwrap();
    let eligible: Vec<_> = pop.iter().filter_map(SurveyObservation::of).collect();
    let share = eligible.iter().filter(|o| o.s0).count() as f64 / eligible.len() as f64;
    let n = 500;
    let sigma = (share * (1.0 - share) / n as f64).sqrt();
    for seed in 0..100 {
        let s = extract_survey(&pop, n, seed).unwrap();
        let frac = s.observations.iter().filter(|o| o.s0).count() as f64 / n as f64;
        assert!(
            (frac - share).abs() < 3.0 * sigma,
            "resample {seed}: {frac} vs {share}"
        );
    }
}

fn fixture() -> Vec<SurveyObservation> {
    let rows = [
        (true, true, 2.5, 1.0),
        (true, false, 0.4, 3.2),
        (false, true, 7.1, 0.05),
        (false, false, 1.9, 2.2),
        (true, true, 11.0, 6.5),
        (false, true, 0.8, 0.3),
        (true, false, 3.3, 4.4),
        (false, false, 5.0, 0.9),
        (true, true, 0.2, 12.0),
        (true, false, 2.0, 2.0),
    ];
    rows.iter()
        .map(|&(s0, s1, t, t_star)| SurveyObservation { s0, s1, t, t_star })
        .collect()
}

fn fixture_params(n: usize) -> SemiMarkovParams {
    let hyper = SmHyper {
        m_lambda: 0.35,
        v_lambda: 0.04,
        m_p: 0.42,
        k_p: 9.0,
        m_q: 0.37,
        k_q: 12.0,
    };
    SemiMarkovParams {
        hyper,
        lambda: (0..n).map(|i| 0.1 + 0.07 * i as f64).collect(),
        p: (0..n).map(|i| 0.15 + 0.08 * i as f64).collect(),
        q: (0..n).map(|i| 0.9 - 0.075 * i as f64).collect(),
        s2: (0..n).map(|i| i % 3 == 0).collect(),
    }
}

/// Straight-line log joint density written against statrs distributions.
fn oracle(params: &SemiMarkovParams, data: &[SurveyObservation]) -> f64 {
    let h = params.hyper;
    let v = h.v_lambda + 1e-5;
    let lambda_pop = Gamma::new(h.m_lambda * h.m_lambda / v, h.m_lambda / v).unwrap();
    let p_pop = Beta::new(h.k_p * h.m_p, h.k_p * (1.0 - h.m_p)).unwrap();
    let q_pop = Beta::new(h.k_q * h.m_q, h.k_q * (1.0 - h.m_q)).unwrap();
    let bern = |s: bool, prob: f64| if s { prob.ln() } else { (1.0 - prob).ln() };
    let mut total = 0.0;
    for (i, o) in data.iter().enumerate() {
        let (l, p, q, s2) = (params.lambda[i], params.p[i], params.q[i], params.s2[i]);
        let e = Exp::new(l).unwrap();
        total += e.ln_pdf(o.t) + e.ln_pdf(o.t_star);
        let next = |prev: bool| if prev { p } else { 1.0 - q };
        total += bern(s2, (1.0 - q) / (2.0 - q - p));
        total += bern(o.s1, next(s2)) + bern(o.s0, next(o.s1));
        total += lambda_pop.ln_pdf(l) + p_pop.ln_pdf(p) + q_pop.ln_pdf(q);
    }
    let moments = Gamma::new(2.0, 1.0).unwrap();
    let conc = Gamma::new(10.0, 1.0).unwrap();
    total
        + moments.ln_pdf(h.m_lambda)
        + moments.ln_pdf(h.v_lambda)
        + conc.ln_pdf(h.k_p)
        + conc.ln_pdf(h.k_q)
}

#[test]
fn log_posterior_matches_oracle_on_fixture() {
    let data = fixture();
    let params = fixture_params(data.len());
    let ours = log_posterior_sm(&params, &data).unwrap();
    let theirs = oracle(&params, &data);
    assert!((ours - theirs).abs() < 1e-10, "{ours} vs {theirs}");
}

#[test]
fn derived_hyperparameter_identities() {
    let h = fixture_params(0).hyper;
    assert!(
        (h.gamma_shape() * (h.v_lambda + VARIANCE_STABILIZER) - h.m_lambda * h.m_lambda).abs()
            < 1e-15
    );
    assert!((h.gamma_shape() / h.delta_rate() - h.m_lambda).abs() < 1e-15);
    assert_eq!(h.alpha_p() + h.beta_p(), h.k_p);
    assert_eq!(h.alpha_q() + h.beta_q(), h.k_q);
}

#[test]
fn fit_recovers_mean_repurchase_probability() {
    let pop = generate_population(20_000, &GeneratorConfig::default(), 1).unwrap();
    let data = extract_survey(&pop, 1000, 1).unwrap().observations;
    let config = ChainConfig {
        burn_in: 2000,
        keep: 2000,
        ..Default::default()
    };
    let draws = fit_sm(&data, &config).unwrap();
    let m_p = Summary::of(&draws.pooled("m_p").unwrap());
    assert!(m_p.mean > 0.30 && m_p.mean < 0.50, "{m_p:?}");
    assert!(m_p.covers(0.4), "{m_p:?}");
}

#[test]
fn loyal_data_pushes_repurchase_mean_up() {
    let data = vec![
        SurveyObservation {
            s0: true,
            s1: true,
            t: 3.0,
            t_star: 1.0
        };
        100
    ];

    // the joint density alone already prefers high individual p
    let mut params = fixture_params(data.len());
    params.lambda = vec![0.3; data.len()];
    params.q = vec![0.5; data.len()];
    params.s2 = vec![true; data.len()];
    params.p = vec![0.8; data.len()];
    let high = log_posterior_sm(&params, &data).unwrap();
    params.p = vec![0.2; data.len()];
    let low = log_posterior_sm(&params, &data).unwrap();
    assert!(high > low);

    let config = ChainConfig {
        burn_in: 1500,
        keep: 1500,
        n_chains: 2,
        ..Default::default()
    };
    let draws = fit_sm(&data, &config).unwrap();
    let m_p = draws.pooled("m_p").unwrap();
    let above = m_p.iter().filter(|&&m| m > 0.5).count() as f64 / m_p.len() as f64;
    assert!(above > 0.9, "{above}");
}

#[test]
fn zero_horizon_gives_zero_equity() {
    let pop = generate_population(500, &GeneratorConfig::default(), 4).unwrap();
    let revenue = focal_revenue(100.0, 0.0, 0.1);
    assert_eq!(true_ce_oracle(&pop, &revenue).unwrap().ce, 0.0);

    let data = extract_survey(&pop, 50, 4).unwrap().observations;
    let config = ChainConfig {
        burn_in: 200,
        keep: 200,
        n_chains: 2,
        ..Default::default()
    };
    let draws = fit_sm(&data, &config).unwrap();
    let est = estimate_ce(
        &draws,
        &data,
        500.0,
        &revenue,
        HistoryPlan {
            n_histories: 20,
            seed: 1,
        },
    )
    .unwrap();
    assert!(est.ce_draws.iter().all(|&c| c == 0.0));
}
