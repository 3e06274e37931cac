use corrdetect::classes::SetFamily;
use corrdetect::detectors::dyadic::{dyadic_intervals, dyadic_scan};
use corrdetect::detectors::gof::{gof_counts, gof_small_k_threshold, gof_stat, gof_threshold};
use corrdetect::detectors::lr::{half_deviation_check, log_bayes_lr, np_log_det_threshold};
use corrdetect::detectors::scan::{
    check_kset_sorted_window, kset_glrt_sorted_window, local_sq_stat, scan, scan_enumerate, KSetEngine, Objective,
};
use corrdetect::detectors::*;
use corrdetect::harness::{estimate_risk, Experiment, ExperimentConfig, FamilyConfig, ModelConfig, RiskMode};
use corrdetect::model::{log_det_as, quad_form, sample_alternative, sample_null, CorrelationModel, QuadForm};
use corrdetect::rng::stream;
use corrdetect::special::{chi2_1_quantile, ln_factorial};
use nalgebra::DMatrix;

fn dense_quad(x: &[f64], set: &[usize], rho: f64) -> f64 {
    let k = set.len();
    let a = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { rho });
    let m = DMatrix::identity(k, k) - a.try_inverse().unwrap();
    let v = DMatrix::from_fn(k, 1, |i, _| x[set[i]]);
    (v.transpose() * m * v)[(0, 0)]
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn sum_sq(x: &[f64], set: &[usize]) -> f64 {
    let s: f64 = set.iter().map(|&i| x[i]).sum();
    s * s
}

#[test]
fn squared_sum_examples() {
    let det = Detector::from_config(&DetectorConfig::new(DetectorName::SquaredSum), None).unwrap();
    let f = SetFamily::k_sets(4, 2).unwrap();
    assert_eq!(det.statistic(&[0.0; 4], &f).unwrap(), 0.0);
    assert_eq!(det.statistic(&[1.0, -1.0, 0.0, 0.0], &f).unwrap(), 0.0);
}

#[test]
fn squared_sum_null_quantile() {
    let (n, trials) = (100usize, 100_000u64);
    let f = SetFamily::k_sets(n, n).unwrap();
    let det = Detector::from_config(&DetectorConfig::new(DetectorName::SquaredSum), None).unwrap().prepare(&f).unwrap();
    let mut v: Vec<f64> =
        (0..trials).map(|t| det.statistic(sample_null(n, &mut stream(31, 0, t)).values()).unwrap() / n as f64).collect();
    v.sort_by(f64::total_cmp);
    let q = v[(0.95 * trials as f64) as usize];
    assert!((q - 3.8415).abs() < 0.15, "{q}");
    assert!((chi2_1_quantile(0.95) - 3.841_458_820_694_124).abs() < 1e-9);
}

#[test]
fn squared_sum_monotone_under_shift() {
    for t in 0..200 {
        let x = sample_null(20, &mut stream(2, 1, t)).into_values();
        let s: f64 = x.iter().sum();
        let x: Vec<f64> = if s < 0.0 { x.iter().map(|v| -v).collect() } else { x };
        let base: f64 = x.iter().sum::<f64>().powi(2);
        let shifted: f64 = x.iter().map(|v| v + 0.37).sum::<f64>().powi(2);
        assert!(shifted >= base);
    }
}

fn random_geometric_families(t: u64) -> Vec<SetFamily> {
    let n = 2 + (t as usize * 7) % 63;
    let k = 1 + (t as usize * 3) % n;
    let m = 2 + (t as usize) % 7;
    let a = 1 + (t as usize) % m;
    let b = 1 + (t as usize / 3) % m;
    vec![
        SetFamily::intervals(n, k).unwrap(),
        SetFamily::linear_intervals(n, k).unwrap(),
        SetFamily::hypercubes(m, vec![a, b]).unwrap(),
        SetFamily::hypercubes(m.min(4), vec![a.min(m.min(4)), 1, b.min(m.min(4))]).unwrap(),
    ]
}

#[test]
fn geometric_engines_equal_enumeration() {
    let mut mismatches = 0;
    for t in 0..1000u64 {
        for f in random_geometric_families(t) {
            let x = sample_null(f.n(), &mut stream(40, f.n() as u64, t)).into_values();
            let mut objectives = vec![Objective::LocalSquaredSum];
            if f.k() > 1 {
                objectives.push(Objective::Glrt(QuadForm::new(f.k(), [0.2, 0.5, 0.8][t as usize % 3]).unwrap()));
            }
            for obj in objectives {
                let fast = scan(&x, &f, obj, KSetEngine::SortedWindow).unwrap();
                let slow = scan_enumerate(&x, &f, obj, 1 << 20).unwrap();
                if fast.value.to_bits() != slow.value.to_bits() || fast.argmax != slow.argmax {
                    mismatches += 1;
                }
            }
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn glrt_enumeration_matches_dense_algebra() {
    for t in 0..100u64 {
        let f = SetFamily::intervals(20, 2 + t as usize % 5).unwrap();
        let rho = 0.15 + 0.07 * (t % 10) as f64;
        let x = sample_null(20, &mut stream(41, 0, t)).into_values();
        let got = scan(&x, &f, Objective::Glrt(QuadForm::new(f.k(), rho).unwrap()), KSetEngine::SortedWindow).unwrap().value;
        let want = f.members(100).unwrap().iter().map(|s| dense_quad(&x, s, rho)).fold(f64::NEG_INFINITY, f64::max);
        assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
    }
}

#[test]
fn constant_observation_on_ksets() {
    let (n, k, rho, c) = (9usize, 4usize, 0.3, 1.7);
    let x = vec![c; n];
    let f = SetFamily::k_sets(n, k).unwrap();
    // every k-set has the same value k(k-1)c^2 rho / (1 + rho(k-1))
    let want = (k * (k - 1)) as f64 * c * c * rho / (1.0 + rho * (k as f64 - 1.0));
    assert!((dense_quad(&x, &[0, 1, 2, 3], rho) - want).abs() < 1e-12 * want);
    let got = scan(&x, &f, Objective::Glrt(QuadForm::new(k, rho).unwrap()), KSetEngine::SortedWindow).unwrap().value;
    assert!((got - want).abs() < 1e-12 * want);
}

#[test]
fn kset_sorted_window_equals_brute_force() {
    let f = SetFamily::k_sets(12, 3).unwrap();
    let form = QuadForm::new(3, 0.4).unwrap();
    let members = combinations(12, 3);
    assert_eq!(members.len(), 220);
    let mut mismatches = 0;
    for t in 0..1000u64 {
        let mut rng = stream(42, 0, t);
        let x = if t % 2 == 0 {
            sample_null(12, &mut rng).into_values()
        } else {
            let model = CorrelationModel::new(12, 3, 0.4).unwrap();
            let s = f.sample_member(&mut rng);
            sample_alternative(&model, &s, &mut rng).unwrap().into_values()
        };
        let fast = kset_glrt_sorted_window(&x, 3, form).value;
        let brute = members.iter().map(|s| quad_form(&x, s, 0.4).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        if (fast - brute).abs() > 1e-12 * brute.abs().max(1.0) {
            mismatches += 1;
        }
    }
    println!("k-set sorted-window mismatches: {mismatches}");
    assert_eq!(mismatches, 0);
    let report = check_kset_sorted_window(&f, 0.4, 1000, 7, 1000).unwrap();
    assert_eq!(report.mismatches, 0);
}

#[test]
fn kset_local_sum_equals_brute_force() {
    for t in 0..1000u64 {
        let n = 2 + t as usize % 15;
        let k = 1 + (t as usize / 15) % n.min(4);
        let x = sample_null(n, &mut stream(43, 0, t)).into_values();
        let got = local_sq_stat(&x, &SetFamily::k_sets(n, k).unwrap()).unwrap();
        let want = combinations(n, k).iter().map(|s| sum_sq(&x, s)).fold(f64::NEG_INFINITY, f64::max);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0), "n={n} k={k}: {got} vs {want}");
    }
}

#[test]
fn local_sum_one_hot() {
    let mut x = vec![0.0; 10];
    x[0] = 1.0;
    assert_eq!(local_sq_stat(&x, &SetFamily::intervals(10, 2).unwrap()).unwrap(), 1.0);
}

fn explicit_dyadic(x: &[f64]) -> f64 {
    let n = x.len();
    let mut best = f64::NEG_INFINITY;
    let mut width = 2;
    while width <= n {
        for start in (0..n).step_by(width) {
            let s: f64 = x[start..start + width].iter().sum();
            best = best.max(s * s / width as f64);
        }
        width *= 2;
    }
    best
}

#[test]
fn dyadic_examples() {
    let d = dyadic_scan(&[1.5; 32]);
    assert!((d.value - 1.5 * 1.5 * 32.0).abs() < 1e-12);
    assert_eq!((d.start, d.len, d.padded), (0, 32, false));
    for t in 0..200u64 {
        let x = sample_null(64, &mut stream(44, 0, t)).into_values();
        let got = dyadic_scan(&x).value;
        let want = explicit_dyadic(&x);
        assert!((got - want).abs() <= 1e-12 * want.max(1.0));
    }
    for n in [3usize, 5, 17, 50] {
        let x = sample_null(n, &mut stream(45, n as u64, 0)).into_values();
        let want = dyadic_intervals(n)
            .into_iter()
            .map(|(s, l)| x[s..s + l].iter().sum::<f64>().powi(2) / l as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((dyadic_scan(&x).value - want).abs() <= 1e-12 * want.max(1.0));
    }
    assert_eq!(dyadic_scan(&[3.0]).value, 0.0);
}

#[test]
fn dyadic_null_upper_quantile() {
    let (n, trials) = (1usize << 14, 1000u64);
    let mut v: Vec<f64> = (0..trials).map(|t| dyadic_scan(sample_null(n, &mut stream(46, 0, t)).values()).value).collect();
    v.sort_by(f64::total_cmp);
    let q99 = v[(0.99 * trials as f64) as usize];
    let bound = 2.0 * (2.0 * n as f64).ln() + 5.0;
    assert!(q99 <= bound, "{q99} > {bound}");
}

#[test]
fn gof_examples() {
    assert_eq!(gof_stat(&[0.3; 50], 10).unwrap(), 50.0);
    assert!(gof_counts(&[f64::NAN], 4).is_err());
    assert!(gof_counts(&[0.0], 1).is_err());
    let t = gof_threshold(10_000, 100);
    assert!((t - (100.0 + (3.0f64 * 1e4 * 100f64.ln() / 100.0).sqrt())).abs() < 1e-12);
    assert!((t - 137.17).abs() < 0.01);
}

#[test]
fn gof_null_rejection_rate() {
    let (n, m, trials) = (10_000usize, 100usize, 1000u64);
    let t = gof_threshold(n, m);
    let rejections = (0..trials).filter(|&tr| gof_stat(sample_null(n, &mut stream(47, 0, tr)).values(), m).unwrap() > t).count();
    assert!((rejections as f64 / trials as f64) < 0.05, "{rejections}");
}

fn ln_binomial_tail(n: u64, p: f64, l: u64) -> f64 {
    // ln P(Bin(n, p) >= l) by summing the tail directly
    let terms: Vec<f64> = (l..=n)
        .map(|j| ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j) + j as f64 * p.ln() + (n - j) as f64 * (1.0 - p).ln())
        .collect();
    corrdetect::special::log_sum_exp(terms)
}

#[test]
fn gof_small_k_rule() {
    let (n, m, alpha) = (100usize, 400usize, 0.05);
    let l = gof_small_k_threshold(n, m, alpha).unwrap();
    let bound = |l: u64| m as f64 * 2.0 * (n as f64 / m as f64).powi(l as i32) / ln_factorial(l).exp();
    assert!(bound(l) <= alpha && bound(l - 1) > alpha);
    assert_eq!(l, 5);
    // the union of exact binomial tails sits below the bound
    assert!(m as f64 * ln_binomial_tail(n as u64, 1.0 / m as f64, l).exp() <= bound(l));
    assert_eq!(gof_small_k_threshold(n, m, 2.0 * m as f64 * (n as f64 / m as f64)).unwrap(), 1);
    let err = gof_small_k_threshold(100, 150, 0.05).unwrap_err().to_string();
    assert!(err.to_lowercase().contains("bernstein"), "{err}");
}

#[test]
fn gof_small_k_null_rate() {
    let (n, m, alpha, trials) = (100usize, 400usize, 0.05, 20_000u64);
    let l = gof_small_k_threshold(n, m, alpha).unwrap();
    let hits = (0..trials).filter(|&t| gof_stat(sample_null(n, &mut stream(48, 0, t)).values(), m).unwrap() >= l as f64).count();
    let rate = hits as f64 / trials as f64;
    let se = (alpha * (1.0 - alpha) / trials as f64).sqrt();
    assert!(rate <= alpha + 3.0 * se, "{rate}");
}

fn lr_detector(name: DetectorName, rho: f64, f: &SetFamily) -> PreparedDetector {
    Detector::from_config(&DetectorConfig::new(name).with_rho(rho), None).unwrap().prepare(f).unwrap()
}

#[test]
fn single_member_lr_equals_neyman_pearson() {
    let (n, rho) = (8usize, 0.45);
    let f = SetFamily::explicit(n, vec![vec![1, 3, 4, 6]]).unwrap();
    let np = lr_detector(DetectorName::NpSingleton, rho, &f);
    let lr = lr_detector(DetectorName::BayesLr, rho, &f);
    let model = CorrelationModel::new(n, 4, rho).unwrap();
    for t in 0..2000u64 {
        let mut rng = stream(49, 0, t);
        let x = if t % 2 == 0 { sample_null(n, &mut rng) } else { sample_alternative(&model, &[1, 3, 4, 6], &mut rng).unwrap() };
        let a = np.decide_formula(x.values(), rho).unwrap();
        let b = lr.decide_formula(x.values(), rho).unwrap();
        assert_eq!(a.reject, b.reject, "trial {t}");
    }
}

#[test]
fn np_zero_observation_rejects() {
    let f = SetFamily::explicit(5, vec![vec![0, 1, 2]]).unwrap();
    let np = lr_detector(DetectorName::NpSingleton, 0.3, &f);
    let d = np.decide_formula(&[0.0; 5], 0.3).unwrap();
    assert!(np_log_det_threshold(3, 0.3) < 0.0);
    assert!((d.threshold - log_det_as(3, 0.3)).abs() < 1e-15);
    assert!(d.reject);
}

#[test]
fn lr_vanishes_as_rho_goes_to_zero() {
    let f = SetFamily::k_sets(10, 3).unwrap();
    for t in 0..100u64 {
        let x = sample_null(10, &mut stream(50, 0, t)).into_values();
        let l = log_bayes_lr(&x, &f, 1e-8, 1000).unwrap().exp();
        assert!((l - 1.0).abs() < 1e-4);
    }
}

#[test]
fn lr_matches_direct_average() {
    let (n, k, rho) = (7usize, 2usize, 0.5);
    let f = SetFamily::k_sets(n, k).unwrap();
    let members = combinations(n, k);
    for t in 0..50u64 {
        let x = sample_null(n, &mut stream(51, 0, t)).into_values();
        let direct: f64 = members
            .iter()
            .map(|s| (0.5 * dense_quad(&x, s, rho)).exp() / (0.5 * log_det_as(k, rho)).exp())
            .sum::<f64>()
            / members.len() as f64;
        let got = log_bayes_lr(&x, &f, rho, 1000).unwrap();
        assert!((got - direct.ln()).abs() < 1e-10);
    }
}

fn risk(detector: DetectorConfig, trials: u64) -> corrdetect::harness::RiskEstimate {
    let cfg = ExperimentConfig {
        family: FamilyConfig::Ksets { n: 30, k: 3 },
        model: ModelConfig { rho: 0.6, block: None },
        detector,
        trials,
        seed: 77,
        risk_mode: RiskMode::AverageUniformS,
    };
    estimate_risk(&Experiment::from_config(&cfg).unwrap()).unwrap()
}

fn se_total(r: &corrdetect::harness::RiskEstimate) -> f64 {
    let t = r.trials as f64;
    (r.type1 * (1.0 - r.type1) / t + r.type2 * (1.0 - r.type2) / t).sqrt()
}

#[test]
fn bayes_lr_has_smallest_average_risk() {
    let trials = 10_000;
    let bayes = risk(DetectorConfig::new(DetectorName::BayesLr), trials);
    let mut gof = DetectorConfig::new(DetectorName::Gof).with_rule(ThresholdRule::calibrated(0.05));
    gof.params.m = Some(10);
    let others = vec![
        DetectorConfig::new(DetectorName::SquaredSum),
        DetectorConfig::new(DetectorName::Glrt),
        DetectorConfig::new(DetectorName::LocalSquaredSum),
        DetectorConfig::new(DetectorName::LocalSquaredSum).with_rule(ThresholdRule::calibrated(0.05)),
        DetectorConfig::new(DetectorName::DyadicScan),
        gof,
    ];
    for cfg in others {
        let r = risk(cfg.clone(), trials);
        let slack = 2.0 * (se_total(&bayes).powi(2) + se_total(&r).powi(2)).sqrt();
        println!("{:?}: {:.4} vs bayes {:.4}", cfg.name, r.total, bayes.total);
        assert!(bayes.total <= r.total + slack, "{:?}: {} < {}", cfg.name, r.total, bayes.total);
    }
}

#[test]
fn half_deviation_frequency_bound() {
    for k in [10usize, 40] {
        for rho in [0.5, 0.8, 0.95] {
            for t in [0.5, 1.0, 2.0] {
                let c = half_deviation_check(k, rho, t, 4000, 3).unwrap();
                assert!(c.holds(3.0), "{c:?}");
            }
        }
    }
}

#[test]
fn detector_config_rejects_unknown_fields() {
    let err = serde_json::from_str::<DetectorConfig>(r#"{"name":"glrt","params":{"rho":0.3,"bogus":1}}"#).unwrap_err();
    assert!(err.to_string().contains("bogus"));
    let cfg: DetectorConfig = serde_json::from_str(r#"{"name":"gof","params":{"m":50}}"#).unwrap();
    let d = Detector::from_config(&cfg, None).unwrap();
    let f = SetFamily::k_sets(1000, 10).unwrap();
    let t = d.formula_threshold(&ThresholdContext::new(&f, 0.5)).unwrap();
    assert_eq!(t, gof_threshold(1000, 50));
    assert!(Detector::from_config(&DetectorConfig::new(DetectorName::Glrt), None).is_err());
}
