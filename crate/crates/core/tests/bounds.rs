use corrdetect::bounds::*;
use corrdetect::classes::{overlap_size, MgfMode, SetFamily};
use corrdetect::detectors::{DetectorConfig, DetectorName};
use corrdetect::harness::{estimate_risk, Experiment, ExperimentConfig, FamilyConfig, ModelConfig, RiskMode};
use corrdetect::special::normal_cdf;

fn pair_mgf(f: &SetFamily, nu: f64) -> f64 {
    let members = f.members(100_000).unwrap();
    let mut acc = 0.0;
    for a in &members {
        for b in &members {
            acc += (nu * overlap_size(a, b) as f64).exp();
        }
    }
    acc / (members.len() * members.len()) as f64
}

#[test]
fn nu_examples_and_monotonicity() {
    for a in [0.3, 1.0, 2.5] {
        assert_eq!(nu(0.0, a), 0.0);
    }
    assert!((nu(0.5, 1.0) - 0.477_174).abs() < 1e-6);
    for a in [0.5, 1.0, 3.0] {
        let mut prev = nu(0.0, a);
        for i in 1..10_000 {
            let v = nu(i as f64 / 10_000.0, a);
            assert!(v > prev);
            prev = v;
        }
    }
}

#[test]
fn zero_correlation_gives_normal_mass() {
    let f = SetFamily::intervals(30, 5).unwrap();
    assert_eq!(bayes_lower_bound(&f, 0.0, 1.0, MgfMode::Exact).unwrap().lower_bound, 0.6);
    let r = bayes_lower_bound(&f, 0.0, 1.7, MgfMode::Exact).unwrap();
    assert!((r.lower_bound - (2.0 * normal_cdf(1.7) - 1.0)).abs() < 1e-12);
}

#[test]
fn disjoint_family_at_the_condition_boundary() {
    let (blocks, k) = (6usize, 3usize);
    let f = SetFamily::explicit(blocks * k, (0..blocks).map(|b| (b * k..b * k + k).collect()).collect()).unwrap();
    let rho = rho_for_nu((blocks as f64).ln() / k as f64).unwrap();
    let r = bayes_lower_bound(&f, rho, 1.0, MgfMode::Exact).unwrap();
    let n = blocks as f64;
    let want_mgf = 1.0 - 1.0 / n + (nu_rho(rho) * k as f64).exp() / n;
    assert!((r.mgf_value - want_mgf).abs() < 1e-9);
    assert!(r.lower_bound >= 0.3);
    assert_eq!(r.citation, "Corollary 2.1");
    let c = corollary_condition(&f, rho).unwrap();
    assert!(c.condition_holds && c.guaranteed_bound == 0.3);
}

#[test]
fn exact_mgf_matches_pair_enumeration() {
    let families = [
        SetFamily::intervals(15, 4).unwrap(),
        SetFamily::k_sets(9, 3).unwrap(),
        SetFamily::hypercubes(5, vec![2, 3]).unwrap(),
        SetFamily::explicit(10, vec![vec![0, 1, 2], vec![2, 3, 4], vec![5, 6, 9]]).unwrap(),
    ];
    for f in &families {
        for rho in [0.1, 0.4, 0.7] {
            let r = bayes_lower_bound(f, rho, 1.0, MgfMode::Exact).unwrap();
            let want = pair_mgf(f, nu_rho(rho));
            assert!((r.mgf_value - want).abs() < 1e-9 * want, "{}: {} vs {want}", f.name(), r.mgf_value);
            let raw = 0.6 - 0.3 * (want - 1.0).sqrt();
            assert!((r.lower_bound - raw.clamp(0.0, 1.0)).abs() < 1e-9);
        }
    }
}

#[test]
fn bound_nonincreasing_in_rho() {
    let families = [
        SetFamily::intervals(40, 4).unwrap(),
        SetFamily::k_sets(30, 3).unwrap(),
        SetFamily::perfect_matchings(5).unwrap(),
        SetFamily::spanning_trees(4).unwrap(),
    ];
    for f in &families {
        let mode = if f.exact_overlap().is_ok() { MgfMode::Exact } else { MgfMode::CorollaryBound };
        for a in [0.5, 1.0, 2.0] {
            let mut prev = f64::INFINITY;
            for i in 0..200 {
                let b = bayes_lower_bound(f, i as f64 / 200.0, a, mode).unwrap().lower_bound;
                assert!(b <= prev + 1e-15, "{} a={a} i={i}", f.name());
                prev = b;
            }
        }
    }
}

#[test]
fn corollary_mode_is_weaker_than_exact() {
    let families = [
        SetFamily::intervals(40, 4).unwrap(),
        SetFamily::intervals(9, 9).unwrap(),
        SetFamily::k_sets(30, 3).unwrap(),
        SetFamily::k_sets(200, 12).unwrap(),
        SetFamily::hypercubes(6, vec![2, 2]).unwrap(),
        SetFamily::explicit(12, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]]).unwrap(),
    ];
    for f in &families {
        for i in 1..50 {
            let rho = i as f64 / 50.0;
            for a in [0.7, 1.0, 1.4] {
                let exact = bayes_lower_bound(f, rho, a, MgfMode::Exact).unwrap();
                let cor = bayes_lower_bound(f, rho, a, MgfMode::CorollaryBound).unwrap();
                assert!(cor.lower_bound <= exact.lower_bound + 1e-12, "{} rho={rho} a={a}", f.name());
            }
        }
    }
}

#[test]
fn corollary_condition_examples() {
    let m = corollary_condition(&SetFamily::perfect_matchings(7).unwrap(), 0.5).unwrap();
    assert!(m.condition_holds && m.guaranteed_bound == 0.3 && m.citation == "Corollary 2.4");
    let t = corollary_condition(&SetFamily::spanning_trees(7).unwrap(), 0.4).unwrap();
    assert!(t.condition_holds && t.guaranteed_bound == 0.15 && t.citation == "Corollary 2.5");
    assert!(!corollary_condition(&SetFamily::spanning_trees(7).unwrap(), 0.41).unwrap().condition_holds);
    let (n, k) = (1000usize, 10usize);
    let rho = rho_for_nu((1.0 + std::f64::consts::LN_2 * n as f64 / (k * k) as f64).ln()).unwrap();
    let c = corollary_condition(&SetFamily::k_sets(n, k).unwrap(), rho).unwrap();
    assert!(c.condition_holds && c.guaranteed_bound == 0.3 && c.citation == "Corollary 2.3");
    let iv = corollary_condition(&SetFamily::intervals(400, 5).unwrap(), 0.05).unwrap();
    assert_eq!(iv.citation, "Corollary 2.2");
    assert!((iv.rhs - (40f64).ln() / 5.0).abs() < 1e-15);
    assert!(corollary_condition(&SetFamily::hypercubes(5, vec![2, 2]).unwrap(), 0.1).is_err());
}

#[test]
fn optimized_a_is_at_least_a_equals_one() {
    let grid = a_grid();
    assert_eq!(grid.len(), 81);
    assert!(grid.contains(&1.0));
    let f = SetFamily::k_sets(30, 3).unwrap();
    for rho in [0.2, 0.5, 0.8] {
        let one = bayes_lower_bound(&f, rho, 1.0, MgfMode::Exact).unwrap().lower_bound;
        assert!(optimize_a(&f, rho, MgfMode::Exact).unwrap().lower_bound >= one);
    }
}

fn bayes_risk(family: FamilyConfig, rho: f64, trials: u64, seed: u64) -> (f64, f64) {
    let cfg = ExperimentConfig {
        family,
        model: ModelConfig { rho, block: None },
        detector: DetectorConfig::new(DetectorName::BayesLr),
        trials,
        seed,
        risk_mode: RiskMode::AverageUniformS,
    };
    let r = estimate_risk(&Experiment::from_config(&cfg).unwrap()).unwrap();
    let t = trials as f64;
    (r.total, (r.type1 * (1.0 - r.type1) / t + r.type2 * (1.0 - r.type2) / t).sqrt())
}

#[test]
fn simulated_risk_respects_the_bound_at_its_level() {
    let f = SetFamily::intervals(20, 4).unwrap();
    let rho = rho_for_bound(&f, 1.0, MgfMode::Exact, 0.3).unwrap();
    let b = bayes_lower_bound(&f, rho, 1.0, MgfMode::Exact).unwrap().lower_bound;
    assert!((b - 0.3).abs() < 1e-9);
    let (risk, se) = bayes_risk(FamilyConfig::Intervals { n: 20, k: 4, circular: true }, rho, 10_000, 5);
    assert!(risk >= 0.3 - 2.0 * se, "{risk}");
}

#[test]
fn simulated_risk_above_bound_across_families() {
    let cases: Vec<(FamilyConfig, f64)> = vec![
        (FamilyConfig::Ksets { n: 12, k: 3 }, 0.5),
        (FamilyConfig::Intervals { n: 30, k: 5, circular: true }, 0.3),
        (FamilyConfig::Matchings { k: 4 }, 0.5),
        (FamilyConfig::Trees { k: 3 }, 0.4),
        (FamilyConfig::Hypercubes { m: 5, sides: vec![2, 2] }, 0.4),
    ];
    for (fc, rho) in cases {
        let f = fc.build().unwrap();
        let mode = if f.exact_overlap().is_ok() { MgfMode::Exact } else { MgfMode::CorollaryBound };
        let b = bayes_lower_bound(&f, rho, 1.0, mode).unwrap().lower_bound;
        let (risk, se) = bayes_risk(fc, rho, 4000, 9);
        assert!(risk >= b - 3.0 * se, "{}: {risk} < {b}", f.name());
    }
}

#[test]
fn report_serializes_infinite_mgf_as_null() {
    let f = SetFamily::k_sets(5, 5).unwrap();
    let r = bayes_lower_bound(&f, 1.0 - 1e-300, 1.0, MgfMode::Exact);
    if let Ok(r) = r {
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["lower_bound"].as_f64().unwrap() >= 0.0);
    }
    let r = bayes_lower_bound(&f, 0.9, 1.0, MgfMode::Exact).unwrap();
    assert_eq!(r.lower_bound, 0.0);
    assert!(r.raw_bound < 0.0);
    assert!(!r.regime_notes.is_empty());
}
