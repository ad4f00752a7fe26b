//! Statistical behaviour of the GLRT under clutter that lies on the grid.

use mts_core::beams::BeamPlan;
use mts_core::detector::{monte_carlo_statistics, sample_grid, GlrDetector, GlrModel, RocCurve, roc_from_statistics};
use mts_core::echo::EchoSynthesizer;
use mts_core::scene::{Scatterer, Scene, SystemConfig};
use num_complex::Complex64;
use statrs::distribution::{ContinuousCDF, Normal};

// two-sided Mann-Whitney U test, normal approximation with tie correction
fn mann_whitney_p(x: &[f64], y: &[f64]) -> f64 {
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let mut all: Vec<(f64, bool)> = x.iter().map(|&v| (v, true)).chain(y.iter().map(|&v| (v, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = all.len();
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        ranks[i..=j].iter_mut().for_each(|v| *v = r);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let r1: f64 = all.iter().zip(&ranks).filter(|(a, _)| a.1).map(|(_, r)| r).sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let nt = n1 + n2;
    let var = n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    let z = (u - n1 * n2 / 2.0) / var.sqrt();
    2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z.abs()))
}

#[test]
fn rank_test_detects_a_shift() {
    let x: Vec<f64> = (0..200).map(|k| k as f64).collect();
    let y: Vec<f64> = (0..200).map(|k| k as f64 + 60.0).collect();
    assert!(mann_whitney_p(&x, &y) < 1e-6);
    assert!(mann_whitney_p(&x, &x) > 0.99);
}

#[test]
fn on_grid_clutter_is_indistinguishable_from_noise() {
    let cfg = SystemConfig::default().with_snr_db(0.0);
    let plan = BeamPlan::default_for(&cfg).unwrap();
    let reference = Scene::reference(0, 1);
    let b = plan.nearest_beam(reference.targets[0].theta);
    let cand = reference.targets[0].frequencies(&cfg);
    let grid = sample_grid(b, &plan, &cfg, 8, 4, 7.0).unwrap();
    let scatterers = grid
        .points
        .iter()
        .filter(|p| p.0 > 0.0)
        .enumerate()
        .map(|(k, &(pr, ps))| Scatterer {
            theta: cfg.angle_from_spatial(ps).unwrap(),
            range: cfg.range_from_frequency(pr),
            alpha: Complex64::from_polar(3.0, k as f64),
        })
        .collect();
    let clutter = EchoSynthesizer::new(&Scene { targets: vec![], scatterers }, &cfg).unwrap();
    let empty = EchoSynthesizer::new(&Scene::default(), &cfg).unwrap();
    for model in [GlrModel::Joint, GlrModel::PerSlice] {
        let det = GlrDetector::new(grid.clone(), &plan, &cfg, model).unwrap();
        let with = monte_carlo_statistics(&clutter, &det, &plan, &cand, cfg.noise_var, 500, 11);
        let without = monte_carlo_statistics(&empty, &det, &plan, &cand, cfg.noise_var, 500, 12);
        match (with, without) {
            (Ok(a), Ok(b)) => {
                let p = mann_whitney_p(&a, &b);
                assert!(p > 0.01, "{model:?}: p = {p}");
            }
            // the per-slice form cannot separate an in-beam candidate from the grid
            (Err(mts_core::Error::Undetectable { .. }), _) => assert_eq!(model, GlrModel::PerSlice),
            (Err(e), _) | (_, Err(e)) => panic!("{e}"),
        }
    }
}

#[test]
fn detection_probability_reaches_one_at_zero_threshold() {
    let h0 = vec![0.1, 0.2, 0.3];
    let h1 = vec![0.05, 0.5, 0.9];
    let curve = RocCurve { snr_db: 0.0, points: roc_from_statistics(&h0, &h1, 10).unwrap() };
    let low = curve.points.iter().filter(|p| p.gamma <= 0.0).map(|p| p.p_d).fold(0.0, f64::max);
    assert_eq!(low, 1.0);
    assert_eq!(curve.detection_at(1.0), 1.0);
}
