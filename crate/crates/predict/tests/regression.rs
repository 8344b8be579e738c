use lvbreak_core::{optimal_policy, Constants};
use lvbreak_predict::*;
use lvbreak_recsys::UserFeatures;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn dataset(xs: &[Vec<f64>], ys: &[f64]) -> TreatmentDataset {
    let mut data = TreatmentDataset::new(0.05, 100.0).unwrap();
    for (x, &y) in xs.iter().zip(ys) {
        data.push(UserFeatures::new(x.clone()).unwrap(), y).unwrap();
    }
    data
}

#[test]
fn exact_linear_targets_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs = random_design(&mut rng, 200, 10);
    let w: Vec<f64> = (0..11).map(|_| rng.random_range(-1.0..1.0)).collect();
    // Shift the intercept so every target stays nonnegative.
    let mut w = w;
    w[10] += 20.0;
    let ys: Vec<f64> = xs.iter().map(|x| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[10]).collect();
    let reg = fit_ols(&dataset(&xs, &ys), DEFAULT_RIDGE).unwrap();
    for (a, b) in reg.weights.iter().zip(&w) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
    assert!(reg.train_rmse < 1e-8);
}

#[test]
fn matches_independent_svd_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs = random_design(&mut rng, 60, 5);
    let ys: Vec<f64> = (0..60).map(|_| rng.random_range(5.0..15.0)).collect();
    let reg = fit_ols(&dataset(&xs, &ys), DEFAULT_RIDGE).unwrap();
    let a = nalgebra::DMatrix::from_fn(60, 6, |i, j| if j < 5 { xs[i][j] } else { 1.0 });
    let b = nalgebra::DVector::from_column_slice(&ys);
    let w = a.svd(true, true).solve(&b, 1e-14).unwrap();
    for (x, y) in reg.weights.iter().zip(w.iter()) {
        assert!((x - y).abs() < 1e-7);
    }
}

#[test]
fn noisy_fit_rmse_tracks_noise_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs = random_design(&mut rng, 200, 10);
    let w: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let ys: Vec<f64> =
        xs.iter().map(|x| 30.0 + x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise.sample(&mut rng)).collect();
    let reg = fit_ols(&dataset(&xs, &ys), DEFAULT_RIDGE).unwrap();
    assert!((reg.train_rmse - 0.1).abs() < 0.02, "rmse {}", reg.train_rmse);
}

#[test]
fn rmse_matches_one_pass_computation() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs = random_design(&mut rng, 50, 3);
    let ys: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..20.0)).collect();
    let data = dataset(&xs, &ys);
    let reg = Regressor { schema_version: FEATURE_SCHEMA_VERSION, p: 0.05, horizon: 100.0, weights: vec![1.5, -2.0, 0.5, 8.0], train_rmse: 0.0 };
    // Running mean of squared residuals.
    let mut mean = 0.0;
    for (k, (x, y)) in xs.iter().zip(&ys).enumerate() {
        let raw = 1.5 * x[0] - 2.0 * x[1] + 0.5 * x[2] + 8.0;
        let e = raw.max(0.0) - y;
        mean += (e * e - mean) / (k + 1) as f64;
    }
    assert!((rmse(&reg, &data).unwrap() - mean.sqrt()).abs() < 1e-12);
}

#[test]
fn oracle_is_unimodal_with_closed_form_peak() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let mean_beta = rng.random_range(1.4..5.0);
        let theta = Constants::DEFAULT.with_beta(mean_beta).unwrap();
        let opt = optimal_policy(&theta).unwrap();
        let grid: Vec<f64> = (0..=1000).map(|i| oracle_predict(&Constants::DEFAULT, mean_beta, i as f64 * 1e-3).unwrap()).collect();
        let peak = grid.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0;
        assert!((peak as f64 * 1e-3 - opt.p_opt).abs() <= 1e-3);
        assert!(grid[..=peak].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(grid[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_is_order_invariant(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = random_design(&mut rng, 40, 4);
        let ys: Vec<f64> = (0..40).map(|_| rng.random_range(0.0..20.0)).collect();
        let a = fit_ols(&dataset(&xs, &ys), DEFAULT_RIDGE).unwrap();
        let mut idx: Vec<usize> = (0..40).collect();
        idx.shuffle(&mut rng);
        let xs2: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
        let ys2: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        let b = fit_ols(&dataset(&xs2, &ys2), DEFAULT_RIDGE).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn prediction_is_affine_before_clipping(
        f in prop::collection::vec(-3.0f64..3.0, 4), w in prop::collection::vec(-2.0f64..2.0, 5), s in 0.1f64..10.0,
    ) {
        let reg = Regressor { schema_version: FEATURE_SCHEMA_VERSION, p: 0.1, horizon: 100.0, weights: w.clone(), train_rmse: 0.0 };
        let scaled_feats: Vec<f64> = f.iter().map(|v| v * s).collect();
        let mut scaled_w: Vec<f64> = w[..4].iter().map(|v| v / s).collect();
        scaled_w.push(w[4]);
        let reg2 = Regressor { weights: scaled_w, ..reg.clone() };
        let a = reg.raw_predict(&UserFeatures::new(f).unwrap()).unwrap();
        let b = reg2.raw_predict(&UserFeatures::new(scaled_feats).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }
}
