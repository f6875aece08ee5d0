use lyricsense_core::metrics::rmse;
use lyricsense_core::regressor::{
    benchmark_regressors, predict_year, train_regressor, RegressorKind, RegressorSpec,
};
use lyricsense_core::YearRegressor;
use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// y = 1990 + w·x + N(0, noise_sd²) over standard-normal features.
fn linear_table(n: usize, d: usize, noise_sd: f64, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let noise = Normal::new(0.0, noise_sd).unwrap();
    let w: Vec<f64> = (0..d).map(|_| 2.0 * std.sample(&mut rng)).collect();
    let x = Array2::from_shape_fn((n, d), |_| std.sample(&mut rng));
    let y = x
        .rows()
        .into_iter()
        .map(|r| 1990.0 + r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + noise.sample(&mut rng))
        .collect();
    (x, y)
}

#[test]
fn linear_models_lead_on_linear_signal() {
    let (x, y) = linear_table(1_000, 24, 2.0, 42);
    let table = benchmark_regressors(x.view(), y.view(), &RegressorSpec::defaults(0), 9).unwrap();
    println!("{table}");
    let svr = table.rows.iter().find(|r| r.kind == "svr_linear").unwrap();
    assert!(svr.rmse.unwrap() <= 3.0, "svr rmse {:?}", svr.rmse);
    let top: Vec<&str> = table.rows[..2].iter().map(|r| r.kind.as_str()).collect();
    assert!(top.contains(&"svr_linear") && top.contains(&"linear_regression"), "{top:?}");
    assert!(table.rows.iter().all(|r| r.error.is_none()));
}

#[test]
fn benchmark_is_deterministic_and_rmse_matches_oracle() {
    let (x, y) = linear_table(300, 8, 2.0, 3);
    let specs = RegressorSpec::defaults(5);
    let a = benchmark_regressors(x.view(), y.view(), &specs, 17).unwrap();
    let b = benchmark_regressors(x.view(), y.view(), &specs, 17).unwrap();
    let strip = |t: &lyricsense_core::regressor::BenchmarkTable| {
        t.rows
            .iter()
            .map(|r| (r.kind.clone(), r.rmse, r.hyperparams_digest.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.n_test, 60);

    // Re-derive each RMSE from the same split by hand.
    let mut idx: Vec<usize> = (0..300).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(17));
    let (test, train) = idx.split_at(60);
    let (xtr, ytr) = (x.select(Axis(0), train), y.select(Axis(0), train));
    let (xte, yte) = (x.select(Axis(0), test), y.select(Axis(0), test));
    for spec in &specs {
        let model = train_regressor(xtr.view(), ytr.view(), spec).unwrap();
        let pred = model.predict(xte.view()).unwrap();
        let mut sq = 0.0;
        for (p, t) in pred.iter().zip(yte.iter()) {
            sq += (p - t) * (p - t);
        }
        let oracle = (sq / 60.0).sqrt();
        let row = a.rows.iter().find(|r| r.kind == spec.kind.as_str()).unwrap();
        assert!((row.rmse.unwrap() - oracle).abs() < 1e-9, "{}", spec.kind);
        assert!((rmse(&yte.to_vec(), &pred.to_vec()).unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn split_seed_changes_the_split() {
    let (x, y) = linear_table(200, 4, 2.0, 8);
    let specs = [RegressorSpec::new(RegressorKind::LinearRegression)];
    let a = benchmark_regressors(x.view(), y.view(), &specs, 1).unwrap();
    let b = benchmark_regressors(x.view(), y.view(), &specs, 2).unwrap();
    assert_ne!(a.rows[0].rmse, b.rows[0].rmse);
}

#[test]
fn f32_and_f64_agree_on_ols() {
    let (x, y) = linear_table(200, 6, 1.0, 4);
    let spec = RegressorSpec::new(RegressorKind::LinearRegression);
    let m64 = train_regressor(x.view(), y.view(), &spec).unwrap();
    let x32 = x.mapv(|v| v as f32);
    let y32 = y.mapv(|v| v as f32);
    let m32 = train_regressor(x32.view(), y32.view(), &spec).unwrap();
    let p64 = m64.predict(x.view()).unwrap();
    let p32 = m32.predict(x32.view()).unwrap();
    for (a, b) in p64.iter().zip(p32.iter()) {
        assert!((a - *b as f64).abs() < 0.05, "{a} vs {b}");
    }
}

#[test]
fn artifact_round_trip_preserves_predictions() {
    let (x, y) = linear_table(120, 5, 2.0, 6);
    for spec in RegressorSpec::defaults(1) {
        let model: YearRegressor = train_regressor(x.view(), y.view(), &spec).unwrap();
        let back = YearRegressor::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model.predict(x.view()).unwrap(), back.predict(x.view()).unwrap());
        let est = predict_year(&back, x.row(0).as_slice().unwrap()).unwrap();
        assert!((1960..=2022).contains(&est.display_year));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fits_are_invariant_to_row_order(seed in 0u64..1_000, kind in 0usize..5) {
        let (x, y) = linear_table(60, 4, 2.0, seed);
        let kind = RegressorKind::ALL[kind];
        let spec = match kind {
            RegressorKind::RandomForest => RegressorSpec::new(kind).with("n_trees", 10),
            RegressorKind::GradientBoostedTrees => RegressorSpec::new(kind).with("n_rounds", 10),
            _ => RegressorSpec::new(kind),
        }
        .with_seed(3);
        let mut order: Vec<usize> = (0..60).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
        let xs = x.select(Axis(0), &order);
        let ys = y.select(Axis(0), &order);
        let a = train_regressor(x.view(), y.view(), &spec).unwrap().predict(x.view()).unwrap();
        let b = train_regressor(xs.view(), ys.view(), &spec).unwrap().predict(x.view()).unwrap();
        for (p, q) in a.iter().zip(b.iter()) {
            prop_assert!((p - q).abs() < 1e-6);
        }
    }
}
