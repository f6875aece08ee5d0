use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::RegressorSpec;
use super::train_regressor;
use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::scalar::Scalar;

/// Anything that can be fitted on one split and scored on another.
pub trait Estimator<T: Scalar> {
    /// Machine name used in the CSV `kind` column.
    fn name(&self) -> String;
    /// Human-readable name for the text table.
    fn display_name(&self) -> String {
        self.name()
    }
    fn hyperparams_digest(&self) -> String;
    fn fit_predict(
        &self,
        x_train: ArrayView2<T>,
        y_train: ArrayView1<T>,
        x_test: ArrayView2<T>,
    ) -> Result<Array1<T>>;
}

impl<T: Scalar> Estimator<T> for RegressorSpec {
    fn name(&self) -> String {
        self.kind.to_string()
    }

    fn display_name(&self) -> String {
        self.kind.display_name().to_string()
    }

    fn hyperparams_digest(&self) -> String {
        RegressorSpec::hyperparams_digest(self).unwrap_or_else(|_| "invalid".into())
    }

    fn fit_predict(
        &self,
        x_train: ArrayView2<T>,
        y_train: ArrayView1<T>,
        x_test: ArrayView2<T>,
    ) -> Result<Array1<T>> {
        train_regressor(x_train, y_train, self)?.predict(x_test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub kind: String,
    pub display_name: String,
    /// `None` when the fit failed.
    pub rmse: Option<f64>,
    pub train_seconds: f64,
    pub hyperparams_digest: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    /// Ascending RMSE; failed rows last.
    pub rows: Vec<BenchmarkRow>,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: Option<u64>,
    pub notes: Vec<String>,
}

/// Held-out fraction used by [`benchmark_regressors`].
pub const BENCH_TEST_FRACTION: f64 = 0.2;

/// Fits every estimator on the same train split and scores RMSE on the test split.
pub fn benchmark_on_split<T: Scalar>(
    x_train: ArrayView2<T>,
    y_train: ArrayView1<T>,
    x_test: ArrayView2<T>,
    y_test: ArrayView1<T>,
    estimators: &[&dyn Estimator<T>],
) -> Result<BenchmarkTable> {
    if y_test.is_empty() {
        return Err(Error::Empty("benchmark test split"));
    }
    let truth = y_test.to_vec();
    let mut rows: Vec<BenchmarkRow> = estimators
        .iter()
        .map(|est| {
            let start = Instant::now();
            let outcome = est
                .fit_predict(x_train, y_train, x_test)
                .and_then(|pred| rmse(&truth, &pred.to_vec()));
            let train_seconds = start.elapsed().as_secs_f64();
            let (rmse, error) = match outcome {
                Ok(v) if v.is_finite() => (Some(v.as_f64()), None),
                Ok(_) => (None, Some("non-finite rmse".to_string())),
                Err(e) => {
                    log::warn!("benchmark {} failed: {e}", est.name());
                    (None, Some(e.to_string()))
                }
            };
            BenchmarkRow {
                kind: est.name(),
                display_name: est.display_name(),
                rmse,
                train_seconds,
                hyperparams_digest: est.hyperparams_digest(),
                error,
            }
        })
        .collect();
    rows.sort_by(|a, b| match (a.rmse, b.rmse) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(BenchmarkTable {
        rows,
        n_train: x_train.nrows(),
        n_test: x_test.nrows(),
        split_seed: None,
        notes: Vec::new(),
    })
}

/// Seeded 80/20 split shared by all `specs`, then [`benchmark_on_split`].
pub fn benchmark_regressors<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    specs: &[RegressorSpec],
    split_seed: u64,
) -> Result<BenchmarkTable> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let n = x.nrows();
    let n_test = ((n as f64) * BENCH_TEST_FRACTION).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::InvalidInput(format!("cannot split {n} rows for benchmarking")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let (test, train) = idx.split_at(n_test);
    let x_train = x.select(Axis(0), train);
    let y_train = y.select(Axis(0), train);
    let x_test = x.select(Axis(0), test);
    let y_test = y.select(Axis(0), test);
    let estimators: Vec<&dyn Estimator<T>> = specs.iter().map(|s| s as &dyn Estimator<T>).collect();
    let mut table = benchmark_on_split(
        x_train.view(),
        y_train.view(),
        x_test.view(),
        y_test.view(),
        &estimators,
    )?;
    table.split_seed = Some(split_seed);
    table
        .notes
        .push(format!("held-out fraction {BENCH_TEST_FRACTION}, shuffled with split seed"));
    Ok(table)
}

impl BenchmarkTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["kind", "rmse", "train_seconds", "hyperparams_digest"])?;
        for r in &self.rows {
            w.write_record([
                r.kind.clone(),
                r.rmse.map_or("failed".into(), |v| v.to_string()),
                format!("{:.3}", r.train_seconds),
                r.hyperparams_digest.clone(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }
}

impl fmt::Display for BenchmarkTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.display_name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(f, "{:<width$}  {:>8}", "Model", "RMSE")?;
        writeln!(f, "{}", "-".repeat(width + 10))?;
        for r in &self.rows {
            match r.rmse {
                Some(v) => writeln!(f, "{:<width$}  {:>8.2}", r.display_name, v)?,
                None => writeln!(f, "{:<width$}  {:>8}", r.display_name, "failed")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::RegressorKind;
    use ndarray::Array2;

    struct Oracle;

    impl Estimator<f64> for Oracle {
        fn name(&self) -> String {
            "oracle".into()
        }
        fn hyperparams_digest(&self) -> String {
            "-".into()
        }
        fn fit_predict(&self, _: ArrayView2<f64>, _: ArrayView1<f64>, x: ArrayView2<f64>) -> Result<Array1<f64>> {
            Ok(x.column(0).mapv(|v| 2.0 * v + 1980.0))
        }
    }

    struct Broken;

    impl Estimator<f64> for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn hyperparams_digest(&self) -> String {
            "-".into()
        }
        fn fit_predict(&self, _: ArrayView2<f64>, _: ArrayView1<f64>, _: ArrayView2<f64>) -> Result<Array1<f64>> {
            Err(Error::Fit("boom".into()))
        }
    }

    #[test]
    fn perfect_model_ranks_first_and_failure_last() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| (i * (j + 1)) as f64 / 7.0);
        let y = x.column(0).mapv(|v| 2.0 * v + 1980.0);
        let (xtr, xte) = (x.slice(ndarray::s![..30, ..]), x.slice(ndarray::s![30.., ..]));
        let (ytr, yte) = (y.slice(ndarray::s![..30]), y.slice(ndarray::s![30..]));
        let knn = RegressorSpec::new(RegressorKind::KNearestNeighbors);
        let table = benchmark_on_split(xtr, ytr, xte, yte, &[&Broken, &knn, &Oracle]).unwrap();
        assert_eq!(table.rows[0].kind, "oracle");
        assert_eq!(table.rows[0].rmse, Some(0.0));
        assert_eq!(table.rows[2].kind, "broken");
        assert!(table.rows[2].rmse.is_none());
        let text = table.to_string();
        assert!(text.contains("failed"));
        assert!(text.contains("K-Nearest Neighbors"));
    }

    #[test]
    fn csv_columns() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let y = x.column(0).mapv(|v| v + 1990.0);
        let table = benchmark_regressors(x.view(), y.view(), &[RegressorSpec::new(RegressorKind::LinearRegression)], 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bench.csv");
        table.write_csv(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("kind,rmse,train_seconds,hyperparams_digest\n"));
        assert!(text.contains("linear_regression"));
        assert_eq!(table.n_test, 4);
    }
}
