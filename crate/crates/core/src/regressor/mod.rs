//! Release-year regressors over frozen embeddings.
//!
//! Five families share one entry point, [`train_regressor`]. Training rows
//! are put into a canonical order (lexicographic on features, then target)
//! before fitting, so a fitted model depends only on the multiset of rows
//! and never on the order they were supplied in.

mod bench;
mod linear;
mod params;
mod tree;

use std::cmp::Ordering;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bench::{benchmark_on_split, benchmark_regressors, BenchmarkRow, BenchmarkTable, Estimator};
pub use linear::{fit_least_squares, fit_linear_svr, LinearModel, Standardizer};
pub use params::{
    BoostParams, ForestParams, KnnParams, LinearParams, Params, RegressorKind, RegressorSpec,
    SvrParams, TreeParams,
};
pub use tree::{Boosted, Forest, Node, Tree};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MIN_TRAIN_ROWS: usize = 10;
pub const FIRST_YEAR: i32 = 1960;
pub const LAST_YEAR: i32 = 2022;

/// Memorised training set for nearest-neighbour prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct KnnModel<T> {
    pub k: usize,
    pub rows: usize,
    pub cols: usize,
    /// Row-major training features in canonical order.
    pub features: Vec<T>,
    pub targets: Vec<T>,
}

impl<T: Scalar> KnnModel<T> {
    pub fn predict_row(&self, x: ArrayView1<T>) -> T {
        let mut dist: Vec<(T, usize)> = (0..self.rows)
            .map(|i| {
                let row = &self.features[i * self.cols..(i + 1) * self.cols];
                let d = row
                    .iter()
                    .zip(x.iter())
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>();
                (d, i)
            })
            .collect();
        // Equal distances resolve by canonical row index.
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        let k = self.k.min(self.rows);
        dist[..k].iter().map(|&(_, i)| self.targets[i]).sum::<T>() / T::count(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", bound = "T: Scalar")]
pub enum FittedModel<T> {
    Linear(LinearModel<T>),
    Forest(Forest<T>),
    Boosted(Boosted<T>),
    Knn(KnnModel<T>),
}

/// A fitted regressor with everything needed to reproduce its predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RegressorArtifact<T> {
    pub spec: RegressorSpec,
    pub params: Params,
    pub hidden_size: usize,
    pub standardizer: Option<Standardizer<T>>,
    pub model: FittedModel<T>,
    pub n_train: usize,
    /// SHA-256 over the canonically ordered training rows.
    pub training_digest: String,
    pub warnings: Vec<String>,
}

fn cmp_rows<T: Scalar>(a: ArrayView1<T>, b: ArrayView1<T>) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn canonical<T: Scalar>(x: ArrayView2<T>, y: ArrayView1<T>) -> (Array2<T>, Array1<T>) {
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| {
        cmp_rows(x.row(a), x.row(b))
            .then_with(|| y[a].partial_cmp(&y[b]).unwrap_or(Ordering::Equal))
    });
    (x.select(Axis(0), &order), y.select(Axis(0), &order))
}

fn digest<T: Scalar>(x: &Array2<T>, y: &Array1<T>) -> String {
    let mut h = Sha256::new();
    h.update((x.nrows() as u64).to_le_bytes());
    h.update((x.ncols() as u64).to_le_bytes());
    for (row, t) in x.rows().into_iter().zip(y.iter()) {
        for v in row.iter() {
            h.update(v.as_f64().to_le_bytes());
        }
        h.update(t.as_f64().to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Fits `spec` on rows of `x` against targets `y`.
pub fn train_regressor<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    spec: &RegressorSpec,
) -> Result<RegressorArtifact<T>> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < MIN_TRAIN_ROWS {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_TRAIN_ROWS} training rows, got {}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidInput("embedding matrix has no columns".into()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in training data".into()));
    }
    let params = spec.params()?;
    let mut warnings = Vec::new();
    if y.iter().all(|&v| v == y[0]) {
        let msg = "constant target; fitting anyway".to_string();
        log::warn!("{}: {msg}", spec.kind);
        warnings.push(msg);
    }

    let (xc, yc) = canonical(x, y);
    let training_digest = digest(&xc, &yc);
    let standardizer = spec.kind.standardizes().then(|| Standardizer::fit(xc.view()));
    let features = match &standardizer {
        Some(s) => s.transform(xc.view()),
        None => xc,
    };
    let xv = features.view();
    let yv = yc.view();
    let model = match &params {
        Params::LinearRegression(p) => FittedModel::Linear(fit_least_squares(xv, yv, p)?),
        Params::SvrLinear(p) => FittedModel::Linear(fit_linear_svr(xv, yv, p, spec.seed)?),
        Params::KNearestNeighbors(p) => FittedModel::Knn(KnnModel {
            k: p.k,
            rows: xv.nrows(),
            cols: xv.ncols(),
            features: xv.iter().copied().collect(),
            targets: yv.to_vec(),
        }),
        Params::RandomForest(p) => FittedModel::Forest(Forest::fit(xv, yv, p, spec.seed)),
        Params::GradientBoostedTrees(p) => FittedModel::Boosted(Boosted::fit(xv, yv, p, spec.seed)),
    };
    Ok(RegressorArtifact {
        spec: spec.clone(),
        params,
        hidden_size: x.ncols(),
        standardizer,
        model,
        n_train: x.nrows(),
        training_digest,
        warnings,
    })
}

/// Raw estimate plus the rounded year clamped to the supported range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearEstimate {
    pub raw_estimate: f64,
    pub display_year: i32,
}

impl YearEstimate {
    pub fn from_raw(raw: f64) -> Self {
        Self {
            raw_estimate: raw,
            display_year: (raw.round() as i32).clamp(FIRST_YEAR, LAST_YEAR),
        }
    }
}

impl<T: Scalar> RegressorArtifact<T> {
    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.hidden_size {
            return Err(Error::DimensionMismatch {
                expected: self.hidden_size,
                got,
            });
        }
        Ok(())
    }

    fn predict_prepared(&self, row: ArrayView1<T>) -> T {
        match &self.model {
            FittedModel::Linear(m) => m.predict_row(row),
            FittedModel::Forest(m) => m.predict_row(row),
            FittedModel::Boosted(m) => m.predict_row(row),
            FittedModel::Knn(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Result<Array1<T>> {
        self.check_dim(x.ncols())?;
        let prepared = match &self.standardizer {
            Some(s) => s.transform(x),
            None => x.to_owned(),
        };
        Ok(prepared
            .rows()
            .into_iter()
            .map(|r| self.predict_prepared(r))
            .collect())
    }

    pub fn predict_one(&self, embedding: &[T]) -> Result<T> {
        let x = ArrayView2::from_shape((1, embedding.len()), embedding)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(self.predict(x)?[0])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Year estimate for one embedding vector.
pub fn predict_year<T: Scalar>(artifact: &RegressorArtifact<T>, embedding: &[T]) -> Result<YearEstimate> {
    let raw = artifact.predict_one(embedding)?.as_f64();
    if !raw.is_finite() {
        return Err(Error::Fit("non-finite year estimate".into()));
    }
    Ok(YearEstimate::from_raw(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, d), |(i, j)| (((i + 1) * (j + 3) * 37) % 101) as f64 / 10.0)
    }

    #[test]
    fn constant_target_every_kind() {
        let x = grid(30, 4);
        let y = Array1::from_elem(30, 1990.0);
        for spec in RegressorSpec::defaults(0) {
            let spec = if spec.kind == RegressorKind::RandomForest {
                spec.with("n_trees", 5)
            } else if spec.kind == RegressorKind::GradientBoostedTrees {
                spec.with("n_rounds", 5)
            } else {
                spec
            };
            let a = train_regressor(x.view(), y.view(), &spec).unwrap();
            assert_eq!(a.warnings.len(), 1);
            for p in a.predict(grid(7, 4).view()).unwrap() {
                assert_relative_eq!(p, 1990.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn knn_one_memorizes() {
        let x = grid(25, 3);
        let y = Array1::from_shape_fn(25, |i| 1960.0 + i as f64);
        let spec = RegressorSpec::new(RegressorKind::KNearestNeighbors).with("k", 1);
        let a = train_regressor(x.view(), y.view(), &spec).unwrap();
        let pred = a.predict(x.view()).unwrap();
        let rmse = crate::metrics::rmse(y.as_slice().unwrap(), pred.as_slice().unwrap()).unwrap();
        assert_eq!(rmse, 0.0);
    }

    #[test]
    fn linear_regression_centroid_predicts_mean_target() {
        let x = grid(40, 5);
        let y = Array1::from_shape_fn(40, |i| 1960.0 + ((i * 13) % 60) as f64);
        let a = train_regressor(x.view(), y.view(), &RegressorSpec::new(RegressorKind::LinearRegression)).unwrap();
        let centroid = x.mean_axis(Axis(0)).unwrap();
        let p = a.predict_one(centroid.as_slice().unwrap()).unwrap();
        assert_relative_eq!(p, y.mean().unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn errors() {
        let x = grid(12, 3);
        let y = Array1::from_elem(11, 2000.0);
        let spec = RegressorSpec::new(RegressorKind::LinearRegression);
        assert!(matches!(
            train_regressor(x.view(), y.view(), &spec),
            Err(Error::DimensionMismatch { .. })
        ));
        let small = grid(5, 3);
        assert!(train_regressor(small.view(), Array1::from_elem(5, 2000.0).view(), &spec).is_err());
        let a = train_regressor(x.view(), Array1::from_elem(12, 2000.0).view(), &spec).unwrap();
        assert!(matches!(predict_year(&a, &[1.0, 2.0]), Err(Error::DimensionMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn clamp_display_year() {
        let e = YearEstimate::from_raw(2031.4);
        assert_eq!(e.display_year, 2022);
        assert_eq!(e.raw_estimate, 2031.4);
        assert_eq!(YearEstimate::from_raw(1899.0).display_year, 1960);
        assert_eq!(YearEstimate::from_raw(1987.5).display_year, 1988);
    }

    #[test]
    fn artifact_json_round_trip() {
        let x = grid(20, 3);
        let y = Array1::from_shape_fn(20, |i| 1970.0 + i as f64);
        for spec in RegressorSpec::defaults(1) {
            let spec = match spec.kind {
                RegressorKind::RandomForest => spec.with("n_trees", 3),
                RegressorKind::GradientBoostedTrees => spec.with("n_rounds", 3),
                _ => spec,
            };
            let a = train_regressor(x.view(), y.view(), &spec).unwrap();
            let b = RegressorArtifact::<f64>::from_json(&a.to_json().unwrap()).unwrap();
            assert_eq!(a.predict(x.view()).unwrap(), b.predict(x.view()).unwrap());
        }
    }

    #[test]
    fn works_in_f32() {
        let x = grid(30, 4).mapv(|v| v as f32);
        let y = Array1::from_shape_fn(30, |i| 1970.0f32 + i as f32);
        let a = train_regressor(x.view(), y.view(), &RegressorSpec::new(RegressorKind::SvrLinear)).unwrap();
        assert!(a.predict(x.view()).unwrap().iter().all(|v| v.is_finite()));
    }
}
