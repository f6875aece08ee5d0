//! Linear-model regressors on standardized features: ordinary least squares
//! and epsilon-insensitive linear SVR.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{LinearParams, SvrParams};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-column affine transform to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    /// Population standard deviation; constant columns store 1.
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: ArrayView2<T>) -> Self {
        let n = T::count(x.nrows().max(1));
        let mean: Vec<T> = x
            .axis_iter(Axis(1))
            .map(|c| c.iter().copied().sum::<T>() / n)
            .collect();
        let scale = x
            .axis_iter(Axis(1))
            .zip(&mean)
            .map(|(c, &m)| {
                let var = c.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / n;
                let sd = var.sqrt();
                if sd > T::epsilon() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

/// Prediction = `weights · x + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LinearModel<T> {
    pub weights: Vec<T>,
    pub intercept: T,
}

impl<T: Scalar> LinearModel<T> {
    pub fn predict_row(&self, x: ArrayView1<T>) -> T {
        x.iter()
            .zip(&self.weights)
            .map(|(&a, &w)| a * w)
            .sum::<T>()
            + self.intercept
    }
}

fn mean<T: Scalar>(y: ArrayView1<T>) -> T {
    y.iter().copied().sum::<T>() / T::count(y.len())
}

/// In-place Cholesky factorisation; `false` if the matrix is not positive definite.
fn cholesky<T: Scalar>(a: &mut Array2<T>) -> bool {
    let n = a.nrows();
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d = d - a[[j, k]] * a[[j, k]];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s = s - a[[i, k]] * a[[j, k]];
            }
            a[[i, j]] = s / d;
        }
    }
    true
}

fn cholesky_solve<T: Scalar>(l: &Array2<T>, b: &[T]) -> Vec<T> {
    let n = b.len();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s = s - l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s = s - l[[k, i]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

/// Least squares on centered data via the normal equations.
///
/// A ridge term `jitter * mean(diag(XᵀX))` keeps rank-deficient systems
/// solvable; it grows by 100x until the factorisation succeeds.
pub fn fit_least_squares<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    params: &LinearParams,
) -> Result<LinearModel<T>> {
    let d = x.ncols();
    let y_mean = mean(y);
    let x_mean: Vec<T> = x
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().sum::<T>() / T::count(x.nrows()))
        .collect();
    let mut xc = x.to_owned();
    for mut row in xc.rows_mut() {
        for (v, &m) in row.iter_mut().zip(&x_mean) {
            *v = *v - m;
        }
    }
    let yc: Array1<T> = y.mapv(|v| v - y_mean);
    let gram = xc.t().dot(&xc);
    let rhs: Vec<T> = xc.t().dot(&yc).to_vec();
    let diag_mean = (0..d).map(|i| gram[[i, i]]).sum::<T>() / T::count(d.max(1));
    let base = if diag_mean > T::zero() { diag_mean } else { T::one() };
    let mut jitter = T::of(params.jitter.max(f64::MIN_POSITIVE));
    for _ in 0..12 {
        let mut a = gram.clone();
        for i in 0..d {
            a[[i, i]] = a[[i, i]] + jitter * base;
        }
        if cholesky(&mut a) {
            let weights = cholesky_solve(&a, &rhs);
            let intercept = y_mean
                - weights
                    .iter()
                    .zip(&x_mean)
                    .map(|(&w, &m)| w * m)
                    .sum::<T>();
            return Ok(LinearModel { weights, intercept });
        }
        jitter = jitter * T::of(100.0);
    }
    Err(Error::Fit("normal equations could not be factorised".into()))
}

/// Linear epsilon-insensitive SVR,
/// `min ½‖w‖² + C Σ max(0, |yᵢ − w·xᵢ − b| − ε)`, solved by dual coordinate
/// descent with the bias folded in as a constant unit feature. Targets are
/// centered first so the regularised bias stays small.
pub fn fit_linear_svr<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView1<T>,
    params: &SvrParams,
    seed: u64,
) -> Result<LinearModel<T>> {
    let (n, d) = x.dim();
    let y_mean = mean(y);
    let c = T::of(params.c);
    let eps = T::of(params.epsilon);
    let tol = T::of(params.tol);

    // w[0..d] are feature weights, w[d] is the bias.
    let mut w = vec![T::zero(); d + 1];
    let mut beta = vec![T::zero(); n];
    let q: Vec<T> = x
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|&v| v * v).sum::<T>() + T::one())
        .collect();
    let target: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut converged = false;

    for _ in 0..params.max_iter {
        order.shuffle(&mut rng);
        let mut max_violation = T::zero();
        for &i in &order {
            let row = x.row(i);
            let g = row
                .iter()
                .zip(&w)
                .map(|(&a, &b)| a * b)
                .sum::<T>()
                + w[d]
                - target[i];
            let gp = g + eps;
            let gn = g - eps;
            let b = beta[i];
            let violation = if b == T::zero() {
                if gp < T::zero() {
                    -gp
                } else if gn > T::zero() {
                    gn
                } else {
                    T::zero()
                }
            } else if b >= c {
                gp.max(T::zero())
            } else if b <= -c {
                (-gn).max(T::zero())
            } else if b > T::zero() {
                gp.abs()
            } else {
                gn.abs()
            };
            max_violation = max_violation.max(violation);
            if violation == T::zero() {
                continue;
            }
            let step = if b > T::zero() || (b == T::zero() && gp < T::zero()) {
                -gp / q[i]
            } else {
                -gn / q[i]
            };
            let mut nb = b + step;
            // Never jump across zero: the |β| term changes slope there.
            if (b > T::zero() && nb < T::zero()) || (b < T::zero() && nb > T::zero()) {
                nb = T::zero();
            }
            let nb = nb.max(-c).min(c);
            let delta = nb - b;
            if delta != T::zero() {
                beta[i] = nb;
                for (wj, &a) in w.iter_mut().zip(row.iter()) {
                    *wj = *wj + delta * a;
                }
                w[d] = w[d] + delta;
            }
        }
        if max_violation < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("svr_linear reached max_iter={} before tol={}", params.max_iter, params.tol);
    }
    let bias = w.pop().expect("bias slot");
    Ok(LinearModel {
        weights: w,
        intercept: bias + y_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn standardizer_zero_mean_unit_var() {
        let x = array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]];
        let s = Standardizer::fit(x.view());
        let z = s.transform(x.view());
        assert_relative_eq!(z.column(0).sum(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(z.column(0).mapv(|v| v * v).sum() / 3.0, 1.0, epsilon = 1e-12);
        assert_eq!(s.scale[1], 1.0);
        assert!(z.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn least_squares_recovers_exact_plane() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 3.0], [4.0, 1.0], [3.0, 3.0]];
        let y = x.rows().into_iter().map(|r| 2.0 * r[0] - r[1] + 7.0).collect::<Array1<f64>>();
        let m = fit_least_squares(x.view(), y.view(), &LinearParams { jitter: 1e-12 }).unwrap();
        assert_relative_eq!(m.weights[0], 2.0, epsilon = 1e-8);
        assert_relative_eq!(m.weights[1], -1.0, epsilon = 1e-8);
        assert_relative_eq!(m.intercept, 7.0, epsilon = 1e-8);
    }

    #[test]
    fn least_squares_centroid_predicts_mean() {
        // Underdetermined: more columns than rows.
        let x = array![[1.0, 2.0, 0.5, 9.0], [0.0, 1.0, 4.0, 1.0], [3.0, 0.0, 1.0, 2.0]];
        let y = array![1970.0, 1990.0, 2010.0];
        let m = fit_least_squares(x.view(), y.view(), &LinearParams { jitter: 1e-10 }).unwrap();
        let centroid = x.mean_axis(Axis(0)).unwrap();
        assert_relative_eq!(m.predict_row(centroid.view()), 1990.0, epsilon = 1e-6);
    }

    #[test]
    fn svr_fits_noise_free_line_within_epsilon() {
        let x: Array2<f64> = Array2::from_shape_fn((40, 1), |(i, _)| i as f64 / 10.0 - 2.0);
        let y = x.column(0).mapv(|v| 3.0 * v + 1.0);
        let params = SvrParams { c: 100.0, epsilon: 0.01, tol: 1e-6, max_iter: 10_000 };
        let m = fit_linear_svr(x.view(), y.view(), &params, 0).unwrap();
        for (r, &t) in x.rows().into_iter().zip(y.iter()) {
            assert!((m.predict_row(r) - t).abs() < 0.05);
        }
    }

    #[test]
    fn svr_constant_target() {
        let x: Array2<f64> = Array2::from_shape_fn((20, 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let y = Array1::from_elem(20, 1990.0);
        let params = SvrParams { c: 1.0, epsilon: 0.1, tol: 1e-6, max_iter: 100 };
        let m = fit_linear_svr(x.view(), y.view(), &params, 0).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.intercept, 1990.0);
    }
}
