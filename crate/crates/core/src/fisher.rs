//! Regularized Fisher null-space one-class classifier on a single kernel.
//!
//! Training reduces to the ridge-type linear system `(delta*I + K) alpha = 1`
//! solved by a Cholesky factorization. Target training samples project close
//! to the point 1; the hypothetical negative sits at the origin.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, KernelParams};

/// Fitted single-kernel model: dual coefficients plus the regularizer.
#[derive(Debug, Clone)]
pub struct FnModel {
    pub alpha: DVector<f64>,
    pub delta: f64,
    /// Width parameters of the training kernel, when known.
    pub params: Option<KernelParams>,
}

/// Solves `(delta*I + M) x = 1` by Cholesky, escalating a diagonal jitter
/// on factorization failure: starting at `1e-10 * trace(M)/n`, times ten,
/// at most three escalations.
pub(crate) fn solve_shifted(m: &DMatrix<f64>, delta: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let ones = DVector::from_element(n, 1.0);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += delta;
    }
    if let Some(chol) = Cholesky::new(shifted.clone()) {
        return Ok(chol.solve(&ones));
    }
    let trace: f64 = m.diagonal().sum();
    let mut jitter = 1e-10 * trace / n as f64;
    if jitter <= 0.0 {
        jitter = 1e-10;
    }
    for _ in 0..3 {
        let mut attempt = shifted.clone();
        for i in 0..n {
            attempt[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(attempt) {
            return Ok(chol.solve(&ones));
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization { jitter: jitter / 10.0 })
}

/// Dual coefficients `alpha = (delta*I + K)^-1 1`.
pub fn solve_alpha(k: &KernelMatrix, delta: f64) -> Result<DVector<f64>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "regularizer delta must be positive, got {delta}"
        )));
    }
    solve_shifted(k.values(), delta)
}

/// Dual objective `-alpha' K alpha - delta alpha'alpha + 2 alpha' 1`.
pub fn dual_objective(k: &KernelMatrix, delta: f64, alpha: &DVector<f64>) -> Result<f64> {
    if alpha.len() != k.n() {
        return Err(Error::Shape {
            context: "dual objective",
            expected: format!("{}", k.n()),
            got: format!("{}", alpha.len()),
        });
    }
    let k_alpha = k.values() * alpha;
    Ok(-alpha.dot(&k_alpha) - delta * alpha.dot(alpha) + 2.0 * alpha.sum())
}

/// Fits the model on a training Gram matrix.
pub fn fit(k: &KernelMatrix, delta: f64, params: Option<KernelParams>) -> Result<FnModel> {
    Ok(FnModel {
        alpha: solve_alpha(k, delta)?,
        delta,
        params,
    })
}

impl FnModel {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Null-space projection of one test sample: `s = k_x' alpha` where
    /// `k_x` holds the train-vs-test kernel values.
    pub fn project(&self, k_x: &DVector<f64>) -> Result<f64> {
        project(&self.alpha, k_x)
    }

    /// Decision score `-|1 - s|`; larger means more normal.
    pub fn decision_score(&self, k_x: &DVector<f64>) -> Result<f64> {
        Ok(score_from_projection(self.project(k_x)?))
    }
}

pub(crate) fn project(alpha: &DVector<f64>, k_x: &DVector<f64>) -> Result<f64> {
    if alpha.len() != k_x.len() {
        return Err(Error::Shape {
            context: "projection",
            expected: format!("{}", alpha.len()),
            got: format!("{}", k_x.len()),
        });
    }
    Ok(k_x.dot(alpha))
}

/// Distance-to-1 score. Targets project near 1 and the hypothetical
/// negative lies at the origin, but outliers may overshoot past 1, so the
/// raw projection is not monotone in normality.
pub fn score_from_projection(s: f64) -> f64 {
    -(1.0 - s).abs()
}
