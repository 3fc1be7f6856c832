//! Multiple kernel learning for the one-class Fisher null-space classifier
//! under an lp-norm constraint on kernel weights.
//!
//! The saddle-point problem alternates two closed-form updates: kernel
//! weights from the response vector `u_j = alpha' K_j alpha`, and dual
//! coefficients from the ridge system on the combined kernel. A gradient
//! ascent solver of the equivalent concave objective doubles as an
//! independent reference for the fixed-point iteration.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fisher::solve_shifted;
use crate::kernel::{combine_weighted, KernelBank};
use crate::par;

/// Responses of each base kernel to the dual coefficients.
pub type ResponseVector = Vec<f64>;

/// Relative slack under which a slightly negative response is treated as
/// the zero it would be in exact arithmetic.
const RESPONSE_SLACK: f64 = 1e-12;

/// Solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MklConfig {
    /// Norm exponent, `p >= 1`. `p == 1` selects the sparse one-hot limit.
    pub p: f64,
    /// Ridge regularizer, absolute (callers convert multiplier-of-n forms).
    pub delta: f64,
    /// Convergence threshold on `||alpha_new - alpha_old||_2`;
    /// `None` means `1e-8 * sqrt(n)`.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl MklConfig {
    pub const DEFAULT_MAX_ITER: usize = 200;

    pub fn new(p: f64, delta: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::UnsupportedExponent(p, "p must be a finite value >= 1"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!(
                "regularizer delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            p,
            delta,
            tol: None,
            max_iter: Self::DEFAULT_MAX_ITER,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Effective convergence threshold for a problem of size `n`.
    pub fn effective_tol(&self, n: usize) -> f64 {
        self.tol.unwrap_or(1e-8 * (n as f64).sqrt())
    }
}

/// Fitted multiple-kernel model with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct MklModel {
    pub alpha: DVector<f64>,
    pub beta: Vec<f64>,
    pub config: MklConfig,
    pub iterations_used: usize,
    /// Last observed `||alpha_new - alpha_old||_2`.
    pub final_change: f64,
    pub objective: f64,
    pub converged: bool,
    /// Set when an all-zero response vector forced the uniform fallback.
    pub degenerate_responses: bool,
}

impl MklModel {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }
}

/// Stable p-norm of a non-negative vector.
pub(crate) fn lp_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().copied().fold(0.0f64, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let sum: f64 = v.iter().map(|&x| (x / m).powf(p)).sum();
    m * sum.powf(1.0 / p)
}

/// Dual-norm exponent `q = p/(p-1)`; the `p == 1` case is the max norm.
pub(crate) fn dual_norm(u: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        u.iter().copied().fold(0.0f64, f64::max)
    } else {
        lp_norm(u, p / (p - 1.0))
    }
}

fn clamp_responses(u: &[f64]) -> Result<Vec<f64>> {
    let scale = u.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut out = Vec::with_capacity(u.len());
    for &x in u {
        if x < -RESPONSE_SLACK * scale.max(1.0) {
            return Err(Error::InvalidResponse(x));
        }
        out.push(x.max(0.0));
    }
    Ok(out)
}

/// Quadratic forms `u_j = alpha' K_j alpha` for every kernel in the bank.
///
/// The per-kernel forms are independent and evaluated in parallel.
pub fn kernel_responses(bank: &KernelBank, alpha: &DVector<f64>) -> Result<ResponseVector> {
    if alpha.len() != bank.n() {
        return Err(Error::Shape {
            context: "kernel responses",
            expected: format!("{}", bank.n()),
            got: format!("{}", alpha.len()),
        });
    }
    Ok(par::map_collect(bank.len(), |j| {
        let k_alpha = bank.get(j).values() * alpha;
        alpha.dot(&k_alpha)
    }))
}

/// Uniform weight vector with unit p-norm, `beta_j = J^(-1/p)`.
pub fn uniform_beta(j: usize, p: f64) -> Vec<f64> {
    vec![(j as f64).powf(-1.0 / p); j]
}

/// Random non-negative weight vector with unit p-norm.
pub fn random_unit_beta<R: Rng>(j: usize, p: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..j).map(|_| rng.gen_range(1e-3..1.0)).collect();
    let norm = lp_norm(&raw, p);
    raw.iter().map(|x| x / norm).collect()
}

fn beta_update_inner(u: &[f64], p: f64) -> Result<(Vec<f64>, bool)> {
    if u.is_empty() {
        return Err(Error::EmptyBank);
    }
    let u = clamp_responses(u)?;
    let j = u.len();
    if p == 1.0 {
        // Sparse limit: one-hot at the largest response, lowest index on ties.
        let mut arg = 0;
        for (i, &x) in u.iter().enumerate() {
            if x > u[arg] {
                arg = i;
            }
        }
        let mut beta = vec![0.0; j];
        beta[arg] = 1.0;
        return Ok((beta, false));
    }
    let umax = u.iter().copied().fold(0.0f64, f64::max);
    if umax == 0.0 {
        log::warn!("all kernel responses are zero; falling back to uniform weights");
        return Ok((uniform_beta(j, p), true));
    }
    // Normalizing by the largest response keeps every power in [0, 1],
    // which matters for exponents like 1/(p-1) = 31.
    let e = 1.0 / (p - 1.0);
    let w: Vec<f64> = u.iter().map(|&x| (x / umax).powf(e)).collect();
    let norm = lp_norm(&w, p);
    Ok((w.iter().map(|x| x / norm).collect(), false))
}

/// Closed-form kernel-weight update from the responses:
/// `beta = u^(1/(p-1)) / ||u^(1/(p-1))||_p`, with unit p-norm output.
///
/// `p == 1` returns the analytic one-hot limit at the argmax of `u`;
/// an all-zero `u` with `p > 1` falls back to uniform weights with a
/// warning rather than aborting.
pub fn beta_update(u: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::UnsupportedExponent(p, "p must be a finite value >= 1"));
    }
    beta_update_inner(u, p).map(|(beta, _)| beta)
}

/// Fixed-point fit starting from uniform weights `beta_j = J^(-1/p)`.
pub fn fit_fixed_point(bank: &KernelBank, config: &MklConfig) -> Result<MklModel> {
    let beta0 = uniform_beta(bank.len(), config.p);
    fit_fixed_point_with_init(bank, config, &beta0)
}

/// Fixed-point fit from an explicit initial weight vector.
///
/// Alternates `u`, `beta`, and the ridge solve for `alpha` until the
/// change in `alpha` drops below the tolerance. Hitting `max_iter`
/// returns a model flagged as non-converged rather than an error.
pub fn fit_fixed_point_with_init(
    bank: &KernelBank,
    config: &MklConfig,
    beta0: &[f64],
) -> Result<MklModel> {
    validate_config(config)?;
    if beta0.len() != bank.len() {
        return Err(Error::Shape {
            context: "initial kernel weights",
            expected: format!("{}", bank.len()),
            got: format!("{}", beta0.len()),
        });
    }
    let n = bank.n();
    let tol = config.effective_tol(n);
    let combined = combine_weighted(bank, beta0)?;
    let mut alpha = solve_shifted(combined.values(), config.delta)?;
    let mut beta = beta0.to_vec();
    let mut degenerate = false;
    let mut iterations_used = 0;
    let mut final_change = f64::INFINITY;
    let mut converged = false;
    for m in 1..=config.max_iter {
        let u = kernel_responses(bank, &alpha)?;
        let (next_beta, degen) = beta_update_inner(&u, config.p)?;
        beta = next_beta;
        degenerate |= degen;
        let combined = combine_weighted(bank, &beta)?;
        let next_alpha = solve_shifted(combined.values(), config.delta)?;
        final_change = (&next_alpha - &alpha).norm();
        alpha = next_alpha;
        iterations_used = m;
        if final_change <= tol {
            converged = true;
            break;
        }
    }
    let objective = mkl_objective(bank, &alpha, config.p, config.delta)?;
    Ok(MklModel {
        alpha,
        beta,
        config: *config,
        iterations_used,
        final_change,
        objective,
        converged,
        degenerate_responses: degenerate,
    })
}

/// Concave objective `-delta alpha'alpha + 2 alpha'1 - ||u||_{p/(p-1)}`;
/// for `p == 1` the penalty is `max_j u_j`.
pub fn mkl_objective(bank: &KernelBank, alpha: &DVector<f64>, p: f64, delta: f64) -> Result<f64> {
    let u = clamp_responses(&kernel_responses(bank, alpha)?)?;
    Ok(-delta * alpha.dot(alpha) + 2.0 * alpha.sum() - dual_norm(&u, p))
}

/// Gradient of [`mkl_objective`] in `alpha`:
/// `2 [ 1 - delta alpha - ||u||_q^(-1/(p-1)) (sum_j u_j^(1/(p-1)) K_j) alpha ]`.
pub fn mkl_gradient(
    bank: &KernelBank,
    alpha: &DVector<f64>,
    p: f64,
    delta: f64,
) -> Result<DVector<f64>> {
    if p == 1.0 {
        return Err(Error::UnsupportedExponent(
            p,
            "the p = 1 objective is nonsmooth; gradient undefined at ties",
        ));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::UnsupportedExponent(p, "p must be a finite value >= 1"));
    }
    let u = clamp_responses(&kernel_responses(bank, alpha)?)?;
    let norm_q = dual_norm(&u, p);
    if norm_q == 0.0 {
        return Err(Error::DegenerateData(
            "all kernel responses are zero; gradient undefined".into(),
        ));
    }
    // The weight on K_j is (u_j / ||u||_q)^(1/(p-1)), a number in [0, 1]
    // because the dual norm dominates every component.
    let e = 1.0 / (p - 1.0);
    let coeff: Vec<f64> = u.iter().map(|&x| (x / norm_q).powf(e)).collect();
    let products = par::map_collect(bank.len(), |j| bank.get(j).values() * alpha);
    let n = bank.n();
    let mut weighted = DVector::zeros(n);
    for (c, ka) in coeff.iter().zip(&products) {
        weighted.axpy(*c, ka, 1.0);
    }
    let mut grad = DVector::from_element(n, 1.0);
    grad.axpy(-delta, alpha, 1.0);
    grad -= &weighted;
    grad *= 2.0;
    Ok(grad)
}

/// Sufficient regularization level for fixed-point contraction,
/// `2 sqrt(n) / omega`, where `omega` is the observed gap between
/// consecutive iterates. Diagnostic only.
pub fn delta_convergence_bound(n: usize, omega: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    Ok(2.0 * (n as f64).sqrt() / omega)
}

fn validate_config(config: &MklConfig) -> Result<()> {
    MklConfig::new(config.p, config.delta)?;
    if config.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    if let Some(t) = config.tol {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {t}")));
        }
    }
    Ok(())
}

/// Gradient ascent on the concave objective; the independent reference
/// solver for [`fit_fixed_point`].
///
/// Starts from the same initialization as the fixed-point iteration and
/// climbs until `||gradient||_2 <= grad_tol` or `max_iter`. Step sizes
/// come from a backtracking line search (halve until the objective
/// increases) with initial step `1/(2 delta + 2 max_j trace(K_j)/n)`;
/// when objective differences fall below floating-point resolution the
/// search falls back to bisecting the directional derivative, which
/// stays informative arbitrarily close to the optimum.
pub fn fit_gradient_ascent(
    bank: &KernelBank,
    config: &MklConfig,
    step: Option<f64>,
    grad_tol: f64,
) -> Result<MklModel> {
    validate_config(config)?;
    if config.p == 1.0 {
        return Err(Error::UnsupportedExponent(
            config.p,
            "gradient ascent requires p > 1",
        ));
    }
    if !(grad_tol > 0.0) {
        return Err(Error::Domain(format!(
            "grad_tol must be positive, got {grad_tol}"
        )));
    }
    let n = bank.n();
    let max_trace_ratio = bank
        .kernels()
        .iter()
        .map(|k| k.trace() / n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let kappa0 = match step {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(Error::StepSize(format!("step size must be positive, got {s}")))
        }
        None => 1.0 / (2.0 * config.delta + 2.0 * max_trace_ratio),
    };

    let beta0 = uniform_beta(bank.len(), config.p);
    let combined = combine_weighted(bank, &beta0)?;
    let mut alpha = solve_shifted(combined.values(), config.delta)?;
    let mut obj = mkl_objective(bank, &alpha, config.p, config.delta)?;
    let mut converged = false;
    let mut iterations_used = 0;
    let mut final_change = f64::INFINITY;
    let mut decrease_streak = 0usize;

    for m in 1..=config.max_iter {
        iterations_used = m;
        let grad = mkl_gradient(bank, &alpha, config.p, config.delta)?;
        let grad_norm = grad.norm();
        if grad_norm <= grad_tol {
            converged = true;
            iterations_used = m - 1;
            break;
        }
        let mut kappa = kappa0;
        let mut accepted = None;
        while kappa > kappa0 * 1e-20 {
            let cand = &alpha + &grad * kappa;
            let cand_obj = mkl_objective(bank, &cand, config.p, config.delta)?;
            if cand_obj > obj {
                accepted = Some((cand, cand_obj, kappa));
                break;
            }
            kappa *= 0.5;
        }
        match accepted {
            Some((cand, cand_obj, kappa)) => {
                final_change = kappa * grad_norm;
                alpha = cand;
                obj = cand_obj;
                decrease_streak = 0;
            }
            None => {
                // Objective increments are beneath rounding. Bisect the
                // directional derivative along the gradient instead.
                let kappa = bisect_line_max(bank, config, &alpha, &grad, kappa0)?;
                if kappa * grad_norm < f64::EPSILON * alpha.norm().max(1.0) {
                    break;
                }
                alpha += &grad * kappa;
                let new_obj = mkl_objective(bank, &alpha, config.p, config.delta)?;
                if new_obj < obj {
                    decrease_streak += 1;
                    if decrease_streak >= 10 {
                        return Err(Error::StepSize(
                            "objective decreased for 10 consecutive accepted steps".into(),
                        ));
                    }
                } else {
                    decrease_streak = 0;
                }
                final_change = kappa * grad_norm;
                obj = new_obj;
            }
        }
    }
    let u = clamp_responses(&kernel_responses(bank, &alpha)?)?;
    let (beta, degenerate) = beta_update_inner(&u, config.p)?;
    let objective = mkl_objective(bank, &alpha, config.p, config.delta)?;
    Ok(MklModel {
        alpha,
        beta,
        config: *config,
        iterations_used,
        final_change,
        objective,
        converged,
        degenerate_responses: degenerate,
    })
}

/// Maximizes `f(alpha + kappa * dir)` over `kappa >= 0` by bisection on
/// the sign of the directional derivative `grad(alpha + kappa dir)' dir`.
fn bisect_line_max(
    bank: &KernelBank,
    config: &MklConfig,
    alpha: &DVector<f64>,
    dir: &DVector<f64>,
    kappa0: f64,
) -> Result<f64> {
    let slope = |kappa: f64| -> Result<f64> {
        let point = alpha + dir * kappa;
        Ok(mkl_gradient(bank, &point, config.p, config.delta)?.dot(dir))
    };
    if slope(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = kappa0;
    let mut doublings = 0;
    while slope(hi)? > 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::StepSize(
                "directional derivative never changed sign".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
