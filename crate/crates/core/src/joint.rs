//! Joint multiple kernel learning: several related one-class tasks share
//! one kernel-weight vector.
//!
//! Each task keeps its own dual coefficients; the weight update sees the
//! summed responses `v_j = sum_c alpha_c' K_j^c alpha_c`. With a single
//! task this reduces exactly to the single-task fixed-point iteration.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fisher::solve_shifted;
use crate::kernel::{combine_weighted, KernelBank};
use crate::mkl::{self, MklConfig, MklModel};
use crate::par;

/// Kernel banks of `C` related tasks, sharing kernel count and ordering.
#[derive(Debug, Clone)]
pub struct TaskBankSet {
    banks: Vec<KernelBank>,
    names: Vec<String>,
}

impl TaskBankSet {
    pub fn new(banks: Vec<KernelBank>, names: Vec<String>) -> Result<Self> {
        if banks.is_empty() {
            return Err(Error::EmptyBank);
        }
        if names.len() != banks.len() {
            return Err(Error::Shape {
                context: "task names",
                expected: format!("{}", banks.len()),
                got: format!("{}", names.len()),
            });
        }
        let j = banks[0].len();
        for (c, bank) in banks.iter().enumerate() {
            if bank.len() != j {
                return Err(Error::Shape {
                    context: "task bank set",
                    expected: format!("{j} kernels"),
                    got: format!("task {c} has {}", bank.len()),
                });
            }
        }
        Ok(Self { banks, names })
    }

    pub fn from_banks(banks: Vec<KernelBank>) -> Result<Self> {
        let names = (0..banks.len()).map(|c| format!("task{c}")).collect();
        Self::new(banks, names)
    }

    pub fn tasks(&self) -> usize {
        self.banks.len()
    }

    pub fn kernels_per_task(&self) -> usize {
        self.banks[0].len()
    }

    pub fn banks(&self) -> &[KernelBank] {
        &self.banks
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Joint fit output: shared weights plus per-task coefficients.
#[derive(Debug, Clone)]
pub struct JointMklModel {
    pub alphas: Vec<DVector<f64>>,
    pub beta: Vec<f64>,
    pub config: MklConfig,
    pub iterations_used: usize,
    /// Root-sum-square of the per-task coefficient changes at the last step.
    pub final_change: f64,
    pub converged: bool,
    pub degenerate_responses: bool,
}

/// Summed kernel responses across tasks,
/// `v_j = sum_c alpha_c' K_j^c alpha_c`.
pub fn joint_responses(set: &TaskBankSet, alphas: &[DVector<f64>]) -> Result<Vec<f64>> {
    if alphas.len() != set.tasks() {
        return Err(Error::Shape {
            context: "joint responses",
            expected: format!("{} coefficient vectors", set.tasks()),
            got: format!("{}", alphas.len()),
        });
    }
    let per_task: Vec<Vec<f64>> = set
        .banks()
        .iter()
        .zip(alphas)
        .map(|(bank, alpha)| mkl::kernel_responses(bank, alpha))
        .collect::<Result<_>>()?;
    let j = set.kernels_per_task();
    let mut v = vec![0.0; j];
    for u in &per_task {
        for (slot, &x) in v.iter_mut().zip(u) {
            *slot += x;
        }
    }
    Ok(v)
}

/// Fits all tasks jointly under a shared weight vector.
///
/// Convergence criterion: `sqrt(sum_c ||delta alpha_c||^2) <= tol`, which
/// reduces to the single-task criterion at `C = 1`. A factorization
/// failure in any task aborts the whole fit naming that task.
pub fn fit_joint(set: &TaskBankSet, config: &MklConfig) -> Result<JointMklModel> {
    MklConfig::new(config.p, config.delta)?;
    if config.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    let j = set.kernels_per_task();
    let total_n: usize = set.banks().iter().map(|b| b.n()).sum();
    let tol = config.effective_tol(total_n);

    let beta0 = mkl::uniform_beta(j, config.p);
    let mut alphas = solve_all(set, &beta0, config.delta)?;
    let mut beta = beta0;
    let mut degenerate = false;
    let mut iterations_used = 0;
    let mut final_change = f64::INFINITY;
    let mut converged = false;

    for m in 1..=config.max_iter {
        let v = joint_responses(set, &alphas)?;
        if v.iter().all(|&x| x == 0.0) && config.p > 1.0 {
            degenerate = true;
        }
        beta = mkl::beta_update(&v, config.p)?;
        let next = solve_all(set, &beta, config.delta)?;
        let mut change_sq = 0.0;
        for (new, old) in next.iter().zip(&alphas) {
            change_sq += (new - old).norm_squared();
        }
        final_change = change_sq.sqrt();
        alphas = next;
        iterations_used = m;
        if final_change <= tol {
            converged = true;
            break;
        }
    }
    Ok(JointMklModel {
        alphas,
        beta,
        config: *config,
        iterations_used,
        final_change,
        converged,
        degenerate_responses: degenerate,
    })
}

/// Per-task ridge solves with the shared weights; tasks are independent
/// and run in parallel.
fn solve_all(set: &TaskBankSet, beta: &[f64], delta: f64) -> Result<Vec<DVector<f64>>> {
    par::try_map_collect(set.tasks(), |c| {
        let combined = combine_weighted(&set.banks()[c], beta)?;
        solve_shifted(combined.values(), delta).map_err(|e| match e {
            Error::Factorization { jitter } => Error::DegenerateData(format!(
                "task {c} ({}): factorization failed with jitter {jitter:e}",
                set.names()[c]
            )),
            other => other,
        })
    })
}

/// Single ridge solve for a new task under previously learned weights;
/// no iteration.
pub fn apply_shared_beta(bank: &KernelBank, beta: &[f64], delta: f64) -> Result<MklModel> {
    if beta.len() != bank.len() {
        return Err(Error::Shape {
            context: "shared weights",
            expected: format!("{}", bank.len()),
            got: format!("{}", beta.len()),
        });
    }
    let combined = combine_weighted(bank, beta)?;
    let alpha = solve_shifted(combined.values(), delta)?;
    // p is unknown to a reused weight vector; record the weights as-is.
    let config = MklConfig::new(1.0, delta)?.with_max_iter(1);
    let objective = -delta * alpha.dot(&alpha) + 2.0 * alpha.sum()
        - mkl::kernel_responses(bank, &alpha)?
            .iter()
            .zip(beta)
            .map(|(u, b)| u * b)
            .sum::<f64>();
    Ok(MklModel {
        alpha,
        beta: beta.to_vec(),
        config,
        iterations_used: 0,
        final_change: 0.0,
        objective,
        converged: true,
        degenerate_responses: false,
    })
}
