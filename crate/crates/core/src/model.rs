//! Trained-model wrapper: dual coefficients plus the kernel recipe needed
//! to score new samples and to serialize the model.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fisher::{score_from_projection, FnModel};
use crate::kernel::{
    combine_cross, fuse_average_cross, fuse_product_cross, CrossKernel,
};
use crate::mkl::{MklConfig, MklModel};

/// How the bank's kernels are combined at scoring time.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelCombiner {
    /// Learned (or one-hot) non-negative weights.
    Weighted(Vec<f64>),
    /// Element-wise arithmetic mean.
    Average,
    /// Element-wise geometric mean.
    Product,
}

impl KernelCombiner {
    pub fn tag(&self) -> &'static str {
        match self {
            KernelCombiner::Weighted(_) => "weighted",
            KernelCombiner::Average => "average",
            KernelCombiner::Product => "product",
        }
    }
}

/// Per-kernel construction record.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelInfo {
    pub name: String,
    /// RBF width; absent for precomputed kernels loaded from file.
    pub sigma: Option<f64>,
    pub width_factor: Option<f64>,
}

/// How feature data maps to kernel views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewMode {
    /// One kernel over the full feature vector.
    Single,
    /// One kernel per feature attribute (single-column views).
    PerAttribute,
}

impl ViewMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ViewMode::Single => "single",
            ViewMode::PerAttribute => "per-attribute",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ViewMode::Single),
            "per-attribute" => Ok(ViewMode::PerAttribute),
            other => Err(Error::Format(format!("unknown view mode '{other}'"))),
        }
    }
}

/// Reference to the training data the model was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRef {
    pub source: String,
    pub n: usize,
    pub view_mode: ViewMode,
}

/// Convergence record carried by serialized models.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub iterations_used: usize,
    pub final_change: f64,
    pub objective: f64,
    pub converged: bool,
    pub degenerate_responses: bool,
}

/// A fitted one-class model bound to its kernel recipe.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub alpha: DVector<f64>,
    pub delta: f64,
    /// Norm exponent of the weight constraint; absent for single-kernel
    /// and fixed-rule models.
    pub p: Option<f64>,
    pub combiner: KernelCombiner,
    pub kernels: Vec<KernelInfo>,
    pub train_ref: Option<TrainRef>,
    pub diagnostics: Option<FitDiagnostics>,
}

impl TrainedModel {
    pub fn from_mkl(model: &MklModel, kernels: Vec<KernelInfo>, train_ref: Option<TrainRef>) -> Self {
        TrainedModel {
            alpha: model.alpha.clone(),
            delta: model.config.delta,
            p: Some(model.config.p),
            combiner: KernelCombiner::Weighted(model.beta.clone()),
            kernels,
            train_ref,
            diagnostics: Some(FitDiagnostics {
                iterations_used: model.iterations_used,
                final_change: model.final_change,
                objective: model.objective,
                converged: model.converged,
                degenerate_responses: model.degenerate_responses,
            }),
        }
    }

    pub fn from_fn(
        model: &FnModel,
        combiner: KernelCombiner,
        kernels: Vec<KernelInfo>,
        train_ref: Option<TrainRef>,
    ) -> Self {
        TrainedModel {
            alpha: model.alpha.clone(),
            delta: model.delta,
            p: None,
            combiner,
            kernels,
            train_ref,
            diagnostics: None,
        }
    }

    pub fn n_train(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_kernels(&self) -> usize {
        self.kernels.len()
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.as_ref().map_or(true, |d| d.converged)
    }

    /// Combines per-kernel cross blocks according to the model's rule.
    pub fn combined_cross(&self, crosses: &[CrossKernel]) -> Result<CrossKernel> {
        if crosses.len() != self.n_kernels() {
            return Err(Error::Shape {
                context: "cross-kernel blocks",
                expected: format!("{} kernels", self.n_kernels()),
                got: format!("{}", crosses.len()),
            });
        }
        for c in crosses {
            if c.n_train() != self.n_train() {
                return Err(Error::Shape {
                    context: "cross-kernel rows",
                    expected: format!("{}", self.n_train()),
                    got: format!("{}", c.n_train()),
                });
            }
        }
        match &self.combiner {
            KernelCombiner::Weighted(beta) => combine_cross(crosses, beta),
            KernelCombiner::Average => fuse_average_cross(crosses),
            KernelCombiner::Product => fuse_product_cross(crosses),
        }
    }

    /// Null-space projections of every test sample (one per cross column).
    pub fn project_all(&self, crosses: &[CrossKernel]) -> Result<Vec<f64>> {
        let combined = self.combined_cross(crosses)?;
        if combined.n_test() == 0 {
            return Ok(Vec::new());
        }
        let proj = combined.values().tr_mul(&self.alpha);
        Ok(proj.iter().copied().collect())
    }

    /// Decision scores `-|1 - s|`, order-preserving, one per test sample.
    pub fn score_all(&self, crosses: &[CrossKernel]) -> Result<Vec<f64>> {
        Ok(self
            .project_all(crosses)?
            .into_iter()
            .map(score_from_projection)
            .collect())
    }
}

/// Jointly trained model: shared weights plus per-task coefficients.
#[derive(Debug, Clone)]
pub struct JointTrainedModel {
    pub beta: Vec<f64>,
    pub p: f64,
    pub delta: f64,
    pub tasks: Vec<(String, DVector<f64>)>,
    pub kernels: Vec<KernelInfo>,
    pub iterations_used: usize,
    pub final_change: f64,
    pub converged: bool,
}

impl JointTrainedModel {
    pub fn from_joint(
        model: &crate::joint::JointMklModel,
        names: &[String],
        kernels: Vec<KernelInfo>,
    ) -> Self {
        JointTrainedModel {
            beta: model.beta.clone(),
            p: model.config.p,
            delta: model.config.delta,
            tasks: names
                .iter()
                .cloned()
                .zip(model.alphas.iter().cloned())
                .collect(),
            kernels,
            iterations_used: model.iterations_used,
            final_change: model.final_change,
            converged: model.converged,
        }
    }

    /// The per-task model for one task, scoring-ready.
    pub fn task_model(&self, task: usize) -> TrainedModel {
        TrainedModel {
            alpha: self.tasks[task].1.clone(),
            delta: self.delta,
            p: Some(self.p),
            combiner: KernelCombiner::Weighted(self.beta.clone()),
            kernels: self.kernels.clone(),
            train_ref: None,
            diagnostics: None,
        }
    }
}

/// Snapshot of solver settings used by grid search and the CLI.
#[derive(Debug, Clone, Copy)]
pub struct FitSettings {
    pub config: MklConfig,
    pub grad_tol: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{cross_gram_rbf, gram_rbf, SampleMatrix};
    use crate::mkl::fit_fixed_point;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn scoring_matches_manual_projection() {
        let train = SampleMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let test = SampleMatrix::from_rows(&[vec![0.5, 0.5], vec![2.0, 2.0]]).unwrap();
        let sigma = 0.8;
        let bank = crate::kernel::KernelBank::from_kernels(vec![
            gram_rbf(&train, sigma).unwrap(),
            gram_rbf(&train, sigma * 2.0).unwrap(),
        ])
        .unwrap();
        let config = MklConfig::new(2.0, 0.1).unwrap();
        let mkl = fit_fixed_point(&bank, &config).unwrap();
        let model = TrainedModel::from_mkl(&mkl, vec![
            KernelInfo { name: "a".into(), sigma: Some(sigma), width_factor: None },
            KernelInfo { name: "b".into(), sigma: Some(sigma * 2.0), width_factor: None },
        ], None);

        let crosses = vec![
            cross_gram_rbf(&train, &test, sigma).unwrap(),
            cross_gram_rbf(&train, &test, sigma * 2.0).unwrap(),
        ];
        let projections = model.project_all(&crosses).unwrap();
        assert_eq!(projections.len(), 2);
        for (t, &s) in projections.iter().enumerate() {
            let kx = crate::kernel::combine_cross(&crosses, &mkl.beta)
                .unwrap()
                .column(t);
            assert_relative_eq!(s, kx.dot(&mkl.alpha), epsilon = 1e-12);
        }
        let scores = model.score_all(&crosses).unwrap();
        for (sc, pr) in scores.iter().zip(&projections) {
            assert_relative_eq!(*sc, -(1.0 - pr).abs(), epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_test_set_scores_empty() {
        let train = SampleMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let bank =
            crate::kernel::KernelBank::from_kernels(vec![gram_rbf(&train, 1.0).unwrap()]).unwrap();
        let config = MklConfig::new(2.0, 0.5).unwrap();
        let mkl = fit_fixed_point(&bank, &config).unwrap();
        let model = TrainedModel::from_mkl(
            &mkl,
            vec![KernelInfo { name: "k0".into(), sigma: Some(1.0), width_factor: None }],
            None,
        );
        let empty_cross = CrossKernel::new(DMatrix::zeros(2, 0));
        assert!(model.score_all(&[empty_cross]).unwrap().is_empty());
    }
}
