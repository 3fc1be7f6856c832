//! Synthetic experiments: classification error as the number of
//! informative views grows, and AUC as informative kernels are swapped
//! for noise kernels.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::data::{synth_gaussian_task, Dataset, SyntheticSpec, SyntheticView};
use crate::error::{Error, Result};
use crate::eval::metrics::{eer_threshold, roc_auc, Label, ScoredSet};
use crate::eval::mix_seed;
use crate::kernel::{
    cross_gram_rbf, gram_rbf, hstack_cross, rbf_width_heuristic, CrossKernel, KernelBank,
    SampleMatrix,
};
use crate::mkl::{fit_fixed_point, MklConfig};
use crate::par;

/// Shared knobs for both synthetic experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthExperimentOptions {
    pub trials: usize,
    pub p_values: Vec<f64>,
    /// Validation grid for the regularizer, as multipliers of n.
    pub delta_multipliers: Vec<f64>,
    /// Validation grid for the width factor.
    pub width_factors: Vec<f64>,
    /// Divides the generation counts (1 = full scale).
    pub scale_divisor: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SynthExperimentOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            p_values: vec![1.0, 2.0],
            delta_multipliers: vec![1e-3, 1e-2, 1e-1, 1.0],
            width_factors: vec![0.5],
            scale_divisor: 4,
            max_iter: 100,
            seed: 42,
        }
    }
}

/// Mean and standard deviation of the metric for one (p, x) cell, where
/// `x` is the view count or the noise-kernel count.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCell {
    pub p: f64,
    pub x: usize,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

/// Result table of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    /// `"error"` or `"auc"`.
    pub metric: &'static str,
    /// `"views"` or `"noise"`: meaning of the `x` axis.
    pub axis: &'static str,
    pub cells: Vec<ExperimentCell>,
}

impl ExperimentTable {
    pub fn cell(&self, p: f64, x: usize) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.p == p && c.x == x)
    }

    /// Line-oriented export, one row per (p, x) cell.
    pub fn to_text(&self) -> String {
        let mut out = format!("# metric={} axis={}\n# p x mean std trials\n", self.metric, self.axis);
        for c in &self.cells {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                c.p,
                c.x,
                crate::data::fmt_f64(c.mean),
                crate::data::fmt_f64(c.std),
                c.trials
            ));
        }
        out
    }
}

/// Per-width-factor precomputation for one trial's views.
struct TrialKit {
    bank: KernelBank,
    width_factor: f64,
    val_crosses: Vec<CrossKernel>,
    test_crosses: Vec<CrossKernel>,
}

struct TrialData {
    kits: Vec<TrialKit>,
    val_labels: Vec<Label>,
    test_labels: Vec<Label>,
}

fn stack_labels(pos: usize, neg: usize) -> Vec<Label> {
    let mut labels = vec![Label::Target; pos];
    labels.extend(vec![Label::Anomaly; neg]);
    labels
}

fn build_trial_data(views: &[SyntheticView], width_factors: &[f64]) -> Result<TrialData> {
    let first = &views[0];
    let val_labels = stack_labels(first.val.n_targets(), first.val.n_anomalies());
    let test_labels = stack_labels(first.test.n_targets(), first.test.n_anomalies());
    let kits = width_factors
        .iter()
        .map(|&w| {
            let mut kernels = Vec::with_capacity(views.len());
            let mut val_crosses = Vec::with_capacity(views.len());
            let mut test_crosses = Vec::with_capacity(views.len());
            for v in views {
                let train = &v.train.targets;
                let sigma = rbf_width_heuristic(train, w)?;
                kernels.push(gram_rbf(train, sigma)?);
                val_crosses.push(hstack_cross(&[
                    cross_gram_rbf(train, &v.val.targets, sigma)?,
                    cross_gram_rbf(train, v.val.anomalies.as_ref().unwrap(), sigma)?,
                ])?);
                test_crosses.push(hstack_cross(&[
                    cross_gram_rbf(train, &v.test.targets, sigma)?,
                    cross_gram_rbf(train, v.test.anomalies.as_ref().unwrap(), sigma)?,
                ])?);
            }
            Ok(TrialKit {
                bank: KernelBank::from_kernels(kernels)?,
                width_factor: w,
                val_crosses,
                test_crosses,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialData { kits, val_labels, test_labels })
}

enum Metric {
    ClassificationError,
    Auc,
}

/// Fits one p over the (delta, width) validation grid and returns the
/// test metric of the best cell (ties to lower delta, then lower width).
fn eval_one_p(
    data: &TrialData,
    p: f64,
    delta_multipliers: &[f64],
    max_iter: usize,
    metric: &Metric,
) -> Result<f64> {
    let mut best: Option<(f64, f64, f64, Vec<f64>, usize)> = None;
    // (val_auc, dm, width, val_scores, kit index) of the winner
    for (ki, kit) in data.kits.iter().enumerate() {
        let n = kit.bank.n() as f64;
        for &dm in delta_multipliers {
            let config = MklConfig::new(p, dm * n)?.with_max_iter(max_iter);
            let model = fit_fixed_point(&kit.bank, &config)?;
            let combined = crate::kernel::combine_cross(&kit.val_crosses, &model.beta)?;
            let scores: Vec<f64> = combined
                .values()
                .tr_mul(&model.alpha)
                .iter()
                .map(|&s| crate::fisher::score_from_projection(s))
                .collect();
            let val_auc = roc_auc(&ScoredSet::new(scores.clone(), data.val_labels.clone())?)?;
            let better = match &best {
                None => true,
                Some((bauc, bdm, bw, _, _)) => {
                    val_auc > *bauc
                        || (val_auc == *bauc
                            && (dm, kit.width_factor) < (*bdm, *bw))
                }
            };
            if better {
                best = Some((val_auc, dm, kit.width_factor, scores, ki));
            }
        }
    }
    let (_, dm, _, val_scores, ki) = best.expect("grid is non-empty");
    let kit = &data.kits[ki];
    let n = kit.bank.n() as f64;
    let config = MklConfig::new(p, dm * n)?.with_max_iter(max_iter);
    let model = fit_fixed_point(&kit.bank, &config)?;
    let combined = crate::kernel::combine_cross(&kit.test_crosses, &model.beta)?;
    let test_scores: Vec<f64> = combined
        .values()
        .tr_mul(&model.alpha)
        .iter()
        .map(|&s| crate::fisher::score_from_projection(s))
        .collect();
    match metric {
        Metric::Auc => roc_auc(&ScoredSet::new(test_scores, data.test_labels.clone())?),
        Metric::ClassificationError => {
            let val_set = ScoredSet::new(val_scores, data.val_labels.clone())?;
            let thr = eer_threshold(&val_set)?;
            let mut wrong = 0usize;
            for (s, l) in test_scores.iter().zip(&data.test_labels) {
                let accepted = *s > thr;
                let is_target = *l == Label::Target;
                if accepted != is_target {
                    wrong += 1;
                }
            }
            Ok(wrong as f64 / test_scores.len() as f64)
        }
    }
}

fn aggregate(
    metric: &'static str,
    axis: &'static str,
    p_values: &[f64],
    xs: &[usize],
    per_trial: Vec<Vec<f64>>, // indexed [trial][p_idx * xs.len() + x_idx]
    trials: usize,
) -> ExperimentTable {
    let mut cells = Vec::new();
    for (pi, &p) in p_values.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let values: Vec<f64> = per_trial
                .iter()
                .map(|row| row[pi * xs.len() + xi])
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            cells.push(ExperimentCell { p, x, mean, std, trials });
        }
    }
    ExperimentTable { metric, axis, cells }
}

/// Error-vs-view-count experiment: for every view count J, each trial
/// draws J independent synthetic views, selects (delta, width) per p on
/// the validation split, and records the test classification error at
/// the validation equal-error threshold.
pub fn views_experiment(
    j_values: &[usize],
    opts: &SynthExperimentOptions,
) -> Result<ExperimentTable> {
    if j_values.is_empty() || j_values.iter().any(|&j| j == 0) {
        return Err(Error::Domain("view counts must be positive".into()));
    }
    validate_opts(opts)?;
    let per_trial: Vec<Vec<f64>> = par::try_map_collect(opts.trials, |t| -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(opts.p_values.len() * j_values.len());
        for (pi, &p) in opts.p_values.iter().enumerate() {
            for (xi, &j) in j_values.iter().enumerate() {
                // identical data for every p: seed depends on (trial, J) only
                let spec = SyntheticSpec {
                    views: j,
                    seed: mix_seed(opts.seed, t as u64, xi as u64),
                    ..SyntheticSpec::default().scaled(opts.scale_divisor)
                };
                let views = synth_gaussian_task(&spec)?;
                let data = build_trial_data(&views, &opts.width_factors)?;
                let value = eval_one_p(
                    &data,
                    p,
                    &opts.delta_multipliers,
                    opts.max_iter,
                    &Metric::ClassificationError,
                )?;
                debug_assert_eq!(row.len(), pi * j_values.len() + xi);
                row.push(value);
            }
        }
        Ok(row)
    })?;
    Ok(aggregate(
        "error",
        "views",
        &opts.p_values,
        j_values,
        per_trial,
        opts.trials,
    ))
}

/// One all-noise view: every split gets fresh standard-normal features,
/// so the view carries no label information.
fn noise_view(template: &SyntheticView, dim: usize, rng: &mut impl Rng) -> Result<SyntheticView> {
    let mut draw = |n: usize| -> Result<SampleMatrix> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        SampleMatrix::from_rows(&rows)
    };
    let train = draw(template.train.n_targets())?;
    let val_pos = draw(template.val.n_targets())?;
    let val_neg = draw(template.val.n_anomalies())?;
    let test_pos = draw(template.test.n_targets())?;
    let test_neg = draw(template.test.n_anomalies())?;
    Ok(SyntheticView {
        train: Dataset::new(train, None, "noise:train")?,
        val: Dataset::new(val_pos, Some(val_neg), "noise:val")?,
        test: Dataset::new(test_pos, Some(test_neg), "noise:test")?,
    })
}

/// AUC-vs-noise experiment: a fixed-size kernel bank where `x` of the
/// `total_kernels` views are replaced by uninformative noise views.
pub fn noisy_experiment(
    noise_counts: &[usize],
    total_kernels: usize,
    opts: &SynthExperimentOptions,
) -> Result<ExperimentTable> {
    if total_kernels == 0 {
        return Err(Error::Domain("total kernel count must be positive".into()));
    }
    if noise_counts.iter().any(|&k| k > total_kernels) {
        return Err(Error::Domain(format!(
            "noise count exceeds the bank size {total_kernels}"
        )));
    }
    validate_opts(opts)?;
    let per_trial: Vec<Vec<f64>> = par::try_map_collect(opts.trials, |t| -> Result<Vec<f64>> {
        let mut row = Vec::with_capacity(opts.p_values.len() * noise_counts.len());
        for (pi, &p) in opts.p_values.iter().enumerate() {
            for (xi, &noise) in noise_counts.iter().enumerate() {
                let informative = total_kernels - noise;
                let spec = SyntheticSpec {
                    views: total_kernels,
                    seed: mix_seed(opts.seed, t as u64, 1000 + xi as u64),
                    ..SyntheticSpec::default().scaled(opts.scale_divisor)
                };
                // draw all views, then overwrite the tail with noise
                let mut views = synth_gaussian_task(&spec)?;
                let mut rng =
                    ChaCha12Rng::seed_from_u64(mix_seed(opts.seed ^ 0xabcd, t as u64, xi as u64));
                for v in views[informative..].iter_mut() {
                    *v = noise_view(v, spec.dim, &mut rng)?;
                }
                let data = build_trial_data(&views, &opts.width_factors)?;
                let value =
                    eval_one_p(&data, p, &opts.delta_multipliers, opts.max_iter, &Metric::Auc)?;
                debug_assert_eq!(row.len(), pi * noise_counts.len() + xi);
                row.push(value);
            }
        }
        Ok(row)
    })?;
    Ok(aggregate(
        "auc",
        "noise",
        &opts.p_values,
        noise_counts,
        per_trial,
        opts.trials,
    ))
}

fn validate_opts(opts: &SynthExperimentOptions) -> Result<()> {
    if opts.trials == 0 {
        return Err(Error::Domain("trial count must be at least 1".into()));
    }
    if opts.p_values.is_empty()
        || opts.delta_multipliers.is_empty()
        || opts.width_factors.is_empty()
    {
        return Err(Error::Domain("experiment grids must be non-empty".into()));
    }
    Ok(())
}
