//! Repeated-trial evaluation protocol: random target splits, grid
//! selection on train+validation, AUC on the held-out test split.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::eval::grid::{grid_select, GridData, GridOptions, HyperGrid, Method};
use crate::eval::metrics::{roc_auc, Label, ScoredSet};
use crate::eval::mix_seed;
use crate::kernel::{
    cross_gram_rbf, gram_rbf, hstack_cross, rbf_width_heuristic, KernelBank, SampleMatrix,
};
use crate::model::{KernelInfo, ViewMode};
use crate::par;

/// Split fractions and repetition count. Target samples are divided
/// between train/validation/test; anomalies only between validation and
/// test (training is one-class).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialProtocol {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for TrialProtocol {
    fn default() -> Self {
        Self {
            train_frac: 0.6,
            val_frac: 0.2,
            test_frac: 0.2,
            trials: 10,
            seed: 42,
        }
    }
}

impl TrialProtocol {
    fn validate(&self) -> Result<()> {
        let sum = self.train_frac + self.val_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "split fractions must sum to 1, got {sum}"
            )));
        }
        if self.train_frac <= 0.0 || self.val_frac <= 0.0 || self.test_frac <= 0.0 {
            return Err(Error::Domain("split fractions must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Domain("trial count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Index-level split for one trial. The custom-split hook: callers with
/// dataset-specific protocols build these directly and use
/// [`run_trials_with_plans`].
#[derive(Debug, Clone)]
pub struct SplitPlan {
    pub train_targets: Vec<usize>,
    pub val_targets: Vec<usize>,
    pub test_targets: Vec<usize>,
    pub val_anomalies: Vec<usize>,
    pub test_anomalies: Vec<usize>,
}

/// Seeded random split following the protocol fractions.
pub fn random_split(
    n_targets: usize,
    n_anomalies: usize,
    protocol: &TrialProtocol,
    rng: &mut impl Rng,
) -> Result<SplitPlan> {
    let n_train = (protocol.train_frac * n_targets as f64).floor() as usize;
    let n_val = (protocol.val_frac * n_targets as f64).floor() as usize;
    let n_test = n_targets.saturating_sub(n_train + n_val);
    if n_train < 2 || n_val == 0 || n_test == 0 {
        return Err(Error::InsufficientSplit {
            class: "target",
            needed: 4,
            available: n_targets,
        });
    }
    if n_anomalies < 2 {
        return Err(Error::InsufficientSplit {
            class: "anomaly",
            needed: 2,
            available: n_anomalies,
        });
    }
    let mut t_idx: Vec<usize> = (0..n_targets).collect();
    t_idx.shuffle(rng);
    let mut a_idx: Vec<usize> = (0..n_anomalies).collect();
    a_idx.shuffle(rng);
    let val_share = protocol.val_frac / (protocol.val_frac + protocol.test_frac);
    let n_val_a = ((n_anomalies as f64 * val_share).floor() as usize)
        .clamp(1, n_anomalies - 1);
    Ok(SplitPlan {
        train_targets: t_idx[..n_train].to_vec(),
        val_targets: t_idx[n_train..n_train + n_val].to_vec(),
        test_targets: t_idx[n_train + n_val..].to_vec(),
        val_anomalies: a_idx[..n_val_a].to_vec(),
        test_anomalies: a_idx[n_val_a..].to_vec(),
    })
}

/// One completed trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub p: Option<f64>,
    pub delta_multiplier: f64,
    pub width_factor: f64,
    pub test_auc: f64,
}

/// Aggregated trial results.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub rows: Vec<TrialRow>,
    pub mean_auc: f64,
    pub std_auc: f64,
}

impl TrialReport {
    fn from_rows(rows: Vec<TrialRow>) -> Self {
        let n = rows.len() as f64;
        let mean = rows.iter().map(|r| r.test_auc).sum::<f64>() / n;
        let std = if rows.len() < 2 {
            0.0
        } else {
            (rows
                .iter()
                .map(|r| (r.test_auc - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0))
                .sqrt()
        };
        Self { rows, mean_auc: mean, std_auc: std }
    }

    /// Line-oriented export: one row per trial plus a summary row.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# trial p delta_multiplier width_factor test_auc\n");
        for r in &self.rows {
            let p = r.p.map_or_else(|| "-".to_string(), |v| format!("{v}"));
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                r.trial,
                p,
                r.delta_multiplier,
                r.width_factor,
                crate::data::fmt_f64(r.test_auc)
            ));
        }
        out.push_str(&format!(
            "summary trials {} mean {} std {}\n",
            self.rows.len(),
            crate::data::fmt_f64(self.mean_auc),
            crate::data::fmt_f64(self.std_auc)
        ));
        out
    }
}

fn dataset_views(dataset: &Dataset, mode: ViewMode) -> (Vec<SampleMatrix>, Vec<SampleMatrix>) {
    let anomalies = dataset
        .anomalies
        .as_ref()
        .expect("caller checked anomalies are present");
    match mode {
        ViewMode::Single => (vec![dataset.targets.clone()], vec![anomalies.clone()]),
        ViewMode::PerAttribute => (dataset.targets.column_views(), anomalies.column_views()),
    }
}

/// Runs the seeded random-split protocol. Identical seeds reproduce the
/// report bit-for-bit.
pub fn run_trials(
    dataset: &Dataset,
    view_mode: ViewMode,
    protocol: &TrialProtocol,
    grid: &HyperGrid,
    method: Method,
    opts: &GridOptions,
) -> Result<TrialReport> {
    protocol.validate()?;
    if dataset.anomalies.is_none() {
        return Err(Error::InsufficientSplit {
            class: "anomaly",
            needed: 2,
            available: 0,
        });
    }
    let plans: Vec<SplitPlan> = (0..protocol.trials)
        .map(|t| {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(protocol.seed, t as u64, 0));
            random_split(
                dataset.n_targets(),
                dataset.n_anomalies(),
                protocol,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;
    run_trials_with_plans(dataset, view_mode, &plans, grid, method, opts)
}

/// Runs the protocol over caller-provided splits (one per trial).
pub fn run_trials_with_plans(
    dataset: &Dataset,
    view_mode: ViewMode,
    plans: &[SplitPlan],
    grid: &HyperGrid,
    method: Method,
    opts: &GridOptions,
) -> Result<TrialReport> {
    if plans.is_empty() {
        return Err(Error::Domain("no split plans given".into()));
    }
    if dataset.anomalies.is_none() {
        return Err(Error::InsufficientSplit {
            class: "anomaly",
            needed: 2,
            available: 0,
        });
    }
    let (target_views, anomaly_views) = dataset_views(dataset, view_mode);
    let rows: Vec<TrialRow> = par::try_map_collect(plans.len(), |t| {
        run_one_trial(t, &plans[t], &target_views, &anomaly_views, grid, method, opts)
    })?;
    Ok(TrialReport::from_rows(rows))
}

fn run_one_trial(
    trial: usize,
    plan: &SplitPlan,
    target_views: &[SampleMatrix],
    anomaly_views: &[SampleMatrix],
    grid: &HyperGrid,
    method: Method,
    opts: &GridOptions,
) -> Result<TrialRow> {
    let builder = |width_factor: f64| -> Result<GridData> {
        let mut kernels = Vec::with_capacity(target_views.len());
        let mut crosses = Vec::with_capacity(target_views.len());
        let mut info = Vec::with_capacity(target_views.len());
        for (v, (tv, av)) in target_views.iter().zip(anomaly_views).enumerate() {
            let train = tv.select_rows(&plan.train_targets);
            let val_pos = tv.select_rows(&plan.val_targets);
            let val_neg = av.select_rows(&plan.val_anomalies);
            let sigma = rbf_width_heuristic(&train, width_factor)?;
            kernels.push(gram_rbf(&train, sigma)?);
            crosses.push(hstack_cross(&[
                cross_gram_rbf(&train, &val_pos, sigma)?,
                cross_gram_rbf(&train, &val_neg, sigma)?,
            ])?);
            info.push(KernelInfo {
                name: format!("view{v}"),
                sigma: Some(sigma),
                width_factor: Some(width_factor),
            });
        }
        let mut labels = vec![Label::Target; plan.val_targets.len()];
        labels.extend(vec![Label::Anomaly; plan.val_anomalies.len()]);
        Ok(GridData {
            bank: KernelBank::from_kernels(kernels)?,
            kernel_info: info,
            val_crosses: crosses,
            val_labels: labels,
        })
    };
    let selection = grid_select(builder, grid, method, opts)?;

    // test scoring reuses the widths recorded by the winning cell
    let mut test_crosses = Vec::with_capacity(target_views.len());
    for (k, (tv, av)) in target_views.iter().zip(anomaly_views).enumerate() {
        let train = tv.select_rows(&plan.train_targets);
        let test_pos = tv.select_rows(&plan.test_targets);
        let test_neg = av.select_rows(&plan.test_anomalies);
        let sigma = selection.model.kernels[k]
            .sigma
            .expect("trial kernels always carry widths");
        test_crosses.push(hstack_cross(&[
            cross_gram_rbf(&train, &test_pos, sigma)?,
            cross_gram_rbf(&train, &test_neg, sigma)?,
        ])?);
    }
    let scores = selection.model.score_all(&test_crosses)?;
    let mut labels = vec![Label::Target; plan.test_targets.len()];
    labels.extend(vec![Label::Anomaly; plan.test_anomalies.len()]);
    let auc = roc_auc(&ScoredSet::new(scores, labels)?)?;
    Ok(TrialRow {
        trial,
        p: selection.p,
        delta_multiplier: selection.delta_multiplier,
        width_factor: selection.width_factor,
        test_auc: auc,
    })
}
