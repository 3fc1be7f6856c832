//! Evaluation: metrics, hyperparameter selection, repeated trials, and
//! the synthetic experiments.

pub mod experiments;
pub mod grid;
pub mod metrics;
pub mod trials;

pub use experiments::{
    noisy_experiment, views_experiment, ExperimentCell, ExperimentTable, SynthExperimentOptions,
};
pub use grid::{grid_select, CellOutcome, GridData, GridOptions, GridSelection, HyperGrid, Method};
pub use metrics::{eer_threshold, pad_metrics, roc_auc, roc_curve, Label, PadReport, ScoredSet};
pub use trials::{
    random_split, run_trials, run_trials_with_plans, SplitPlan, TrialProtocol, TrialReport,
    TrialRow,
};

/// Derives a stream seed from a master seed and two indices
/// (splitmix-style finalizer); used to give trials and experiment cells
/// independent, reproducible random streams.
pub(crate) fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    let mut z = master
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
