//! Exhaustive hyperparameter selection on a validation split.

use crate::error::{Error, Result};
use crate::eval::metrics::{roc_auc, Label, ScoredSet};
use crate::fisher;
use crate::kernel::{fuse_average, fuse_product, CrossKernel, KernelBank};
use crate::mkl::{fit_fixed_point, fit_gradient_ascent, MklConfig};
use crate::model::{KernelCombiner, KernelInfo, TrainedModel};
use crate::par;

/// Hyperparameter grid. Defaults follow the standard search space:
/// `p` from 1 through 10^6, regularizer multipliers of `n` from 1e-4 to
/// 1e2, and width factors 1/4, 1/2, 1 on the distance heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub p_values: Vec<f64>,
    pub delta_multipliers: Vec<f64>,
    pub width_factors: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            p_values: vec![
                1.0,
                32.0 / 31.0,
                16.0 / 15.0,
                8.0 / 7.0,
                4.0 / 3.0,
                2.0,
                4.0,
                8.0,
                1e6,
            ],
            delta_multipliers: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 1e2],
            width_factors: vec![0.25, 0.5, 1.0],
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        if self.delta_multipliers.is_empty() || self.width_factors.is_empty() {
            return Err(Error::Domain("hyperparameter grid is empty".into()));
        }
        Ok(())
    }
}

/// Training method selected on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Fixed-point multiple kernel learning.
    LpMkl,
    /// Gradient-ascent multiple kernel learning (reference solver).
    LpMklGrad,
    /// Arithmetic-mean kernel, single-kernel solver.
    FnAverage,
    /// Geometric-mean kernel, single-kernel solver.
    FnProduct,
}

impl Method {
    pub fn uses_p(&self) -> bool {
        matches!(self, Method::LpMkl | Method::LpMklGrad)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Method::LpMkl => "lp-mkl",
            Method::LpMklGrad => "lp-mkl-grad",
            Method::FnAverage => "fn-average",
            Method::FnProduct => "fn-product",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self> {
        match s {
            "lp-mkl" => Ok(Method::LpMkl),
            "lp-mkl-grad" => Ok(Method::LpMklGrad),
            "fn-average" => Ok(Method::FnAverage),
            "fn-product" => Ok(Method::FnProduct),
            other => Err(Error::Format(format!("unknown method '{other}'"))),
        }
    }
}

/// Solver knobs shared by every grid cell.
#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    pub max_iter: usize,
    pub grad_max_iter: usize,
    /// Gradient-norm stop for the gradient-ascent method;
    /// `None` means `1e-7 * sqrt(n)`.
    pub grad_tol: Option<f64>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            max_iter: MklConfig::DEFAULT_MAX_ITER,
            grad_max_iter: 100_000,
            grad_tol: None,
        }
    }
}

/// Training bank and validation blocks for one width factor.
#[derive(Debug, Clone)]
pub struct GridData {
    pub bank: KernelBank,
    pub kernel_info: Vec<KernelInfo>,
    pub val_crosses: Vec<CrossKernel>,
    pub val_labels: Vec<Label>,
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub p: Option<f64>,
    pub delta_multiplier: f64,
    pub width_factor: f64,
    pub result: std::result::Result<f64, String>,
}

/// Winning cell plus its already-fitted model.
#[derive(Debug, Clone)]
pub struct GridSelection {
    pub p: Option<f64>,
    pub delta_multiplier: f64,
    pub width_factor: f64,
    pub val_auc: f64,
    pub model: TrainedModel,
    pub cells: Vec<CellOutcome>,
}

fn fit_cell(
    data: &GridData,
    method: Method,
    p: Option<f64>,
    delta: f64,
    opts: &GridOptions,
) -> Result<TrainedModel> {
    match method {
        Method::LpMkl | Method::LpMklGrad => {
            let config = MklConfig::new(p.expect("mkl cell without p"), delta)?
                .with_max_iter(opts.max_iter);
            let model = if method == Method::LpMkl {
                fit_fixed_point(&data.bank, &config)?
            } else {
                let n = data.bank.n();
                let tol = opts.grad_tol.unwrap_or(1e-7 * (n as f64).sqrt());
                let config = config.with_max_iter(opts.grad_max_iter);
                fit_gradient_ascent(&data.bank, &config, None, tol)?
            };
            Ok(TrainedModel::from_mkl(&model, data.kernel_info.clone(), None))
        }
        Method::FnAverage | Method::FnProduct => {
            let (fused, combiner) = if method == Method::FnAverage {
                (fuse_average(&data.bank)?, KernelCombiner::Average)
            } else {
                (fuse_product(&data.bank)?, KernelCombiner::Product)
            };
            let fitted = fisher::fit(&fused, delta, None)?;
            Ok(TrainedModel::from_fn(
                &fitted,
                combiner,
                data.kernel_info.clone(),
                None,
            ))
        }
    }
}

/// Fits every cell of the grid, scores the validation split, and returns
/// the cell with the highest validation AUC. Ties break to lower `p`,
/// then lower regularizer multiplier, then lower width factor. The
/// winning model is returned as fitted, never refitted.
///
/// `build` maps a width factor to the training bank and validation
/// blocks; it is called once per width factor.
pub fn grid_select<F>(
    build: F,
    grid: &HyperGrid,
    method: Method,
    opts: &GridOptions,
) -> Result<GridSelection>
where
    F: Fn(f64) -> Result<GridData>,
{
    grid.validate()?;
    if method.uses_p() && grid.p_values.is_empty() {
        return Err(Error::Domain("grid has no p values".into()));
    }
    let datasets: Vec<GridData> = grid
        .width_factors
        .iter()
        .map(|&w| build(w))
        .collect::<Result<_>>()?;
    for d in &datasets {
        let has_target = d.val_labels.iter().any(|&l| l == Label::Target);
        let has_anomaly = d.val_labels.iter().any(|&l| l == Label::Anomaly);
        if !has_target || !has_anomaly {
            return Err(Error::UndefinedMetric(
                "validation split must contain both classes".into(),
            ));
        }
    }

    let p_axis: Vec<Option<f64>> = if method.uses_p() {
        grid.p_values.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    // width-major order; selection below is order-independent
    let mut cells = Vec::new();
    for (wi, &w) in grid.width_factors.iter().enumerate() {
        for &dm in &grid.delta_multipliers {
            for &p in &p_axis {
                cells.push((wi, w, dm, p));
            }
        }
    }

    let evaluated: Vec<(CellOutcome, Option<TrainedModel>)> =
        par::map_collect(cells.len(), |idx| {
            let (wi, w, dm, p) = cells[idx];
            let data = &datasets[wi];
            let delta = dm * data.bank.n() as f64;
            let outcome = fit_cell(data, method, p, delta, opts).and_then(|model| {
                let scores = model.score_all(&data.val_crosses)?;
                let set = ScoredSet::new(scores, data.val_labels.clone())?;
                Ok((roc_auc(&set)?, model))
            });
            match outcome {
                Ok((auc, model)) => (
                    CellOutcome {
                        p,
                        delta_multiplier: dm,
                        width_factor: w,
                        result: Ok(auc),
                    },
                    Some(model),
                ),
                Err(e) => (
                    CellOutcome {
                        p,
                        delta_multiplier: dm,
                        width_factor: w,
                        result: Err(e.to_string()),
                    },
                    None,
                ),
            }
        });

    let mut best: Option<(usize, f64)> = None;
    for (idx, (cell, model)) in evaluated.iter().enumerate() {
        let auc = match (&cell.result, model) {
            (Ok(auc), Some(_)) => *auc,
            _ => continue,
        };
        let better = match best {
            None => true,
            Some((bi, bauc)) => {
                let b = &evaluated[bi].0;
                let key = |c: &CellOutcome| {
                    (
                        c.p.unwrap_or(f64::NEG_INFINITY),
                        c.delta_multiplier,
                        c.width_factor,
                    )
                };
                auc > bauc || (auc == bauc && key(cell) < key(b))
            }
        };
        if better {
            best = Some((idx, auc));
        }
    }
    let (best_idx, val_auc) = best.ok_or_else(|| {
        let first_err = evaluated
            .iter()
            .find_map(|(c, _)| c.result.as_ref().err().cloned())
            .unwrap_or_else(|| "no cells evaluated".into());
        Error::GridFailed(evaluated.len(), first_err)
    })?;

    let mut evaluated = evaluated;
    let (best_cell, best_model) = evaluated.swap_remove(best_idx);
    let cells: Vec<CellOutcome> = {
        let mut all: Vec<CellOutcome> = evaluated.into_iter().map(|(c, _)| c).collect();
        all.push(best_cell.clone());
        all
    };
    Ok(GridSelection {
        p: best_cell.p,
        delta_multiplier: best_cell.delta_multiplier,
        width_factor: best_cell.width_factor,
        val_auc,
        model: best_model.expect("winning cell has a model"),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{cross_gram_rbf, gram_rbf, rbf_width_heuristic, SampleMatrix};
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn gaussian_rows(
        rng: &mut ChaCha12Rng,
        n: usize,
        center: (f64, f64),
        spread: f64,
    ) -> Vec<Vec<f64>> {
        use rand_distr::{Distribution, Normal};
        let norm = Normal::new(0.0, spread).unwrap();
        (0..n)
            .map(|_| {
                vec![
                    center.0 + norm.sample(rng),
                    center.1 + norm.sample(rng),
                ]
            })
            .collect()
    }

    fn build_data(
        rng_seed: u64,
        informative_first: bool,
    ) -> impl Fn(f64) -> Result<GridData> {
        move |width_factor: f64| {
            let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
            let train =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 40, (0.0, 0.0), 0.4)).unwrap();
            let val_pos =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 15, (0.0, 0.0), 0.4)).unwrap();
            let val_neg =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 15, (2.5, 2.5), 0.4)).unwrap();

            // two views: one informative (the real features), one noise
            let noise_train =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 40, (0.0, 0.0), 1.0)).unwrap();
            let noise_val_pos =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 15, (0.0, 0.0), 1.0)).unwrap();
            let noise_val_neg =
                SampleMatrix::from_rows(&gaussian_rows(&mut rng, 15, (0.0, 0.0), 1.0)).unwrap();

            let sigma_info = rbf_width_heuristic(&train, width_factor)?;
            let sigma_noise = rbf_width_heuristic(&noise_train, width_factor)?;
            let (views, sigmas): (Vec<_>, Vec<_>) = if informative_first {
                (
                    vec![
                        (&train, &val_pos, &val_neg),
                        (&noise_train, &noise_val_pos, &noise_val_neg),
                    ],
                    vec![sigma_info, sigma_noise],
                )
            } else {
                (
                    vec![
                        (&noise_train, &noise_val_pos, &noise_val_neg),
                        (&train, &val_pos, &val_neg),
                    ],
                    vec![sigma_noise, sigma_info],
                )
            };

            let mut kernels = Vec::new();
            let mut crosses = Vec::new();
            let mut info = Vec::new();
            for ((tr, vp, vn), sigma) in views.iter().zip(&sigmas) {
                kernels.push(gram_rbf(tr, *sigma)?);
                let cp = cross_gram_rbf(tr, vp, *sigma)?;
                let cn = cross_gram_rbf(tr, vn, *sigma)?;
                crosses.push(crate::kernel::hstack_cross(&[cp, cn])?);
                info.push(KernelInfo {
                    name: format!("view{}", info.len()),
                    sigma: Some(*sigma),
                    width_factor: Some(width_factor),
                });
            }
            let mut labels = vec![Label::Target; 15];
            labels.extend(vec![Label::Anomaly; 15]);
            Ok(GridData {
                bank: KernelBank::from_kernels(kernels)?,
                kernel_info: info,
                val_crosses: crosses,
                val_labels: labels,
            })
        }
    }

    #[test]
    fn single_cell_grid_selects_it() {
        let grid = HyperGrid {
            p_values: vec![2.0],
            delta_multipliers: vec![1e-2],
            width_factors: vec![0.5],
        };
        let sel = grid_select(
            build_data(4, true),
            &grid,
            Method::LpMkl,
            &GridOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.p, Some(2.0));
        assert_eq!(sel.delta_multiplier, 1e-2);
        assert_eq!(sel.width_factor, 0.5);
        assert_eq!(sel.cells.len(), 1);
    }

    #[test]
    fn sparse_p_selected_when_one_kernel_carries_signal() {
        let grid = HyperGrid {
            p_values: vec![1.0, 32.0 / 31.0, 4.0 / 3.0, 2.0, 8.0],
            delta_multipliers: vec![1e-3, 1e-2, 1e-1],
            width_factors: vec![0.5],
        };
        let sel = grid_select(
            build_data(10, true),
            &grid,
            Method::LpMkl,
            &GridOptions::default(),
        )
        .unwrap();
        assert!(
            sel.p.unwrap() <= 4.0 / 3.0,
            "expected sparse p, selected {:?}",
            sel.p
        );
    }

    #[test]
    fn fn_methods_ignore_p_axis() {
        let grid = HyperGrid {
            p_values: vec![1.0, 2.0],
            delta_multipliers: vec![1e-2, 1e-1],
            width_factors: vec![0.5],
        };
        let sel = grid_select(
            build_data(5, true),
            &grid,
            Method::FnAverage,
            &GridOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.p, None);
        assert_eq!(sel.cells.len(), 2);
    }

    #[test]
    fn deterministic_tie_breaking() {
        // With a validation split that every cell classifies perfectly,
        // the lowest (p, delta, width) cell must win.
        let grid = HyperGrid {
            p_values: vec![2.0, 1.0],
            delta_multipliers: vec![1e-1, 1e-2],
            width_factors: vec![1.0, 0.5],
        };
        let sel = grid_select(
            build_data(8, true),
            &grid,
            Method::LpMkl,
            &GridOptions::default(),
        )
        .unwrap();
        let perfect: Vec<_> = sel
            .cells
            .iter()
            .filter(|c| matches!(c.result, Ok(a) if a == sel.val_auc))
            .collect();
        if perfect.len() > 1 {
            assert_eq!(sel.p, Some(1.0));
            assert_eq!(sel.delta_multiplier, 1e-2);
            assert_eq!(sel.width_factor, 0.5);
        }
    }
}
