//! Synthetic one-class tasks: Gaussian targets with a shifted Gaussian
//! anomaly population, repeated across independent views, plus noise
//! kernels for robustness experiments.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{gram_rbf, rbf_width_heuristic, KernelBank, SampleMatrix};

/// Generation recipe for the synthetic Gaussian task.
///
/// Target samples come from a 2D Gaussian whose per-dimension mean is
/// uniform on (0,1); anomalies from one with mean uniform on (0.5,1.5).
/// Covariances are random SPD matrices. The whole process repeats
/// `views` times, one independent draw per view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub n_target_train: usize,
    pub n_test_pos: usize,
    pub n_test_neg: usize,
    pub n_val_pos: usize,
    pub n_val_neg: usize,
    pub views: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            n_target_train: 1000,
            n_test_pos: 500,
            n_test_neg: 500,
            n_val_pos: 100,
            n_val_neg: 100,
            views: 1,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    /// Divides all sample counts by `divisor` (minimum 2 per group).
    pub fn scaled(mut self, divisor: usize) -> Self {
        let d = divisor.max(1);
        let shrink = |c: usize| (c / d).max(2);
        self.n_target_train = shrink(self.n_target_train);
        self.n_test_pos = shrink(self.n_test_pos);
        self.n_test_neg = shrink(self.n_test_neg);
        self.n_val_pos = shrink(self.n_val_pos);
        self.n_val_neg = shrink(self.n_val_neg);
        self
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            self.dim,
            self.n_target_train,
            self.n_test_pos,
            self.n_test_neg,
            self.n_val_pos,
            self.n_val_neg,
            self.views,
        ];
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::Domain(
                "synthetic spec counts must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One independent draw of the generation process: train targets plus
/// labelled validation and test splits.
#[derive(Debug, Clone)]
pub struct SyntheticView {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Random symmetric positive-definite matrix `A'A + 0.1 I` with `A`
/// entries uniform on (-1, 1).
pub fn random_spd(dim: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
    let mut spd = a.transpose() * &a;
    for i in 0..dim {
        spd[(i, i)] += 0.1;
    }
    spd
}

struct GaussianSource {
    mean: DVector<f64>,
    chol: DMatrix<f64>,
}

impl GaussianSource {
    fn random(dim: usize, mean_lo: f64, mean_hi: f64, rng: &mut impl Rng) -> Self {
        let mean = DVector::from_fn(dim, |_, _| rng.gen_range(mean_lo..mean_hi));
        let cov = random_spd(dim, rng);
        let chol = Cholesky::new(cov)
            .expect("random SPD construction is positive definite")
            .l();
        Self { mean, chol }
    }

    fn sample(&self, n: usize, rng: &mut impl Rng) -> SampleMatrix {
        let dim = self.mean.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z = DVector::from_fn(dim, |_, _| rng.sample(StandardNormal));
                let x = &self.mean + &self.chol * z;
                x.iter().copied().collect()
            })
            .collect();
        SampleMatrix::from_rows(&rows).expect("generated samples are finite")
    }
}

/// Generates the synthetic task: `views` independent draws, each with its
/// own target and anomaly distributions. Identical seeds give identical
/// output.
pub fn synth_gaussian_task(spec: &SyntheticSpec) -> Result<Vec<SyntheticView>> {
    spec.validate()?;
    let mut views = Vec::with_capacity(spec.views);
    for v in 0..spec.views {
        // one independent stream per view
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        rng.set_stream(v as u64);
        let target = GaussianSource::random(spec.dim, 0.0, 1.0, &mut rng);
        let negative = GaussianSource::random(spec.dim, 0.5, 1.5, &mut rng);

        let train = target.sample(spec.n_target_train, &mut rng);
        let test_pos = target.sample(spec.n_test_pos, &mut rng);
        let test_neg = negative.sample(spec.n_test_neg, &mut rng);
        let val_pos = target.sample(spec.n_val_pos, &mut rng);
        let val_neg = negative.sample(spec.n_val_neg, &mut rng);

        views.push(SyntheticView {
            train: Dataset::new(train, None, format!("synthetic:view{v}:train"))?,
            val: Dataset::new(val_pos, Some(val_neg), format!("synthetic:view{v}:val"))?,
            test: Dataset::new(test_pos, Some(test_neg), format!("synthetic:view{v}:test"))?,
        });
    }
    Ok(views)
}

/// Replaces the trailing kernels of a bank with RBF kernels over random
/// standard-normal data, keeping the total kernel count fixed.
///
/// Noise data matches the training-sample count of the bank and the
/// given feature dimension; widths come from the pairwise-distance
/// heuristic at factor 1/2.
pub fn make_noisy_bank(
    informative: &KernelBank,
    n_noise: usize,
    dim: usize,
    seed: u64,
) -> Result<KernelBank> {
    let total = informative.len();
    if n_noise > total {
        return Err(Error::Domain(format!(
            "cannot inject {n_noise} noise kernels into a bank of {total}"
        )));
    }
    if n_noise == 0 {
        return Ok(informative.clone());
    }
    let n = informative.n();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut kernels: Vec<_> = informative.kernels()[..total - n_noise].to_vec();
    let mut names: Vec<String> = informative.names()[..total - n_noise].to_vec();
    for i in 0..n_noise {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let data = SampleMatrix::from_rows(&rows)?;
        let sigma = rbf_width_heuristic(&data, 0.5)?;
        kernels.push(gram_rbf(&data, sigma)?);
        names.push(format!("noise{i}"));
    }
    KernelBank::new(kernels, names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{validate_psd, PSD_TOL};

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec {
            views: 3,
            ..SyntheticSpec::default().scaled(20)
        };
        let a = synth_gaussian_task(&spec).unwrap();
        let b = synth_gaussian_task(&spec).unwrap();
        for (va, vb) in a.iter().zip(&b) {
            assert_eq!(va.train.targets.data(), vb.train.targets.data());
            assert_eq!(
                va.test.anomalies.as_ref().unwrap().data(),
                vb.test.anomalies.as_ref().unwrap().data()
            );
        }
        // different views differ
        assert_ne!(a[0].train.targets.data(), a[1].train.targets.data());
    }

    #[test]
    fn counts_follow_spec() {
        let spec = SyntheticSpec::default().scaled(10);
        let views = synth_gaussian_task(&spec).unwrap();
        assert_eq!(views.len(), 1);
        let v = &views[0];
        assert_eq!(v.train.n_targets(), 100);
        assert_eq!(v.test.n_targets(), 50);
        assert_eq!(v.test.n_anomalies(), 50);
        assert_eq!(v.val.n_targets(), 10);
        assert_eq!(v.val.n_anomalies(), 10);
        assert_eq!(v.train.dim(), 2);
    }

    #[test]
    fn random_spd_is_positive_definite() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let m = random_spd(2, &mut rng);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e > 0.0), "eigenvalues {eig:?}");
        }
    }

    #[test]
    fn separated_task_is_learnable_single_kernel() {
        use crate::eval::metrics::{roc_auc, Label, ScoredSet};
        use crate::kernel::cross_gram_rbf;
        use crate::model::{KernelCombiner, KernelInfo, TrainedModel};

        let spec = SyntheticSpec {
            seed: 7,
            ..SyntheticSpec::default().scaled(10)
        };
        let view = &synth_gaussian_task(&spec).unwrap()[0];
        let sigma = rbf_width_heuristic(&view.train.targets, 0.5).unwrap();
        let k = gram_rbf(&view.train.targets, sigma).unwrap();
        let fitted = crate::fisher::fit(&k, 1e-3 * k.n() as f64, None).unwrap();
        let model = TrainedModel::from_fn(
            &fitted,
            KernelCombiner::Weighted(vec![1.0]),
            vec![KernelInfo { name: "k0".into(), sigma: Some(sigma), width_factor: None }],
            None,
        );
        let pos = cross_gram_rbf(&view.train.targets, &view.test.targets, sigma).unwrap();
        let neg = cross_gram_rbf(
            &view.train.targets,
            view.test.anomalies.as_ref().unwrap(),
            sigma,
        )
        .unwrap();
        let mut scores = model.score_all(&[pos]).unwrap();
        let n_pos = scores.len();
        scores.extend(model.score_all(&[neg]).unwrap());
        let mut labels = vec![Label::Target; n_pos];
        labels.extend(vec![Label::Anomaly; scores.len() - n_pos]);
        let auc = roc_auc(&ScoredSet::new(scores, labels).unwrap()).unwrap();
        assert!(auc > 0.6, "sanity AUC {auc}");
    }

    #[test]
    fn noisy_bank_reuse_and_replacement() {
        let spec = SyntheticSpec {
            views: 3,
            ..SyntheticSpec::default().scaled(25)
        };
        let views = synth_gaussian_task(&spec).unwrap();
        let kernels: Vec<_> = views
            .iter()
            .map(|v| {
                let sigma = rbf_width_heuristic(&v.train.targets, 0.5).unwrap();
                gram_rbf(&v.train.targets, sigma).unwrap()
            })
            .collect();
        let bank = KernelBank::from_kernels(kernels).unwrap();

        let unchanged = make_noisy_bank(&bank, 0, 2, 5).unwrap();
        for (a, b) in unchanged.kernels().iter().zip(bank.kernels()) {
            assert_eq!(a.values(), b.values());
        }

        let all_noise = make_noisy_bank(&bank, 3, 2, 5).unwrap();
        assert_eq!(all_noise.len(), 3);
        for k in all_noise.kernels() {
            assert!(validate_psd(k, PSD_TOL).unwrap());
        }
        assert_ne!(all_noise.get(0).values(), bank.get(0).values());

        assert!(make_noisy_bank(&bank, 4, 2, 5).is_err());
    }
}
