//! Kernel matrices: RBF Gram construction, weighted combination, and
//! fixed-rule fusion.
//!
//! All Gram matrices are computed once and stored dense; solvers never
//! evaluate kernel functions on the fly. Matrices are immutable after
//! construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par;

/// Absolute tolerance for the symmetry check on kernel matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default relative tolerance for the opt-in PSD validation.
pub const PSD_TOL: f64 = 1e-8;

/// Row-major collection of `n` samples with `d` features each.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    /// Builds a sample matrix, rejecting empty or non-finite input.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidData(format!(
                "sample matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData(
                "sample matrix contains a non-finite value".into(),
            ));
        }
        Ok(Self { data })
    }

    /// Builds from row slices (one sample per row).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidData("no samples".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidData("ragged sample rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), d, &flat))
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// The `i`-th sample as a slice-backed row view.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    /// One single-column sample matrix per feature attribute.
    pub fn column_views(&self) -> Vec<SampleMatrix> {
        (0..self.dim())
            .map(|j| SampleMatrix {
                data: DMatrix::from_column_slice(
                    self.n(),
                    1,
                    self.data.column(j).as_slice(),
                ),
            })
            .collect()
    }

    /// Selects a subset of rows, preserving the given index order.
    pub fn select_rows(&self, idx: &[usize]) -> SampleMatrix {
        SampleMatrix {
            data: self.data.select_rows(idx.iter()),
        }
    }
}

fn sq_dist(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let d = a.ncols();
    let mut s = 0.0;
    for k in 0..d {
        let t = a[(i, k)] - b[(j, k)];
        s += t * t;
    }
    s
}

/// RBF kernel parameters: the width and, when derived from the pairwise
/// distance heuristic, the factor that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub sigma: f64,
    pub width_factor: Option<f64>,
}

impl KernelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidData(format!("width must be positive, got {sigma}")));
        }
        Ok(Self { sigma, width_factor: None })
    }
}

/// Symmetric kernel (Gram) matrix over one sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
}

impl KernelMatrix {
    /// Wraps a square matrix after checking symmetry within [`SYMMETRY_TOL`].
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::Shape {
                context: "kernel matrix",
                expected: "square matrix".into(),
                got: format!("{}x{}", values.nrows(), values.ncols()),
            });
        }
        let max_dev = max_asymmetry(&values);
        if max_dev > SYMMETRY_TOL {
            return Err(Error::Asymmetric { max_dev, tol: SYMMETRY_TOL });
        }
        Ok(Self { values })
    }

    /// Trusted constructor for matrices symmetric by construction.
    pub(crate) fn new_unchecked(values: DMatrix<f64>) -> Self {
        debug_assert!(max_asymmetry(&values) <= SYMMETRY_TOL);
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Column `i` of the Gram matrix (the train-vs-sample kernel vector
    /// of training sample `i`).
    pub fn column(&self, i: usize) -> DVector<f64> {
        self.values.column(i).into_owned()
    }

    pub fn trace(&self) -> f64 {
        self.values.diagonal().sum()
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut max_dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_dev = max_dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    max_dev
}

/// Ordered collection of base kernels over the same sample set.
#[derive(Debug, Clone)]
pub struct KernelBank {
    kernels: Vec<KernelMatrix>,
    names: Vec<String>,
}

impl KernelBank {
    pub fn new(kernels: Vec<KernelMatrix>, names: Vec<String>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyBank);
        }
        if names.len() != kernels.len() {
            return Err(Error::Shape {
                context: "kernel bank names",
                expected: format!("{}", kernels.len()),
                got: format!("{}", names.len()),
            });
        }
        let n = kernels[0].n();
        for (j, k) in kernels.iter().enumerate() {
            if k.n() != n {
                return Err(Error::Shape {
                    context: "kernel bank",
                    expected: format!("{n}x{n}"),
                    got: format!("kernel {j} is {0}x{0}", k.n()),
                });
            }
        }
        Ok(Self { kernels, names })
    }

    /// Bank with generated names `k0..k{J-1}`.
    pub fn from_kernels(kernels: Vec<KernelMatrix>) -> Result<Self> {
        let names = (0..kernels.len()).map(|j| format!("k{j}")).collect();
        Self::new(kernels, names)
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn n(&self) -> usize {
        self.kernels[0].n()
    }

    pub fn kernels(&self) -> &[KernelMatrix] {
        &self.kernels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, j: usize) -> &KernelMatrix {
        &self.kernels[j]
    }

    /// Validates every member kernel as PSD at relative tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<bool> {
        for k in &self.kernels {
            if !validate_psd(k, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Train-rows by test-columns kernel block for one base kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossKernel {
    values: DMatrix<f64>,
}

impl CrossKernel {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    /// Training-sample count (rows).
    pub fn n_train(&self) -> usize {
        self.values.nrows()
    }

    /// Test-sample count (columns).
    pub fn n_test(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, t: usize) -> DVector<f64> {
        self.values.column(t).into_owned()
    }
}

/// Average pairwise Euclidean distance scaled by `factor`.
///
/// This is the width heuristic used to pick RBF widths: the returned
/// value is `factor * D` where `D` is the mean over all unordered sample
/// pairs of their Euclidean distance.
pub fn rbf_width_heuristic(x: &SampleMatrix, factor: f64) -> Result<f64> {
    let n = x.n();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    if !(factor > 0.0) {
        return Err(Error::Domain(format!("width factor must be positive, got {factor}")));
    }
    // Partial sums per row i over j > i, reduced sequentially so the
    // result does not depend on the thread count.
    let partials = par::map_collect(n, |i| {
        let mut s = 0.0;
        for j in (i + 1)..n {
            s += sq_dist(x.data(), i, x.data(), j).sqrt();
        }
        s
    });
    let total: f64 = partials.iter().sum();
    let pairs = (n * (n - 1) / 2) as f64;
    let mean_dist = total / pairs;
    if mean_dist == 0.0 {
        return Err(Error::DegenerateData(
            "all training samples are identical; pairwise distance heuristic is zero".into(),
        ));
    }
    Ok(factor * mean_dist)
}

/// RBF Gram matrix `K[i][j] = exp(-||x_i - x_j||^2 / (2 sigma^2))`.
pub fn gram_rbf(x: &SampleMatrix, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidData(format!("width must be positive, got {sigma}")));
    }
    let n = x.n();
    let denom = 2.0 * sigma * sigma;
    let rows = par::map_collect(n, |i| {
        let mut row = vec![0.0; n];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = (-sq_dist(x.data(), i, x.data(), j) / denom).exp();
        }
        row
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(KernelMatrix::new_unchecked(DMatrix::from_row_slice(n, n, &flat)))
}

/// Train-vs-test RBF block `values[i][t] = exp(-||x_i - z_t||^2 / (2 sigma^2))`.
pub fn cross_gram_rbf(
    train: &SampleMatrix,
    test: &SampleMatrix,
    sigma: f64,
) -> Result<CrossKernel> {
    if train.dim() != test.dim() {
        return Err(Error::Shape {
            context: "cross kernel",
            expected: format!("feature dimension {}", train.dim()),
            got: format!("{}", test.dim()),
        });
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidData(format!("width must be positive, got {sigma}")));
    }
    let (n, m) = (train.n(), test.n());
    let denom = 2.0 * sigma * sigma;
    let cols = par::map_collect(m, |t| {
        let mut col = vec![0.0; n];
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = (-sq_dist(train.data(), i, test.data(), t) / denom).exp();
        }
        col
    });
    let flat: Vec<f64> = cols.into_iter().flatten().collect();
    Ok(CrossKernel::new(DMatrix::from_vec(n, m, flat)))
}

/// Converts a symmetric distance matrix into an RBF kernel,
/// `K = exp(-D^2 / (2 sigma^2))` element-wise.
pub fn kernel_from_distances(dist: &DMatrix<f64>, sigma: f64) -> Result<KernelMatrix> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidData(format!("width must be positive, got {sigma}")));
    }
    let denom = 2.0 * sigma * sigma;
    let k = dist.map(|d| (-(d * d) / denom).exp());
    KernelMatrix::new(k)
}

/// Element-wise weighted sum of the bank's kernels.
pub fn combine_weighted(bank: &KernelBank, beta: &[f64]) -> Result<KernelMatrix> {
    if beta.len() != bank.len() {
        return Err(Error::Shape {
            context: "kernel weights",
            expected: format!("{}", bank.len()),
            got: format!("{}", beta.len()),
        });
    }
    if let Some(&w) = beta.iter().find(|&&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidWeight(w));
    }
    let n = bank.n();
    let mut acc = DMatrix::zeros(n, n);
    for (k, &w) in bank.kernels().iter().zip(beta) {
        for (slot, &v) in acc.iter_mut().zip(k.values().iter()) {
            *slot += w * v;
        }
    }
    Ok(KernelMatrix::new_unchecked(acc))
}

/// Weighted sum of cross-kernel blocks, matching [`combine_weighted`].
pub fn combine_cross(crosses: &[CrossKernel], beta: &[f64]) -> Result<CrossKernel> {
    if crosses.is_empty() {
        return Err(Error::EmptyBank);
    }
    if beta.len() != crosses.len() {
        return Err(Error::Shape {
            context: "cross-kernel weights",
            expected: format!("{}", crosses.len()),
            got: format!("{}", beta.len()),
        });
    }
    if let Some(&w) = beta.iter().find(|&&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidWeight(w));
    }
    let (n, m) = (crosses[0].n_train(), crosses[0].n_test());
    let mut acc = DMatrix::zeros(n, m);
    for (c, &w) in crosses.iter().zip(beta) {
        if c.n_train() != n || c.n_test() != m {
            return Err(Error::Shape {
                context: "cross-kernel blocks",
                expected: format!("{n}x{m}"),
                got: format!("{}x{}", c.n_train(), c.n_test()),
            });
        }
        for (slot, &v) in acc.iter_mut().zip(c.values().iter()) {
            *slot += w * v;
        }
    }
    Ok(CrossKernel::new(acc))
}

/// Concatenates cross-kernel blocks column-wise (same training rows,
/// test samples appended in order).
pub fn hstack_cross(blocks: &[CrossKernel]) -> Result<CrossKernel> {
    if blocks.is_empty() {
        return Err(Error::EmptyBank);
    }
    let n = blocks[0].n_train();
    let total: usize = blocks.iter().map(|b| b.n_test()).sum();
    let mut m = DMatrix::zeros(n, total);
    let mut offset = 0;
    for b in blocks {
        if b.n_train() != n {
            return Err(Error::Shape {
                context: "cross-kernel concatenation",
                expected: format!("{n} training rows"),
                got: format!("{}", b.n_train()),
            });
        }
        m.view_mut((0, offset), (n, b.n_test())).copy_from(b.values());
        offset += b.n_test();
    }
    Ok(CrossKernel::new(m))
}

/// Element-wise arithmetic mean of the bank's kernels.
pub fn fuse_average(bank: &KernelBank) -> Result<KernelMatrix> {
    let w = 1.0 / bank.len() as f64;
    combine_weighted(bank, &vec![w; bank.len()])
}

/// Element-wise arithmetic mean of cross-kernel blocks.
pub fn fuse_average_cross(crosses: &[CrossKernel]) -> Result<CrossKernel> {
    if crosses.is_empty() {
        return Err(Error::EmptyBank);
    }
    let w = 1.0 / crosses.len() as f64;
    combine_cross(crosses, &vec![w; crosses.len()])
}

/// Element-wise geometric mean of the bank's kernels.
///
/// Requires non-negative entries (always true for RBF kernels).
pub fn fuse_product(bank: &KernelBank) -> Result<KernelMatrix> {
    let n = bank.n();
    let exponent = 1.0 / bank.len() as f64;
    let mut acc = DMatrix::from_element(n, n, 1.0);
    for k in bank.kernels() {
        for (idx, (slot, &v)) in acc.iter_mut().zip(k.values().iter()).enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeEntry(v, idx % n, idx / n));
            }
            *slot *= v;
        }
    }
    let fused = acc.map(|v| v.powf(exponent));
    Ok(KernelMatrix::new_unchecked(fused))
}

/// Element-wise geometric mean of cross-kernel blocks.
pub fn fuse_product_cross(crosses: &[CrossKernel]) -> Result<CrossKernel> {
    if crosses.is_empty() {
        return Err(Error::EmptyBank);
    }
    let (n, m) = (crosses[0].n_train(), crosses[0].n_test());
    let exponent = 1.0 / crosses.len() as f64;
    let mut acc = DMatrix::from_element(n, m, 1.0);
    for c in crosses {
        if c.n_train() != n || c.n_test() != m {
            return Err(Error::Shape {
                context: "cross-kernel blocks",
                expected: format!("{n}x{m}"),
                got: format!("{}x{}", c.n_train(), c.n_test()),
            });
        }
        for (idx, (slot, &v)) in acc.iter_mut().zip(c.values().iter()).enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeEntry(v, idx % n, idx / n));
            }
            *slot *= v;
        }
    }
    Ok(CrossKernel::new(acc.map(|v| v.powf(exponent))))
}

/// Checks positive semidefiniteness: true iff the minimum eigenvalue is
/// at least `-tol * max(diagonal)`.
///
/// The eigen-decomposition is O(n^3); callers opt in where it matters.
pub fn validate_psd(k: &KernelMatrix, tol: f64) -> Result<bool> {
    let max_dev = max_asymmetry(k.values());
    if max_dev > SYMMETRY_TOL {
        return Err(Error::Asymmetric { max_dev, tol: SYMMETRY_TOL });
    }
    let eig = k.values().clone().symmetric_eigenvalues();
    let min_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max_diag = k
        .values()
        .diagonal()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(min_eig >= -tol * max_diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn samples(rows: &[&[f64]]) -> SampleMatrix {
        SampleMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn width_heuristic_single_pair() {
        let x = samples(&[&[0.0, 0.0], &[3.0, 4.0]]);
        assert_relative_eq!(rbf_width_heuristic(&x, 1.0).unwrap(), 5.0);
        assert_relative_eq!(rbf_width_heuristic(&x, 0.5).unwrap(), 2.5);
    }

    #[test]
    fn width_heuristic_three_points() {
        // pairs: (0,1) dist 1, (0,2) dist 1, (1,2) dist sqrt(2)
        let x = samples(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let expect = (1.0 + 1.0 + 2f64.sqrt()) / 3.0;
        assert_relative_eq!(rbf_width_heuristic(&x, 1.0).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn width_heuristic_errors() {
        let one = samples(&[&[1.0, 2.0]]);
        assert!(matches!(
            rbf_width_heuristic(&one, 1.0),
            Err(Error::InsufficientSamples { .. })
        ));
        let same = samples(&[&[1.0], &[1.0], &[1.0]]);
        assert!(matches!(
            rbf_width_heuristic(&same, 1.0),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn gram_rbf_unit_diagonal_and_known_value() {
        let sigma = 0.7;
        let x = samples(&[&[0.0], &[sigma * 2f64.sqrt()]]);
        let k = gram_rbf(&x, sigma).unwrap();
        assert_eq!(k.values()[(0, 0)], 1.0);
        assert_eq!(k.values()[(1, 1)], 1.0);
        assert_relative_eq!(k.values()[(0, 1)], (-1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn gram_rbf_wide_width_saturates() {
        let x = samples(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5]]);
        let k = gram_rbf(&x, 1e9).unwrap();
        for v in k.values().iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_rbf_rejects_bad_width() {
        let x = samples(&[&[0.0], &[1.0]]);
        assert!(gram_rbf(&x, 0.0).is_err());
        assert!(gram_rbf(&x, f64::NAN).is_err());
    }

    #[test]
    fn cross_gram_matches_gram_on_shared_points() {
        let train = samples(&[&[0.0, 0.0], &[1.0, 2.0]]);
        let test = samples(&[&[1.0, 2.0]]);
        let c = cross_gram_rbf(&train, &test, 0.9).unwrap();
        assert_eq!(c.values()[(1, 0)], 1.0);
        let single_train = samples(&[&[0.0]]);
        let single_test = samples(&[&[0.8 * 2f64.sqrt()]]);
        let c2 = cross_gram_rbf(&single_train, &single_test, 0.8).unwrap();
        assert_relative_eq!(c2.values()[(0, 0)], (-1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn cross_gram_empty_test_set() {
        let train = samples(&[&[0.0], &[1.0]]);
        let test = SampleMatrix {
            data: DMatrix::zeros(0, 1),
        };
        // Constructor rejects empty matrices, so build the view directly.
        let c = cross_gram_rbf(&train, &test, 1.0).unwrap();
        assert_eq!(c.n_train(), 2);
        assert_eq!(c.n_test(), 0);
    }

    #[test]
    fn cross_gram_dimension_mismatch() {
        let train = samples(&[&[0.0, 0.0]]);
        let test = samples(&[&[1.0]]);
        assert!(matches!(
            cross_gram_rbf(&train, &test, 1.0),
            Err(Error::Shape { .. })
        ));
    }

    fn identity_bank(extra: DMatrix<f64>) -> KernelBank {
        let k1 = KernelMatrix::new(DMatrix::identity(2, 2)).unwrap();
        let k2 = KernelMatrix::new(extra).unwrap();
        KernelBank::from_kernels(vec![k1, k2]).unwrap()
    }

    #[test]
    fn combine_weighted_examples() {
        let bank = identity_bank(DMatrix::from_element(2, 2, 1.0));
        let one_hot = combine_weighted(&bank, &[1.0, 0.0]).unwrap();
        assert_eq!(one_hot.values(), bank.get(0).values());

        let zero = combine_weighted(&bank, &[0.0, 0.0]).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let sum = combine_weighted(&bank, &[1.0, 1.0]).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(sum.values(), &expect);
    }

    #[test]
    fn combine_weighted_errors() {
        let bank = identity_bank(DMatrix::from_element(2, 2, 1.0));
        assert!(matches!(
            combine_weighted(&bank, &[0.5, -0.1]),
            Err(Error::InvalidWeight(_))
        ));
        assert!(matches!(
            combine_weighted(&bank, &[1.0]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn fuse_average_examples() {
        let single = KernelBank::from_kernels(vec![KernelMatrix::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]),
        )
        .unwrap()])
        .unwrap();
        let fused = fuse_average(&single).unwrap();
        assert_eq!(fused.values(), single.get(0).values());

        let bank = identity_bank(DMatrix::from_element(2, 2, 1.0));
        let avg = fuse_average(&bank).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(avg.values(), &expect);
    }

    #[test]
    fn fuse_product_examples() {
        let k = KernelMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0])).unwrap();
        let other = KernelMatrix::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let bank = KernelBank::from_kernels(vec![k.clone(), other]).unwrap();
        let fused = fuse_product(&bank).unwrap();
        assert_relative_eq!(fused.values()[(0, 1)], 0.5, epsilon = 1e-15);

        let same = KernelBank::from_kernels(vec![k.clone(), k.clone()]).unwrap();
        let idem = fuse_product(&same).unwrap();
        for (a, b) in idem.values().iter().zip(k.values().iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn fuse_product_rejects_negative() {
        let k = KernelMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 1.0])).unwrap();
        let bank = KernelBank::from_kernels(vec![k]).unwrap();
        assert!(matches!(fuse_product(&bank), Err(Error::NegativeEntry(..))));
    }

    #[test]
    fn psd_validation() {
        let id = KernelMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert!(validate_psd(&id, PSD_TOL).unwrap());

        // eigenvalues 3 and -1
        let indef =
            KernelMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert!(!validate_psd(&indef, PSD_TOL).unwrap());

        let x = samples(&[&[0.0, 0.0], &[1.0, 0.5], &[-0.4, 2.0]]);
        let k = gram_rbf(&x, 0.8).unwrap();
        assert!(validate_psd(&k, PSD_TOL).unwrap());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-6, 1.0]);
        assert!(matches!(KernelMatrix::new(m), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn kernel_from_distances_matches_gram() {
        let x = samples(&[&[0.0, 0.0], &[3.0, 4.0], &[1.0, 1.0]]);
        let sigma = 2.0;
        let n = x.n();
        let mut dist = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dist[(i, j)] = sq_dist(x.data(), i, x.data(), j).sqrt();
            }
        }
        let from_dist = kernel_from_distances(&dist, sigma).unwrap();
        let direct = gram_rbf(&x, sigma).unwrap();
        for (a, b) in from_dist.values().iter().zip(direct.values().iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }
}
