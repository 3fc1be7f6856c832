//! Precomputed kernel-matrix files.
//!
//! Plain text. First line `n J`, then J blocks of n lines of n
//! space-separated decimal values, row-major, both symmetric halves
//! present. An optional trailing section `cross m` followed by J blocks
//! of n lines of m values carries train-vs-test blocks.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::kernel::{self, CrossKernel, KernelBank, KernelMatrix};

/// Asymmetry up to this tolerance is repaired by averaging with the
/// transpose; anything beyond is an error.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct KernelFileContents {
    pub bank: KernelBank,
    pub crosses: Option<Vec<CrossKernel>>,
    /// Widths used for distance-to-kernel conversion, when applicable.
    pub sigmas: Option<Vec<f64>>,
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate() }
    }

    /// Next non-empty line with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.lines.by_ref() {
            let line = raw.trim();
            if !line.is_empty() {
                return Some((idx + 1, line));
            }
        }
        None
    }
}

fn parse_row(line: &str, line_no: usize, expected: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("not a number: '{tok}'"),
            })
        })
        .collect::<Result<_>>()?;
    if values.len() != expected {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("expected {expected} values, found {}", values.len()),
        });
    }
    Ok(values)
}

fn read_block(reader: &mut LineReader, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut flat = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let (line_no, line) = reader.next_line().ok_or_else(|| Error::Format(
            "unexpected end of file inside a kernel block".into(),
        ))?;
        flat.extend(parse_row(line, line_no, cols)?);
    }
    Ok(DMatrix::from_row_slice(rows, cols, &flat))
}

/// Loads a kernel bank (and optional cross blocks) from the plain-text
/// format. Mild asymmetry (within 1e-8) is symmetrized with a warning.
pub fn load_kernel_bank(path: &Path) -> Result<KernelFileContents> {
    let text = fs::read_to_string(path)?;
    let raw = parse_raw_bank(&text)?;
    let mut kernels = Vec::with_capacity(raw.matrices.len());
    for (j, m) in raw.matrices.into_iter().enumerate() {
        kernels.push(symmetrize(m, j)?);
    }
    Ok(KernelFileContents {
        bank: KernelBank::from_kernels(kernels)?,
        crosses: raw.crosses,
        sigmas: None,
    })
}

/// Width selection for distance-matrix ingestion.
#[derive(Debug, Clone)]
pub enum DistanceWidths {
    /// Per-matrix width = factor times the mean off-diagonal distance.
    Factor(f64),
    /// Explicit width per matrix.
    Explicit(Vec<f64>),
}

/// Loads a distance-matrix file (same layout as a kernel bank) and
/// converts each block to an RBF kernel `exp(-D^2 / (2 sigma^2))`.
pub fn load_distance_bank(path: &Path, widths: &DistanceWidths) -> Result<KernelFileContents> {
    let text = fs::read_to_string(path)?;
    let raw = parse_raw_bank(&text)?;
    let j_total = raw.matrices.len();
    let sigmas: Vec<f64> = match widths {
        DistanceWidths::Factor(f) => {
            if !(f > &0.0) {
                return Err(Error::Domain(format!(
                    "width factor must be positive, got {f}"
                )));
            }
            raw.matrices
                .iter()
                .map(|d| {
                    let n = d.nrows();
                    let mut sum = 0.0;
                    for i in 0..n {
                        for k in (i + 1)..n {
                            sum += d[(i, k)];
                        }
                    }
                    let mean = sum / (n * (n - 1) / 2).max(1) as f64;
                    if mean <= 0.0 {
                        Err(Error::DegenerateData(
                            "distance matrix has zero mean off-diagonal".into(),
                        ))
                    } else {
                        Ok(f * mean)
                    }
                })
                .collect::<Result<_>>()?
        }
        DistanceWidths::Explicit(s) => {
            if s.len() != j_total {
                return Err(Error::Shape {
                    context: "distance widths",
                    expected: format!("{j_total}"),
                    got: format!("{}", s.len()),
                });
            }
            s.clone()
        }
    };
    let mut kernels = Vec::with_capacity(j_total);
    for (j, (d, &sigma)) in raw.matrices.into_iter().zip(&sigmas).enumerate() {
        let sym = symmetrize(d, j)?;
        kernels.push(kernel::kernel_from_distances(sym.values(), sigma)?);
    }
    let crosses = match raw.crosses {
        None => None,
        Some(blocks) => Some(
            blocks
                .into_iter()
                .zip(&sigmas)
                .map(|(c, &sigma)| {
                    let denom = 2.0 * sigma * sigma;
                    CrossKernel::new(c.values().map(|d| (-(d * d) / denom).exp()))
                })
                .collect(),
        ),
    };
    Ok(KernelFileContents {
        bank: KernelBank::from_kernels(kernels)?,
        crosses,
        sigmas: Some(sigmas),
    })
}

struct RawBank {
    matrices: Vec<DMatrix<f64>>,
    crosses: Option<Vec<CrossKernel>>,
}

fn parse_raw_bank(text: &str) -> Result<RawBank> {
    let mut reader = LineReader::new(text);
    let (line_no, header) = reader
        .next_line()
        .ok_or_else(|| Error::Format("empty kernel file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("header must be 'n J', found '{header}'"),
        });
    }
    let n: usize = parts[0].parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("bad sample count '{}'", parts[0]),
    })?;
    let j: usize = parts[1].parse().map_err(|_| Error::Parse {
        line: line_no,
        msg: format!("bad kernel count '{}'", parts[1]),
    })?;
    if n == 0 || j == 0 {
        return Err(Error::Format(format!("degenerate header: n={n} J={j}")));
    }
    let mut matrices = Vec::with_capacity(j);
    for _ in 0..j {
        matrices.push(read_block(&mut reader, n, n)?);
    }
    let crosses = match reader.next_line() {
        None => None,
        Some((line_no, line)) => {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 || parts[0] != "cross" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 'cross m' or end of file, found '{line}'"),
                });
            }
            let m: usize = parts[1].parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad test count '{}'", parts[1]),
            })?;
            let mut blocks = Vec::with_capacity(j);
            for _ in 0..j {
                blocks.push(CrossKernel::new(read_block(&mut reader, n, m)?));
            }
            Some(blocks)
        }
    };
    if let Some((line_no, line)) = reader.next_line() {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("trailing content: '{line}'"),
        });
    }
    Ok(RawBank { matrices, crosses })
}

fn symmetrize(m: DMatrix<f64>, kernel_idx: usize) -> Result<KernelMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::Format(format!(
            "kernel {kernel_idx} is not square: {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let max_dev = kernel::max_asymmetry(&m);
    if max_dev > LOAD_SYMMETRY_TOL {
        return Err(Error::Asymmetric { max_dev, tol: LOAD_SYMMETRY_TOL });
    }
    if max_dev > 0.0 {
        log::warn!(
            "kernel {kernel_idx}: asymmetry {max_dev:e} repaired by averaging with transpose"
        );
        let sym = (&m + m.transpose()) * 0.5;
        return KernelMatrix::new(sym);
    }
    KernelMatrix::new(m)
}

/// Writes a bank (and optional cross blocks) in the plain-text format at
/// full double precision.
pub fn save_kernel_bank(
    path: &Path,
    bank: &KernelBank,
    crosses: Option<&[CrossKernel]>,
) -> Result<()> {
    let n = bank.n();
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", n, bank.len()));
    for k in bank.kernels() {
        push_block(&mut out, k.values());
    }
    if let Some(blocks) = crosses {
        if blocks.len() != bank.len() {
            return Err(Error::Shape {
                context: "cross blocks",
                expected: format!("{}", bank.len()),
                got: format!("{}", blocks.len()),
            });
        }
        let m = blocks[0].n_test();
        out.push_str(&format!("cross {m}\n"));
        for c in blocks {
            push_block(&mut out, c.values());
        }
    }
    write_atomic(path, &out)
}

fn push_block(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&fmt_f64(m[(i, j)]));
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{gram_rbf, SampleMatrix};

    fn sample_bank() -> (KernelBank, Vec<CrossKernel>) {
        let train = SampleMatrix::from_rows(&[
            vec![0.0, 0.1],
            vec![1.0, -0.4],
            vec![0.3, 0.9],
        ])
        .unwrap();
        let test =
            SampleMatrix::from_rows(&[vec![0.2, 0.2], vec![0.8, 0.8]]).unwrap();
        let sigmas = [0.6, 1.3];
        let bank = KernelBank::from_kernels(
            sigmas.iter().map(|&s| gram_rbf(&train, s).unwrap()).collect(),
        )
        .unwrap();
        let crosses = sigmas
            .iter()
            .map(|&s| crate::kernel::cross_gram_rbf(&train, &test, s).unwrap())
            .collect();
        (bank, crosses)
    }

    #[test]
    fn round_trip_exact() {
        let (bank, crosses) = sample_bank();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.txt");
        save_kernel_bank(&path, &bank, Some(&crosses)).unwrap();
        let loaded = load_kernel_bank(&path).unwrap();
        assert_eq!(loaded.bank.len(), 2);
        for (a, b) in loaded.bank.kernels().iter().zip(bank.kernels()) {
            assert_eq!(a.values(), b.values());
        }
        for (a, b) in loaded.crosses.unwrap().iter().zip(&crosses) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn asymmetry_beyond_tolerance_rejected() {
        let text = "2 1\n1.0 0.5\n0.6 1.0\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_kernel_bank(&path),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn mild_asymmetry_symmetrized() {
        let text = "2 1\n1.0 0.5000000001\n0.5 1.0\n";
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mild.txt");
        std::fs::write(&path, text).unwrap();
        let loaded = load_kernel_bank(&path).unwrap();
        let k = loaded.bank.get(0);
        assert_eq!(k.values()[(0, 1)], k.values()[(1, 0)]);
    }

    #[test]
    fn header_and_shape_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");

        std::fs::write(&path, "2\n1 0\n0 1\n").unwrap();
        assert!(matches!(load_kernel_bank(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, "2 1\n1 0\n0 1 5\n").unwrap();
        assert!(matches!(load_kernel_bank(&path), Err(Error::Parse { .. })));

        std::fs::write(&path, "2 2\n1 0\n0 1\n").unwrap();
        assert!(matches!(load_kernel_bank(&path), Err(Error::Format(_))));
    }

    #[test]
    fn distance_mode_matches_direct_gram() {
        let train = SampleMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![3.0, 4.0],
            vec![-1.0, 1.0],
        ])
        .unwrap();
        let n = train.n();
        let mut text = format!("{n} 1\n");
        let mut mean = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = train.row(i);
                let b = train.row(j);
                let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                if j > 0 {
                    text.push(' ');
                }
                text.push_str(&fmt_f64(d));
                if j > i {
                    mean += d;
                }
            }
            text.push('\n');
        }
        mean /= (n * (n - 1) / 2) as f64;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dist.txt");
        std::fs::write(&path, &text).unwrap();

        let loaded = load_distance_bank(&path, &DistanceWidths::Factor(0.5)).unwrap();
        let sigma = loaded.sigmas.as_ref().unwrap()[0];
        assert!((sigma - 0.5 * mean).abs() < 1e-12);
        let direct = gram_rbf(&train, sigma).unwrap();
        for (a, b) in loaded.bank.get(0).values().iter().zip(direct.values().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
