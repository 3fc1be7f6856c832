//! Dataset ingestion, synthetic generation, and model persistence.

mod csv;
mod kernel_file;
mod model_file;
mod synth;

pub use csv::{load_features_csv, CsvOptions};
pub use kernel_file::{
    load_distance_bank, load_kernel_bank, save_kernel_bank, DistanceWidths, KernelFileContents,
};
pub use model_file::{
    load_joint_model, load_model, save_joint_model, save_model, MODEL_FORMAT_VERSION,
};
pub use synth::{make_noisy_bank, random_spd, synth_gaussian_task, SyntheticSpec, SyntheticView};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::SampleMatrix;

/// Target samples plus optional anomalies from one source.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub targets: SampleMatrix,
    pub anomalies: Option<SampleMatrix>,
    /// Attack-instrument species per anomaly row, when known.
    pub species: Option<Vec<String>>,
    pub source: String,
}

impl Dataset {
    pub fn new(
        targets: SampleMatrix,
        anomalies: Option<SampleMatrix>,
        source: impl Into<String>,
    ) -> Result<Self> {
        if let Some(a) = &anomalies {
            if a.dim() != targets.dim() {
                return Err(Error::Shape {
                    context: "dataset",
                    expected: format!("{} features", targets.dim()),
                    got: format!("{} anomaly features", a.dim()),
                });
            }
        }
        Ok(Self {
            targets,
            anomalies,
            species: None,
            source: source.into(),
        })
    }

    pub fn n_targets(&self) -> usize {
        self.targets.n()
    }

    pub fn n_anomalies(&self) -> usize {
        self.anomalies.as_ref().map_or(0, |a| a.n())
    }

    pub fn dim(&self) -> usize {
        self.targets.dim()
    }
}

/// Writes a file atomically: temporary sibling plus rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = std::path::PathBuf::from(tmp);
    fs::write(&tmp_path, contents)?;
    fs::rename(&tmp_path, path)?;
    Ok(())
}

/// Full-precision float formatting: 17 significant digits round-trip
/// every finite double exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_round_trips_doubles() {
        for &x in &[
            0.0,
            1.0,
            -1.0,
            std::f64::consts::PI,
            1e-300,
            -3.337e42,
            0.1 + 0.2,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        assert!(!dir.path().join("out.txt.tmp").exists());
    }
}
