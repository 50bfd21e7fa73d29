//! Datasets: synthetic generators, matrix file I/O and expression
//! preprocessing.

mod io;
mod preprocess;
mod synthetic;

pub use io::{load_labels, load_matrix, save_labels, save_matrix, MatrixFormat};
pub use preprocess::{preprocess_scrna, DEFAULT_DROPOUT_FRACTION};
pub use synthetic::{
    synthetic_outlier, synthetic_three_block, SYNTHETIC_FEATURES, SYNTHETIC_SAMPLES,
};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::LabelVector;

/// A non-negative `p × n` data matrix with optional labels and names.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub x: DenseMatrix,
    pub truth: Option<LabelVector>,
    pub feature_names: Option<Vec<String>>,
    pub sample_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Wraps `x`, checking non-negativity and name/label lengths.
    pub fn new(
        x: DenseMatrix,
        truth: Option<LabelVector>,
        feature_names: Option<Vec<String>>,
        sample_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let (p, n) = x.shape();
        if let Some(pos) = x.as_slice().iter().position(|v| *v < 0.0) {
            return Err(Error::InvalidEntry {
                row: pos % p,
                col: pos / p,
                value: x.as_slice()[pos],
            });
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::shape("labels", n, t.len()));
            }
        }
        if let Some(f) = &feature_names {
            if f.len() != p {
                return Err(Error::shape("feature names", p, f.len()));
            }
        }
        if let Some(s) = &sample_names {
            if s.len() != n {
                return Err(Error::shape("sample names", n, s.len()));
            }
        }
        Ok(Self {
            x,
            truth,
            feature_names,
            sample_names,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }
}
