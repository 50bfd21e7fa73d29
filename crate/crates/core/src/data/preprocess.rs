use crate::error::{Error, Result};

use super::LabeledDataset;

pub const DEFAULT_DROPOUT_FRACTION: f64 = 0.7;

/// Drops features that are exactly zero in more than
/// `dropout_fraction × n` samples, then maps the rest through `log2(1 + x)`.
pub fn preprocess_scrna(ds: &LabeledDataset, dropout_fraction: f64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&dropout_fraction) {
        return Err(Error::InvalidArgument(format!(
            "dropout fraction must lie in [0, 1], got {dropout_fraction}"
        )));
    }
    let (p, n) = ds.x.shape();
    let limit = dropout_fraction * n as f64;
    let mut zeros = vec![0usize; p];
    for j in 0..n {
        for (z, v) in zeros.iter_mut().zip(ds.x.col(j)) {
            if *v == 0.0 {
                *z += 1;
            }
        }
    }
    let keep: Vec<usize> = (0..p).filter(|&i| (zeros[i] as f64) <= limit).collect();
    if keep.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    let x = ds.x.select_rows(&keep).map(|v| (1.0 + v).log2());
    let feature_names = ds
        .feature_names
        .as_ref()
        .map(|names| keep.iter().map(|&i| names[i].clone()).collect());
    LabeledDataset::new(x, ds.truth.clone(), feature_names, ds.sample_names.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn dataset(x: DenseMatrix) -> LabeledDataset {
        let p = x.rows();
        LabeledDataset::new(
            x,
            None,
            Some((0..p).map(|i| format!("g{i}")).collect()),
            None,
        )
        .unwrap()
    }

    #[test]
    fn dropout_rule_is_strict() {
        // 100 cells: gene 0 always expressed, gene 1 zero in 71, gene 2 zero in exactly 70
        let x = DenseMatrix::from_fn(3, 100, |i, j| match i {
            0 => 3.0,
            1 => {
                if j < 71 {
                    0.0
                } else {
                    1.0
                }
            }
            _ => {
                if j < 70 {
                    0.0
                } else {
                    7.0
                }
            }
        });
        let out = preprocess_scrna(&dataset(x), 0.7).unwrap();
        assert_eq!(out.feature_names.unwrap(), vec!["g0", "g2"]);
        assert_eq!(out.x.get(0, 0), 2.0);
        assert_eq!(out.x.get(1, 99), 3.0);
        assert_eq!(out.x.get(1, 0), 0.0);
    }

    #[test]
    fn all_zero_input_fails() {
        let ds = dataset(DenseMatrix::zeros(4, 10));
        assert!(matches!(
            preprocess_scrna(&ds, 0.7),
            Err(Error::EmptyAfterFilter)
        ));
    }

    #[test]
    fn output_is_nonnegative_and_rule_abiding() {
        let x = DenseMatrix::from_fn(30, 20, |i, j| {
            if (i * j) % (i % 5 + 2) == 0 {
                0.0
            } else {
                (i + j) as f64
            }
        });
        let out = preprocess_scrna(&dataset(x), 0.5).unwrap();
        assert!(out.x.min_value().unwrap() >= 0.0);
        for i in 0..out.x.rows() {
            let z = out.x.row(i).iter().filter(|v| **v == 0.0).count();
            assert!(z as f64 <= 0.5 * 20.0);
        }
    }

    #[test]
    fn bad_fraction_rejected() {
        assert!(preprocess_scrna(&dataset(DenseMatrix::identity(2)), 1.5).is_err());
    }
}
