use std::ops::Range;

use crate::linalg::DenseMatrix;
use crate::metrics::LabelVector;
use crate::random::NormalSampler;

use super::LabeledDataset;

pub const SYNTHETIC_FEATURES: usize = 500;
pub const SYNTHETIC_SAMPLES: usize = 60;

const BACKGROUND_SCALE: f64 = 0.9;

/// Draws `|z|` for every entry in column-major order, with `z ~ N(0,1)` inside
/// the listed (rows, cols) blocks and `z ~ 0.9·N(0,1)` elsewhere.
fn block_matrix(seed: u64, blocks: &[(Range<usize>, Range<usize>)]) -> DenseMatrix {
    let mut normals = NormalSampler::new(seed);
    DenseMatrix::from_fn(SYNTHETIC_FEATURES, SYNTHETIC_SAMPLES, |i, j| {
        let z = normals.next_normal();
        let in_block = blocks
            .iter()
            .any(|(rows, cols)| rows.contains(&i) && cols.contains(&j));
        if in_block {
            z.abs()
        } else {
            (BACKGROUND_SCALE * z).abs()
        }
    })
}

/// 500 × 60 matrix with three co-expressed blocks:
/// rows 0–59 × cols 0–19, rows 30–89 × cols 20–39, rows 60–119 × cols 40–59.
/// Labels are 20 samples each of classes 0, 1, 2.
pub fn synthetic_three_block(seed: u64) -> LabeledDataset {
    let x = block_matrix(seed, &[(0..60, 0..20), (30..90, 20..40), (60..120, 40..60)]);
    let truth = LabelVector::new((0..SYNTHETIC_SAMPLES).map(|j| j / 20).collect());
    LabeledDataset {
        x,
        truth: Some(truth),
        feature_names: None,
        sample_names: None,
    }
}

/// Like [`synthetic_three_block`] without the third block: columns 40–59 are
/// pure background and carry the outlier label 2.
pub fn synthetic_outlier(seed: u64) -> LabeledDataset {
    let x = block_matrix(seed, &[(0..60, 0..20), (30..90, 20..40)]);
    let truth = LabelVector::new((0..SYNTHETIC_SAMPLES).map(|j| j / 20).collect());
    LabeledDataset {
        x,
        truth: Some(truth),
        feature_names: None,
        sample_names: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_block_shape_and_labels() {
        let ds = synthetic_three_block(7);
        assert_eq!(ds.x.shape(), (500, 60));
        let mut want = vec![0; 20];
        want.extend([1; 20]);
        want.extend([2; 20]);
        assert_eq!(ds.truth.unwrap().as_slice(), want.as_slice());
        assert!(ds.x.min_value().unwrap() >= 0.0);
    }

    #[test]
    fn generators_are_pure_functions_of_seed() {
        assert_eq!(synthetic_three_block(3), synthetic_three_block(3));
        assert_ne!(synthetic_three_block(3).x, synthetic_three_block(4).x);
        assert_eq!(synthetic_outlier(5), synthetic_outlier(5));
    }

    #[test]
    fn outlier_dataset_layout() {
        let ds = synthetic_outlier(1);
        assert_eq!(ds.x.shape(), (500, 60));
        let truth = ds.truth.clone().unwrap();
        assert_eq!(truth.as_slice().iter().filter(|l| **l == 2).count(), 20);
        assert!(truth.as_slice()[40..].iter().all(|l| *l == 2));
        assert!(ds.x.min_value().unwrap() >= 0.0);
    }

    #[test]
    fn outlier_columns_are_background_only() {
        // Same seed and draw order: block entries are the unscaled |z|, so
        // background entries are exactly 0.9 times the three-block value
        // wherever the three-block generator placed a block.
        let a = synthetic_three_block(9).x;
        let b = synthetic_outlier(9).x;
        for j in 40..60 {
            for i in 60..120 {
                assert_eq!(b.get(i, j), (0.9 * (a.get(i, j))).abs());
            }
            for i in 0..60 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
        for j in 0..40 {
            for i in 0..500 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn block_entries_are_larger_on_average() {
        let ds = synthetic_three_block(11);
        let mean = |rows: Range<usize>, cols: Range<usize>| {
            let mut s = 0.0;
            let mut c = 0.0;
            for j in cols {
                for i in rows.clone() {
                    s += ds.x.get(i, j);
                    c += 1.0;
                }
            }
            s / c
        };
        let inside = mean(0..60, 0..20);
        let outside = mean(200..500, 0..60);
        // E|z| = 0.798 vs 0.9·0.798 = 0.718
        assert!((inside - 0.798).abs() < 0.05, "{inside}");
        assert!((outside - 0.718).abs() < 0.02, "{outside}");
    }
}
