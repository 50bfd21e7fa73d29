//! Bicluster extraction and outlier detection from fitted factors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Features with a high z-score in one column of `W`, paired with the
/// samples whose `H` column peaks at the same factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bicluster {
    pub factor_index: usize,
    pub feature_indices: Vec<usize>,
    pub sample_indices: Vec<usize>,
    #[serde(with = "lenient_float")]
    pub threshold: f64,
}

/// Serde helpers that write non-finite floats as the strings `"inf"`,
/// `"-inf"` and `"NaN"` instead of JSON `null`, so they read back unchanged.
pub mod lenient_float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    fn decode<E: de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(v) => Ok(v),
            Repr::Text(s) => s
                .parse()
                .map_err(|_| E::custom(format!("not a number: `{s}`"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        decode(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(decode).transpose()
        }
    }
}

/// z-scores with the population standard deviation; `None` for a constant
/// vector.
fn z_scores(v: &[f64]) -> Option<Vec<f64>> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return None;
    }
    Some(v.iter().map(|x| (x - mean) / sd).collect())
}

pub fn extract_biclusters(
    w: &DenseMatrix,
    h: &DenseMatrix,
    threshold: f64,
) -> Result<Vec<Bicluster>> {
    if w.cols() != h.rows() {
        return Err(Error::shape(
            "factor rank (W columns vs H rows)",
            w.cols(),
            h.rows(),
        ));
    }
    if threshold.is_nan() {
        return Err(Error::InvalidArgument("threshold must not be NaN".into()));
    }
    let r = w.cols();
    let col_max: Vec<f64> = (0..h.cols())
        .map(|j| h.col(j).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut out = Vec::with_capacity(r);
    for i in 0..r {
        let feature_indices = match z_scores(w.col(i)) {
            Some(z) => z
                .iter()
                .enumerate()
                .filter(|(_, z)| **z > threshold)
                .map(|(f, _)| f)
                .collect(),
            None => {
                log::warn!("factor {i}: W column is constant, no features selected");
                Vec::new()
            }
        };
        let sample_indices = (0..h.cols())
            .filter(|&j| h.get(i, j) >= col_max[j])
            .collect();
        out.push(Bicluster {
            factor_index: i,
            feature_indices,
            sample_indices,
            threshold,
        });
    }
    if out.iter().all(|b| b.feature_indices.is_empty()) && r > 0 {
        log::warn!("no features exceed z-score threshold {threshold}");
    }
    Ok(out)
}

/// The `m` samples with the smallest column maximum in `H`, smallest first;
/// ties go to the lower column index.
pub fn detect_outliers(h: &DenseMatrix, m: usize) -> Result<Vec<usize>> {
    if m > h.cols() {
        return Err(Error::InvalidArgument(format!(
            "asked for {m} outliers among {} samples",
            h.cols()
        )));
    }
    let maxima: Vec<f64> = (0..h.cols())
        .map(|j| h.col(j).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..h.cols()).collect();
    order.sort_by(|&a, &b| maxima[a].total_cmp(&maxima[b]));
    order.truncate(m);
    Ok(order)
}
