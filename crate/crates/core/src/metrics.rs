//! Clustering agreement metrics (NMI, purity, entropy), cluster assignment
//! from `H`, and an orthogonality score for `H`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// One cluster id per sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    /// Maps arbitrary string labels to ids in order of first appearance.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> (Self, Vec<String>) {
        let mut ids: Vec<String> = Vec::new();
        let labels = names
            .iter()
            .map(|s| {
                let s = s.as_ref();
                match ids.iter().position(|x| x == s) {
                    Some(i) => i,
                    None => {
                        ids.push(s.to_string());
                        ids.len() - 1
                    }
                }
            })
            .collect();
        (Self(labels), ids)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct ids.
    pub fn n_classes(&self) -> usize {
        let mut seen: Vec<usize> = self.0.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

impl From<Vec<usize>> for LabelVector {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Overlap counts between predicted clusters (rows) and true classes
/// (columns). Ids that never occur get no row or column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
    total: usize,
}

impl ContingencyTable {
    pub fn new(pred: &LabelVector, truth: &LabelVector) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::InvalidArgument(format!(
                "label length mismatch: predicted {}, truth {}",
                pred.len(),
                truth.len()
            )));
        }
        let dense = |labels: &[usize]| {
            let mut map = BTreeMap::new();
            for &l in labels {
                let next = map.len();
                map.entry(l).or_insert(next);
            }
            map
        };
        let rows = dense(pred.as_slice());
        let cols = dense(truth.as_slice());
        let mut counts = vec![vec![0usize; cols.len()]; rows.len()];
        for (p, t) in pred.as_slice().iter().zip(truth.as_slice()) {
            counts[rows[p]][cols[t]] += 1;
        }
        let row_sums = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums = (0..cols.len())
            .map(|h| counts.iter().map(|r| r[h]).sum())
            .collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: pred.len(),
        })
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn total(&self) -> usize {
        self.total
    }

    fn same_partition(&self) -> bool {
        // identical set partitions: every row and every column has exactly one non-zero cell
        let nz = |cells: &mut dyn Iterator<Item = usize>| cells.filter(|c| *c > 0).count() == 1;
        self.counts.iter().all(|r| nz(&mut r.iter().copied()))
            && (0..self.col_sums.len()).all(|h| nz(&mut self.counts.iter().map(|r| r[h])))
    }
}

/// Sample `j` goes to `argmax_i H_ij`, ties to the lowest row.
pub fn assign_clusters(h: &DenseMatrix) -> LabelVector {
    let labels = (0..h.cols())
        .map(|j| {
            let col = h.col(j);
            let mut best = 0;
            for (i, v) in col.iter().enumerate() {
                if *v > col[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    LabelVector(labels)
}

/// Normalized mutual information with natural logarithms.
///
/// When either partition has zero entropy the ratio is undefined; the
/// result is 1 if the two partitions coincide and 0 otherwise.
pub fn nmi(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let n = table.total() as f64;
    if table.total() == 0 {
        return Err(Error::InvalidArgument(
            "nmi needs at least one sample".into(),
        ));
    }
    let mut mutual = 0.0;
    for (l, row) in table.counts().iter().enumerate() {
        for (h, &t) in row.iter().enumerate() {
            if t > 0 {
                let t = t as f64;
                mutual +=
                    t * (n * t / (table.row_sums()[l] as f64 * table.col_sums()[h] as f64)).ln();
            }
        }
    }
    let marginal = |sums: &[usize]| -> f64 {
        sums.iter()
            .filter(|s| **s > 0)
            .map(|&s| s as f64 * (s as f64 / n).ln())
            .sum()
    };
    let a = marginal(table.row_sums());
    let b = marginal(table.col_sums());
    if a == 0.0 || b == 0.0 {
        return Ok(if table.same_partition() { 1.0 } else { 0.0 });
    }
    Ok((mutual / (a * b).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of samples falling in the majority true class of their cluster.
pub fn purity(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.total() == 0 {
        return Err(Error::InvalidArgument(
            "purity needs at least one sample".into(),
        ));
    }
    let hits: usize = table
        .counts()
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.total() as f64)
}

/// Class entropy within clusters, normalized by `log₂ d` and reported as a
/// non-negative number (0 for pure clusters).
pub fn entropy_metric(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let d = table.col_sums().len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "entropy needs at least two true classes, got {d}"
        )));
    }
    let mut acc = 0.0;
    for (l, row) in table.counts().iter().enumerate() {
        let tl = table.row_sums()[l] as f64;
        for &t in row.iter().filter(|t| **t > 0) {
            let t = t as f64;
            acc += t * (t / tl).log2();
        }
    }
    let value = -acc / (table.total() as f64 * (d as f64).log2());
    // -0.0 for pure clusterings
    Ok(if value == 0.0 { 0.0 } else { value })
}

/// `‖H̄H̄ᵀ − I‖_F` where `H̄` is `H` with zero rows dropped and the remaining
/// rows scaled to unit length. Zero iff the non-zero rows are orthogonal.
pub fn orthogonality_score(h: &DenseMatrix) -> f64 {
    let norms = h.row_norms();
    let keep: Vec<usize> = (0..h.rows()).filter(|&i| norms[i] > 0.0).collect();
    let normalized = DenseMatrix::from_fn(keep.len(), h.cols(), |i, j| {
        h.get(keep[i], j) / norms[keep[i]]
    });
    let gram = normalized
        .matmul_t(&normalized)
        .expect("H̄H̄ᵀ is conformable");
    let mut acc = 0.0;
    for j in 0..gram.cols() {
        for i in 0..gram.rows() {
            let target = if i == j { 1.0 } else { 0.0 };
            acc += (gram.get(i, j) - target).powi(2);
        }
    }
    acc.sqrt()
}
