//! Closed-form projections onto the non-negative sparse constraint sets.
//!
//! All top-k selections are stable: among equal scores the lower index wins,
//! so repeated runs pick identical supports.

use crate::linalg::DenseMatrix;

/// Row (or entry) indices kept by a top-k selection, in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }
}

/// Indices of the `k` largest scores; ties go to the lower index.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    if k >= scores.len() {
        return order;
    }
    // stable sort keeps ascending index order within equal scores
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Entrywise `max(v, 0)`. Always writes `+0.0` for clamped entries.
pub fn project_nonneg(m: &DenseMatrix) -> DenseMatrix {
    m.map(clamp)
}

#[inline]
fn clamp(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Rows of `m` with the `k` largest Euclidean norms.
pub fn support_norm(m: &DenseMatrix, k: usize) -> SupportSet {
    SupportSet {
        indices: top_k(&m.row_norms(), k),
    }
}

/// `RS_k`: keep the `k` rows of largest norm verbatim and zero the rest.
pub fn row_sparse_project(m: &DenseMatrix, k: usize) -> DenseMatrix {
    let support = support_norm(m, k);
    if support.len() == m.rows() {
        return m.clone();
    }
    let mut keep = vec![false; m.rows()];
    for &i in support.indices() {
        keep[i] = true;
    }
    let mut out = m.clone();
    for j in 0..m.cols() {
        for (v, &kept) in out.col_mut(j).iter_mut().zip(&keep) {
            if !kept {
                *v = 0.0;
            }
        }
    }
    out
}

/// Projection onto `{W ≥ 0, ‖W‖₂,₀ ≤ k}`, computed as `RS_k(P₊(M))`.
pub fn prox_row_sparse_nonneg(m: &DenseMatrix, k: usize) -> DenseMatrix {
    row_sparse_project(&project_nonneg(m), k)
}

/// Projection onto `{W ≥ 0, ‖w_j‖₀ ≤ k for every column j}`: clamp, then keep
/// the `k` largest entries of each column.
pub fn prox_col_sparse_nonneg(m: &DenseMatrix, k: usize) -> DenseMatrix {
    let mut out = project_nonneg(m);
    if k >= m.rows() {
        return out;
    }
    for j in 0..out.cols() {
        let col = out.col_mut(j);
        let keep = top_k(col, k);
        let mut next = keep.iter().copied().peekable();
        for (i, v) in col.iter_mut().enumerate() {
            if next.peek() == Some(&i) {
                next.next();
            } else {
                *v = 0.0;
            }
        }
    }
    out
}

/// Projection onto `{W ≥ 0, ‖W‖₀ ≤ budget}`: clamp, then keep the `budget`
/// largest entries of the whole matrix (ties by column-major position).
pub fn prox_entry_sparse_nonneg(m: &DenseMatrix, budget: usize) -> DenseMatrix {
    let mut out = project_nonneg(m);
    let data = out.as_mut_slice();
    if budget >= data.len() {
        return out;
    }
    let keep = top_k(data, budget);
    let mut mask = vec![false; data.len()];
    for i in keep {
        mask[i] = true;
    }
    for (v, kept) in data.iter_mut().zip(mask) {
        if !kept {
            *v = 0.0;
        }
    }
    out
}
