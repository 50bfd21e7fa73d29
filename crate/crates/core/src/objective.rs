//! The penalized factorization objective
//!
//! ```text
//! F(W, H) = ½‖X − WH‖²_F + (ρ/2) Σ_j ((1ᵀh_j)² − ‖h_j‖²)
//! ```
//!
//! together with its block gradients and the Lipschitz constants of those
//! gradients, which the solvers use as inverse step sizes.

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_estimate, DenseMatrix};

/// Lipschitz constants below this are replaced by it so steps stay finite.
pub const MIN_LIPSCHITZ: f64 = 1e-12;

/// Orthogonality penalty weight `ρ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PenaltyWeight(f64);

impl PenaltyWeight {
    pub const ZERO: PenaltyWeight = PenaltyWeight(0.0);

    pub fn new(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho >= 0.0 {
            Ok(Self(rho))
        } else {
            Err(Error::InvalidArgument(format!(
                "penalty weight must be finite and non-negative, got {rho}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_shapes(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<()> {
    let (p, n) = x.shape();
    if w.rows() != p || h.cols() != n || w.cols() != h.rows() {
        return Err(Error::shape(
            "factorization",
            format!("X {p}x{n} = W {p}xr * H rx{n}"),
            format!("W {}x{}, H {}x{}", w.rows(), w.cols(), h.rows(), h.cols()),
        ));
    }
    Ok(())
}

/// `Σ_j ((1ᵀh_j)² − ‖h_j‖²)`, i.e. twice the sum of cross products within
/// each column.
pub fn orthogonality_penalty(h: &DenseMatrix) -> f64 {
    (0..h.cols())
        .map(|j| {
            let col = h.col(j);
            let s: f64 = col.iter().sum();
            let sq: f64 = col.iter().map(|v| v * v).sum();
            s * s - sq
        })
        .sum()
}

/// Evaluates `F(W, H)`.
pub fn objective_value(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    rho: PenaltyWeight,
) -> Result<f64> {
    check_shapes(x, w, h)?;
    let wh = w.matmul(h)?;
    // per-column partial sums keep the accumulation error small
    let fit: f64 = (0..x.cols())
        .map(|j| {
            x.col(j)
                .iter()
                .zip(wh.col(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum();
    let penalty = if rho.value() == 0.0 {
        0.0
    } else {
        orthogonality_penalty(h)
    };
    Ok(0.5 * fit + 0.5 * rho.value() * penalty)
}

/// `∇_H F = WᵀWH − WᵀX + ρ 1_{r×r} H − ρH`.
pub fn grad_h(
    x: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
    rho: PenaltyWeight,
) -> Result<DenseMatrix> {
    check_shapes(x, w, h)?;
    let wtw = w.t_matmul(w)?;
    let wtx = w.t_matmul(x)?;
    let mut g = wtw.matmul(h)?.sub(&wtx)?;
    let rho = rho.value();
    if rho != 0.0 {
        // 1_{r×r}H broadcasts each column sum of H down its column
        let sums = h.col_sums();
        for (j, s) in sums.iter().enumerate() {
            let h_col = h.col(j);
            for (g_ij, h_ij) in g.col_mut(j).iter_mut().zip(h_col) {
                *g_ij += rho * (s - h_ij);
            }
        }
    }
    Ok(g)
}

/// `∇_W F = WHHᵀ − XHᵀ`. The penalty does not involve `W`.
pub fn grad_w(x: &DenseMatrix, w: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
    check_shapes(x, w, h)?;
    let hht = h.matmul_t(h)?;
    w.matmul(&hht)?.sub(&x.matmul_t(h)?)
}

/// `‖WᵀW + ρ1_{r×r} − ρI_r‖₂`, without the degenerate-step guard.
pub fn lipschitz_h(w: &DenseMatrix, rho: PenaltyWeight) -> f64 {
    let rho = rho.value();
    let mut m = w.t_matmul(w).expect("WᵀW is always conformable");
    let r = m.rows();
    if rho != 0.0 {
        for j in 0..r {
            for i in 0..r {
                if i != j {
                    m.set(i, j, m.get(i, j) + rho);
                }
            }
        }
    }
    spectral_norm_estimate(&m)
}

/// `‖HHᵀ‖₂ = σ_max(H)²`, without the degenerate-step guard.
pub fn lipschitz_w(h: &DenseMatrix) -> f64 {
    let hht = h.matmul_t(h).expect("HHᵀ is always conformable");
    spectral_norm_estimate(&hht)
}

/// Replaces a vanishing Lipschitz constant by [`MIN_LIPSCHITZ`].
#[inline]
pub fn guarded_step_constant(l: f64) -> f64 {
    if l < MIN_LIPSCHITZ {
        MIN_LIPSCHITZ
    } else {
        l
    }
}
