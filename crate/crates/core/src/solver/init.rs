use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::objective::{objective_value, PenaltyWeight};
use crate::random::NormalSampler;

use super::{palm_solve, prox_variant, FactorPair, InitStrategy, ModelSpec, SolverConfig, Variant};

/// Iteration budget of the plain-NMF warm start.
pub const WARM_START_MAX_ITER: usize = 200;
/// Relative-change tolerance of the plain-NMF warm start.
pub const WARM_START_EPSILON: f64 = 1e-3;

fn random_abs_normal(p: usize, n: usize, r: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let mut normals = NormalSampler::new(seed);
    // W is filled first, then H, both column-major
    let w = DenseMatrix::from_fn(p, r, |_, _| normals.next_normal().abs());
    let h = DenseMatrix::from_fn(r, n, |_, _| normals.next_normal().abs());
    (w, h)
}

/// Builds a feasible starting pair for `spec` on data `x`.
///
/// `W` is always projected onto the variant's constraint set so the solvers
/// start from a feasible point.
pub fn init_factors(
    x: &DenseMatrix,
    spec: &ModelSpec,
    config: &SolverConfig,
) -> Result<FactorPair> {
    let (p, n) = x.shape();
    spec.validate(p)?;
    config.validate()?;
    if let Some(pos) = x.as_slice().iter().position(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidEntry {
            row: pos % p,
            col: pos / p,
            value: x.as_slice()[pos],
        });
    }

    let (w, h) = random_abs_normal(p, n, spec.rank, config.seed);
    let (w, h) = match config.init {
        InitStrategy::RandomNormalAbs => (w, h),
        InitStrategy::NmfWarmStart => {
            let plain = ModelSpec::new(Variant::Nmf, spec.rank, 0);
            let warm_config = SolverConfig {
                epsilon: WARM_START_EPSILON,
                max_iter: WARM_START_MAX_ITER,
                accelerate: false,
                ..config.clone()
            };
            let start = FactorPair {
                w,
                h,
                objective: f64::NAN,
                iterations: 0,
            };
            let (pair, _) = palm_solve(x, &plain, 0.0, start, &warm_config)?;
            (pair.w, pair.h)
        }
    };
    let w = prox_variant(&w, spec);
    let objective = objective_value(x, &w, &h, PenaltyWeight::new(spec.initial_rho())?)?;
    Ok(FactorPair {
        w,
        h,
        objective,
        iterations: 0,
    })
}
