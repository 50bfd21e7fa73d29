//! Alternating proximal-gradient solvers for the structured-sparse model
//! family.
//!
//! * [`palm_solve`]: plain alternating projected-gradient steps (H, then W).
//! * [`mapalm_solve`]: the same steps taken from Nesterov-extrapolated points,
//!   accepted only when the objective does not increase.
//! * [`continuation_solve`]: repeated solves with a geometrically growing
//!   orthogonality penalty, for the orthogonal variants.
//!
//! [`solve`] picks the right driver for a [`ModelSpec`].

mod continuation;
mod init;
mod palm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::prox;

pub use continuation::{continuation_from, continuation_solve, continuation_solve_observed};
pub use init::{init_factors, WARM_START_EPSILON, WARM_START_MAX_ITER};
pub use palm::{
    fixed_rho_solve_observed, mapalm_solve, mapalm_solve_with_weights, palm_solve, IterateObserver,
    NesterovWeights,
};

/// The structured-sparse model variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Nmf,
    Onmf,
    NmfL20,
    NmfLc0,
    NmfL0,
    OnmfL20,
    OnmfLc0,
    OnmfL0,
    /// Row-sparse model solved once at a fixed penalty weight.
    OnmfL20Rho,
}

/// Feasible set for `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    NonNegative,
    /// At most `k` non-zero rows.
    RowSparse,
    /// At most `k` non-zeros per column.
    ColumnSparse,
    /// At most `k·r` non-zeros overall.
    EntrySparse,
}

impl Variant {
    pub const ALL: [Variant; 9] = [
        Variant::Nmf,
        Variant::Onmf,
        Variant::NmfL20,
        Variant::NmfLc0,
        Variant::NmfL0,
        Variant::OnmfL20,
        Variant::OnmfLc0,
        Variant::OnmfL0,
        Variant::OnmfL20Rho,
    ];

    pub fn constraint(self) -> Constraint {
        match self {
            Variant::Nmf | Variant::Onmf => Constraint::NonNegative,
            Variant::NmfL20 | Variant::OnmfL20 | Variant::OnmfL20Rho => Constraint::RowSparse,
            Variant::NmfLc0 | Variant::OnmfLc0 => Constraint::ColumnSparse,
            Variant::NmfL0 | Variant::OnmfL0 => Constraint::EntrySparse,
        }
    }

    /// Orthogonal variants solved by penalty continuation.
    pub fn uses_continuation(self) -> bool {
        matches!(
            self,
            Variant::Onmf | Variant::OnmfL20 | Variant::OnmfLc0 | Variant::OnmfL0
        )
    }

    /// Command-line spelling.
    pub fn name(self) -> &'static str {
        match self {
            Variant::Nmf => "nmf",
            Variant::Onmf => "onmf",
            Variant::NmfL20 => "nmf-l20",
            Variant::NmfLc0 => "nmf-lc0",
            Variant::NmfL0 => "nmf-l0",
            Variant::OnmfL20 => "onmf-l20",
            Variant::OnmfLc0 => "onmf-lc0",
            Variant::OnmfL0 => "onmf-l0",
            Variant::OnmfL20Rho => "onmf-l20-rho",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{s}`")))
    }
}

/// Which model to fit and its hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub rank: usize,
    /// Rows kept (ℓ2,0), non-zeros per column (ℓc,0), or per-factor share of
    /// the total budget `k·r` (ℓ0). Ignored by the unconstrained variants.
    pub k: usize,
    /// Initial (or fixed) orthogonality penalty weight.
    pub rho0: f64,
    pub gamma: f64,
    pub continuation_steps: usize,
}

impl ModelSpec {
    pub const DEFAULT_RHO: f64 = 0.1;
    pub const DEFAULT_GAMMA: f64 = 1.5;
    pub const DEFAULT_STEPS: usize = 10;

    pub fn new(variant: Variant, rank: usize, k: usize) -> Self {
        Self {
            variant,
            rank,
            k,
            rho0: Self::DEFAULT_RHO,
            gamma: Self::DEFAULT_GAMMA,
            continuation_steps: Self::DEFAULT_STEPS,
        }
    }

    pub fn with_rho(mut self, rho0: f64) -> Self {
        self.rho0 = rho0;
        self
    }

    pub fn with_continuation(mut self, gamma: f64, steps: usize) -> Self {
        self.gamma = gamma;
        self.continuation_steps = steps;
        self
    }

    /// Checks the spec against a data matrix with `p` features.
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if !(self.rho0.is_finite() && self.rho0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rho must be finite and non-negative, got {}",
                self.rho0
            )));
        }
        match self.variant.constraint() {
            Constraint::RowSparse | Constraint::ColumnSparse if self.k > p => {
                return Err(Error::InvalidArgument(format!(
                    "k = {} exceeds the number of features p = {p}",
                    self.k
                )));
            }
            _ => {}
        }
        if self.variant.uses_continuation() {
            if !(self.gamma > 1.0 && self.gamma.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "continuation needs gamma > 1, got {}",
                    self.gamma
                )));
            }
            if self.continuation_steps == 0 {
                return Err(Error::InvalidArgument(
                    "continuation needs at least one step".into(),
                ));
            }
        }
        Ok(())
    }

    /// Penalty weight used by the first solve.
    pub fn initial_rho(&self) -> f64 {
        match self.variant {
            Variant::Nmf | Variant::NmfL20 | Variant::NmfLc0 | Variant::NmfL0 => 0.0,
            _ => self.rho0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Entries `|N(0,1)|` from the seeded generator.
    RandomNormalAbs,
    /// A short plain-NMF run from a random start, then projected.
    NmfWarmStart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative-change stopping tolerance.
    pub epsilon: f64,
    pub max_iter: usize,
    /// maPALM when set, PALM otherwise.
    pub accelerate: bool,
    pub seed: u64,
    pub init: InitStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_iter: 2000,
            accelerate: true,
            seed: 0,
            init: InitStrategy::NmfWarmStart,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// A `(W, H)` iterate with its objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Termination {
    Tolerance,
    MaxIter,
}

/// One accepted iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub relative_change: f64,
    pub rho: f64,
    /// The extrapolated candidate was kept (always false for PALM).
    pub accepted_extrapolation: bool,
}

/// Summary of one inner solve (a single stage unless continuation ran).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub rho: f64,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub trace: Vec<TraceRow>,
    pub termination: Termination,
    /// Seconds.
    pub wall_time: f64,
    pub rho_history: Vec<f64>,
    pub stages: Vec<StageSummary>,
}

impl SolverReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Largest objective increase between consecutive accepted iterates of
    /// the same stage (including the step from each stage's start); ≤ 0 for
    /// a monotone run.
    pub fn max_objective_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        let mut offset = 0;
        for stage in &self.stages {
            let mut prev = stage.initial_objective;
            for row in &self.trace[offset..offset + stage.iterations] {
                worst = worst.max(row.objective - prev);
                prev = row.objective;
            }
            offset += stage.iterations;
        }
        worst
    }
}

/// Projection of `m` onto the variant's feasible set for `W`.
pub fn prox_variant(m: &DenseMatrix, spec: &ModelSpec) -> DenseMatrix {
    match spec.variant.constraint() {
        Constraint::NonNegative => prox::project_nonneg(m),
        Constraint::RowSparse => prox::prox_row_sparse_nonneg(m, spec.k),
        Constraint::ColumnSparse => prox::prox_col_sparse_nonneg(m, spec.k),
        Constraint::EntrySparse => prox::prox_entry_sparse_nonneg(m, spec.k * spec.rank),
    }
}

/// `true` when `w` lies in the variant's feasible set.
pub fn is_feasible(w: &DenseMatrix, spec: &ModelSpec) -> bool {
    if w.as_slice().iter().any(|v| *v < 0.0) {
        return false;
    }
    match spec.variant.constraint() {
        Constraint::NonNegative => true,
        Constraint::RowSparse => crate::linalg::l20_norm(w) <= spec.k,
        Constraint::ColumnSparse => {
            (0..w.cols()).all(|j| w.col(j).iter().filter(|v| **v != 0.0).count() <= spec.k)
        }
        Constraint::EntrySparse => crate::linalg::l0_norm(w) <= spec.k * spec.rank,
    }
}

/// Initializes and runs the driver appropriate for `spec.variant`.
pub fn solve(
    x: &DenseMatrix,
    spec: &ModelSpec,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    let start = init_factors(x, spec, config)?;
    solve_from(x, spec, start, config)
}

/// [`solve_from`] calling `on_iterate` with every accepted iterate; the
/// trace row carries the global iteration number and the stage's ρ.
pub fn solve_observed(
    x: &DenseMatrix,
    spec: &ModelSpec,
    start: FactorPair,
    config: &SolverConfig,
    on_iterate: &mut IterateObserver<'_>,
) -> Result<(FactorPair, SolverReport)> {
    if spec.variant.uses_continuation() {
        continuation::continuation_core(x, spec, start, config, |_, _, _| {}, on_iterate)
    } else {
        fixed_rho_solve_observed(x, spec, spec.initial_rho(), start, config, on_iterate)
    }
}

/// Like [`solve`] but from a caller-provided feasible start.
pub fn solve_from(
    x: &DenseMatrix,
    spec: &ModelSpec,
    start: FactorPair,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    solve_observed(x, spec, start, config, &mut |_, _, _| {})
}
