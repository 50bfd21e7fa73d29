use std::time::Instant;

use crate::error::Result;
use crate::linalg::DenseMatrix;

use super::palm::{fixed_rho_solve_observed, IterateObserver};
use super::{
    init_factors, FactorPair, ModelSpec, SolverConfig, SolverReport, Termination, TraceRow,
};

/// Penalty continuation: initialize, then run [`continuation_from`].
pub fn continuation_solve(
    x: &DenseMatrix,
    spec: &ModelSpec,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    let start = init_factors(x, spec, config)?;
    continuation_from(x, spec, start, config)
}

/// Solves `spec.continuation_steps` fixed-ρ problems, each warm-started from
/// the previous solution, multiplying ρ by `spec.gamma` after every stage.
pub fn continuation_from(
    x: &DenseMatrix,
    spec: &ModelSpec,
    start: FactorPair,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    continuation_solve_observed(x, spec, start, config, |_, _, _| {})
}

/// [`continuation_from`] with a callback invoked after each stage with the
/// stage index (0-based), the ρ it used, and the stage's solution.
pub fn continuation_solve_observed(
    x: &DenseMatrix,
    spec: &ModelSpec,
    start: FactorPair,
    config: &SolverConfig,
    observer: impl FnMut(usize, f64, &FactorPair),
) -> Result<(FactorPair, SolverReport)> {
    continuation_core(x, spec, start, config, observer, &mut |_, _, _| {})
}

pub(super) fn continuation_core(
    x: &DenseMatrix,
    spec: &ModelSpec,
    start: FactorPair,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, f64, &FactorPair),
    on_iterate: &mut IterateObserver<'_>,
) -> Result<(FactorPair, SolverReport)> {
    spec.validate(x.rows())?;
    let clock = Instant::now();
    let mut rho = spec.rho0;
    let mut current = start;
    let mut report = SolverReport {
        trace: Vec::new(),
        termination: Termination::MaxIter,
        wall_time: 0.0,
        rho_history: Vec::with_capacity(spec.continuation_steps),
        stages: Vec::with_capacity(spec.continuation_steps),
    };
    for stage in 0..spec.continuation_steps {
        let offset = report.trace.len();
        let (pair, inner) =
            fixed_rho_solve_observed(x, spec, rho, current, config, &mut |row, w, h| {
                let global = TraceRow {
                    iteration: row.iteration + offset,
                    ..*row
                };
                on_iterate(&global, w, h);
            })?;
        report.trace.extend(inner.trace.into_iter().map(|mut row| {
            row.iteration += offset;
            row
        }));
        report.stages.extend(inner.stages);
        report.termination = inner.termination;
        report.rho_history.push(rho);
        observer(stage, rho, &pair);
        current = pair;
        rho *= spec.gamma;
    }
    report.wall_time = clock.elapsed().as_secs_f64();
    Ok((current, report))
}
