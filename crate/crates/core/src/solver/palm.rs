use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::objective::{
    check_shapes, grad_h, grad_w, guarded_step_constant, lipschitz_h, lipschitz_w, objective_value,
    PenaltyWeight,
};
use crate::prox::project_nonneg;

use super::{
    is_feasible, prox_variant, FactorPair, ModelSpec, SolverConfig, SolverReport, StageSummary,
    Termination, TraceRow,
};

const DENOMINATOR_GUARD: f64 = 1e-30;

/// Extrapolation weights `ω_t = (τ_t − 1)/τ_{t+1}` with
/// `τ_{t+1} = (1 + √(1 + 4τ_t²))/2` and `τ_0 = 1`.
#[derive(Clone, Debug)]
pub struct NesterovWeights {
    tau: f64,
}

impl Default for NesterovWeights {
    fn default() -> Self {
        Self { tau: 1.0 }
    }
}

impl Iterator for NesterovWeights {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let next_tau = (1.0 + (1.0 + 4.0 * self.tau * self.tau).sqrt()) / 2.0;
        let omega = (self.tau - 1.0) / next_tau;
        self.tau = next_tau;
        Some(omega)
    }
}

/// Shared state for one fixed-ρ solve.
struct Problem<'a> {
    x: &'a DenseMatrix,
    spec: &'a ModelSpec,
    rho: PenaltyWeight,
}

impl Problem<'_> {
    fn objective(&self, w: &DenseMatrix, h: &DenseMatrix) -> Result<f64> {
        objective_value(self.x, w, h, self.rho)
    }

    /// `P₊(H̃ − ∇_H F(W, H̃)/d_H)` with `d_H` evaluated at `w`.
    fn h_step(&self, w: &DenseMatrix, h_point: &DenseMatrix, d_h: f64) -> Result<DenseMatrix> {
        let g = grad_h(self.x, w, h_point, self.rho)?;
        Ok(project_nonneg(&h_point.add_scaled(-1.0 / d_h, &g)?))
    }

    /// `prox(W̃ − ∇_W F(W̃, H)/d_W)` with `d_W = ‖HHᵀ‖₂`.
    fn w_step(&self, w_point: &DenseMatrix, h: &DenseMatrix) -> Result<DenseMatrix> {
        let d_w = guarded_step_constant(lipschitz_w(h));
        let g = grad_w(self.x, w_point, h)?;
        Ok(prox_variant(
            &w_point.add_scaled(-1.0 / d_w, &g)?,
            self.spec,
        ))
    }

    fn palm_step(
        &self,
        w: &DenseMatrix,
        h: &DenseMatrix,
        d_h: f64,
    ) -> Result<(DenseMatrix, DenseMatrix)> {
        let h_next = self.h_step(w, h, d_h)?;
        let w_next = self.w_step(w, &h_next)?;
        Ok((w_next, h_next))
    }
}

fn relative_change(
    w_prev: &DenseMatrix,
    h_prev: &DenseMatrix,
    w: &DenseMatrix,
    h: &DenseMatrix,
) -> f64 {
    let num =
        w.distance_sq(w_prev).expect("same shape") + h.distance_sq(h_prev).expect("same shape");
    let den = w_prev.frobenius_sq() + h_prev.frobenius_sq();
    num.sqrt() / (den.sqrt() + DENOMINATOR_GUARD)
}

/// `a + ω (a − b)`; returns `a` untouched when `ω = 0`.
fn extrapolate(a: &DenseMatrix, b: &DenseMatrix, omega: f64) -> Result<DenseMatrix> {
    if omega == 0.0 {
        return Ok(a.clone());
    }
    a.add_scaled(omega, &a.sub(b)?)
}

fn check_start(x: &DenseMatrix, spec: &ModelSpec, start: &FactorPair) -> Result<()> {
    check_shapes(x, &start.w, &start.h)?;
    if start.w.cols() != spec.rank {
        return Err(Error::shape("start factors", spec.rank, start.w.cols()));
    }
    if !is_feasible(&start.w, spec) {
        return Err(Error::InvalidArgument(
            "start W is outside the model's feasible set".into(),
        ));
    }
    if start.h.as_slice().iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument(
            "start H has negative entries".into(),
        ));
    }
    Ok(())
}

/// Runs alternating projected-gradient steps (H first, then W with the new H)
/// at a fixed penalty weight `rho`, stopping on relative change below
/// `config.epsilon` or after `config.max_iter` iterations.
pub fn palm_solve(
    x: &DenseMatrix,
    spec: &ModelSpec,
    rho: f64,
    start: FactorPair,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    run(
        x,
        spec,
        rho,
        start,
        config,
        None::<std::iter::Empty<f64>>,
        &mut |_, _, _| {},
    )
}

/// Iterate callback: the trace row of an accepted iterate and its `(W, H)`.
pub type IterateObserver<'a> = dyn FnMut(&TraceRow, &DenseMatrix, &DenseMatrix) + 'a;

/// [`palm_solve`] or [`mapalm_solve`] (by `config.accelerate`) calling
/// `on_iterate` after every accepted iterate.
pub fn fixed_rho_solve_observed(
    x: &DenseMatrix,
    spec: &ModelSpec,
    rho: f64,
    start: FactorPair,
    config: &SolverConfig,
    on_iterate: &mut IterateObserver<'_>,
) -> Result<(FactorPair, SolverReport)> {
    if config.accelerate {
        run(
            x,
            spec,
            rho,
            start,
            config,
            Some(NesterovWeights::default()),
            on_iterate,
        )
    } else {
        run(
            x,
            spec,
            rho,
            start,
            config,
            None::<std::iter::Empty<f64>>,
            on_iterate,
        )
    }
}

/// Monotone accelerated PALM with the Nesterov weight schedule.
pub fn mapalm_solve(
    x: &DenseMatrix,
    spec: &ModelSpec,
    rho: f64,
    start: FactorPair,
    config: &SolverConfig,
) -> Result<(FactorPair, SolverReport)> {
    run(
        x,
        spec,
        rho,
        start,
        config,
        Some(NesterovWeights::default()),
        &mut |_, _, _| {},
    )
}

/// Monotone accelerated PALM driven by an arbitrary weight sequence `ω_t`.
/// An exhausted sequence means `ω = 0` from then on.
pub fn mapalm_solve_with_weights(
    x: &DenseMatrix,
    spec: &ModelSpec,
    rho: f64,
    start: FactorPair,
    config: &SolverConfig,
    weights: impl Iterator<Item = f64>,
) -> Result<(FactorPair, SolverReport)> {
    run(
        x,
        spec,
        rho,
        start,
        config,
        Some(weights),
        &mut |_, _, _| {},
    )
}

fn run<I: Iterator<Item = f64>>(
    x: &DenseMatrix,
    spec: &ModelSpec,
    rho: f64,
    start: FactorPair,
    config: &SolverConfig,
    mut weights: Option<I>,
    on_iterate: &mut IterateObserver<'_>,
) -> Result<(FactorPair, SolverReport)> {
    config.validate()?;
    check_start(x, spec, &start)?;
    let clock = Instant::now();
    let problem = Problem {
        x,
        spec,
        rho: PenaltyWeight::new(rho)?,
    };

    let mut w = start.w;
    let mut h = start.h;
    let mut w_prev = w.clone();
    let mut h_prev = h.clone();
    let initial_objective = problem.objective(&w, &h)?;
    if !initial_objective.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut f = initial_objective;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIter;

    for t in 1..=config.max_iter {
        let d_h = guarded_step_constant(lipschitz_h(&w, problem.rho));

        let mut accepted_extrapolation = false;
        let step = match weights.as_mut() {
            Some(ws) => {
                let omega = ws.next().unwrap_or(0.0);
                let h_tilde = extrapolate(&h, &h_prev, omega)?;
                let h_cand = problem.h_step(&w, &h_tilde, d_h)?;
                let w_tilde = extrapolate(&w, &w_prev, omega)?;
                let w_cand = problem.w_step(&w_tilde, &h_cand)?;
                let f_cand = problem.objective(&w_cand, &h_cand)?;
                if f_cand <= f {
                    accepted_extrapolation = true;
                    (w_cand, h_cand, f_cand)
                } else {
                    let (w_next, h_next) = problem.palm_step(&w, &h, d_h)?;
                    let f_next = problem.objective(&w_next, &h_next)?;
                    (w_next, h_next, f_next)
                }
            }
            None => {
                let (w_next, h_next) = problem.palm_step(&w, &h, d_h)?;
                let f_next = problem.objective(&w_next, &h_next)?;
                (w_next, h_next, f_next)
            }
        };
        let (w_next, h_next, f_next) = step;
        if !f_next.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: t });
        }
        debug_assert!(is_feasible(&w_next, spec));

        let change = relative_change(&w, &h, &w_next, &h_next);
        w_prev = std::mem::replace(&mut w, w_next);
        h_prev = std::mem::replace(&mut h, h_next);
        f = f_next;
        let row = TraceRow {
            iteration: t,
            objective: f,
            relative_change: change,
            rho,
            accepted_extrapolation,
        };
        on_iterate(&row, &w, &h);
        trace.push(row);
        if change < config.epsilon {
            termination = Termination::Tolerance;
            break;
        }
    }

    let iterations = trace.len();
    let report = SolverReport {
        trace,
        termination,
        wall_time: clock.elapsed().as_secs_f64(),
        rho_history: vec![rho],
        stages: vec![StageSummary {
            rho,
            initial_objective,
            final_objective: f,
            iterations,
            termination,
        }],
    };
    let pair = FactorPair {
        w,
        h,
        objective: f,
        iterations: start.iterations + iterations,
    };
    Ok((pair, report))
}
