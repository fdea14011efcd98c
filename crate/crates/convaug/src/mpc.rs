//! Closed-loop receding-horizon simulation: at every loop step the condensed
//! input program is rebuilt for the measured state, a budgeted solver is run
//! from a zero initial guess, the first input block is applied, and the
//! dynamics advance under process noise.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{run_augmented, FeasibilityPolicy, PerturbationSource};
use crate::baselines::projected_gradient;
use crate::learned::LearnedPerturbation;
use crate::problems::{MpcProblem, Polytope, QuadraticProblem};
use crate::qp::solve_qp;
use crate::rng::{normal_vector, SeedSplitter};
use crate::scalar::{sc, Scalar, Vector};

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("solver '{solver}' failed at loop step {step}: {message}")]
    Solver {
        solver: String,
        step: usize,
        message: String,
    },
    #[error("applied input violates the bound by {violation} at loop step {step}")]
    InfeasibleInput { step: usize, violation: f64 },
    #[error(transparent)]
    Problem(#[from] crate::problems::ProblemError),
}

/// Closed-loop experiment settings. The process-noise level is a
/// configuration default, not a reported value.
#[derive(Debug, Clone)]
pub struct ClosedLoopConfig<T> {
    pub loop_steps: usize,
    /// Exact number of solver iterations per loop step.
    pub budget: usize,
    pub process_noise_std: T,
    pub init_state_std: T,
    pub seed: u64,
}

impl<T: Scalar> ClosedLoopConfig<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            loop_steps: 30,
            budget: 100,
            process_noise_std: sc(0.05),
            init_state_std: sc(0.5),
            seed,
        }
    }
}

/// A solver for the condensed input program, run under an iteration budget
/// from the zero initial guess.
pub trait CondensedQpSolver<T: Scalar>: Send + Sync {
    fn id(&self) -> &str;
    fn solve(
        &self,
        qp: &QuadraticProblem<T>,
        constraints: &Polytope<T>,
        budget: usize,
    ) -> Result<Vector<T>, String>;
}

/// Projected gradient descent with step `1/beta`, exactly `budget` iterations.
pub struct PgdSolver;

impl<T: Scalar> CondensedQpSolver<T> for PgdSolver {
    fn id(&self) -> &str {
        "pgd"
    }

    fn solve(
        &self,
        qp: &QuadraticProblem<T>,
        constraints: &Polytope<T>,
        budget: usize,
    ) -> Result<Vector<T>, String> {
        let eta = T::one() / qp.beta();
        let bounds = constraints.as_box();
        let mut u = Vector::<T>::zeros(qp.dim());
        for _ in 0..budget {
            let free = &u - qp.gradient(&u) * eta;
            u = match &bounds {
                Some(b) => b.clamp(&free),
                None => crate::baselines::project_polytope(
                    &free,
                    constraints,
                    crate::baselines::PROJECTION_MAX_ITERS,
                    sc(crate::baselines::PROJECTION_TOL),
                )
                .map_err(|e| e.to_string())?,
            };
        }
        Ok(u)
    }
}

/// Projected gradient descent augmented with a learned innovation, kept
/// feasible through the constraint correction.
pub struct AugmentedPgdSolver<T: Scalar> {
    pub perturbation: Arc<LearnedPerturbation<T>>,
}

impl<T: Scalar> CondensedQpSolver<T> for AugmentedPgdSolver<T> {
    fn id(&self) -> &str {
        "pgd+learned"
    }

    fn solve(
        &self,
        qp: &QuadraticProblem<T>,
        constraints: &Polytope<T>,
        budget: usize,
    ) -> Result<Vector<T>, String> {
        let smooth = qp.to_smooth();
        let spec = projected_gradient(qp, constraints, T::one() / qp.beta())
            .map_err(|e| e.to_string())?;
        let run = run_augmented(
            &smooth,
            &spec,
            &PerturbationSource::Stateful(self.perturbation.clone()),
            &Vector::zeros(qp.dim()),
            budget,
            Some(&FeasibilityPolicy::correcting(constraints.clone())),
        )
        .map_err(|e| e.to_string())?;
        Ok(run.outputs.last().expect("run has final iterate").clone())
    }
}

/// Direct active-set solve; the iteration budget is irrelevant.
pub struct ExactQpSolver;

impl<T: Scalar> CondensedQpSolver<T> for ExactQpSolver {
    fn id(&self) -> &str {
        "exact"
    }

    fn solve(
        &self,
        qp: &QuadraticProblem<T>,
        constraints: &Polytope<T>,
        _budget: usize,
    ) -> Result<Vector<T>, String> {
        solve_qp(qp.hessian(), qp.linear_term(), constraints)
            .map(|s| s.x)
            .map_err(|e| e.to_string())
    }
}

/// One realized closed loop.
#[derive(Debug, Clone)]
pub struct ClosedLoopRun<T> {
    pub seed: u64,
    pub states: Vec<Vector<T>>,
    pub inputs: Vec<Vector<T>>,
    pub stage_costs: Vec<T>,
    pub cumulative_cost: T,
}

/// Simulates the receding-horizon loop: per step, condense at the measured
/// state, run the solver for exactly the budget from zero, apply the first
/// input block, advance the noisy dynamics, and accrue the realized stage
/// cost `x^T Q x + u^T R u`.
pub fn closed_loop_sim<T: Scalar>(
    mpc: &MpcProblem<T>,
    solver: &dyn CondensedQpSolver<T>,
    cfg: &ClosedLoopConfig<T>,
) -> Result<ClosedLoopRun<T>, MpcError> {
    let splitter = SeedSplitter::new(cfg.seed);
    let n = mpc.state_dim();
    let m = mpc.input_dim();
    let mut x = {
        let mut r = splitter.stream("init-state", 0);
        normal_vector::<T, _>(&mut r, n) * cfg.init_state_std
    };
    let bound_tol = sc::<T>(1e-10);
    let mut states = Vec::with_capacity(cfg.loop_steps + 1);
    let mut inputs = Vec::with_capacity(cfg.loop_steps);
    let mut stage_costs = Vec::with_capacity(cfg.loop_steps);
    states.push(x.clone());
    for step in 0..cfg.loop_steps {
        let (qp, constraints) = mpc.condensed(&x)?;
        let u_stack = solver
            .solve(&qp, &constraints, cfg.budget)
            .map_err(|message| MpcError::Solver {
                solver: solver.id().to_string(),
                step,
                message,
            })?;
        let u = u_stack.rows(0, m).into_owned();
        let worst = u.iter().fold(T::zero(), |a, &v| a.max(v.abs())) - mpc.input_bound;
        if worst > bound_tol {
            return Err(MpcError::InfeasibleInput {
                step,
                violation: worst.to_f64().unwrap_or(f64::NAN),
            });
        }
        let stage = x.dot(&(&mpc.q * &x)) + u.dot(&(&mpc.r * &u));
        let w = {
            let mut r = splitter.stream("process-noise", step as u64);
            normal_vector::<T, _>(&mut r, n) * cfg.process_noise_std
        };
        x = mpc.step(&x, &u, Some(&w));
        states.push(x.clone());
        inputs.push(u);
        stage_costs.push(stage);
    }
    let cumulative_cost = stage_costs.iter().copied().sum();
    Ok(ClosedLoopRun {
        seed: cfg.seed,
        states,
        inputs,
        stage_costs,
        cumulative_cost,
    })
}

/// Runs the loop across seeds concurrently; results are returned in seed
/// order, so aggregation is deterministic.
pub fn monte_carlo<T: Scalar>(
    mpc: &MpcProblem<T>,
    solver: &dyn CondensedQpSolver<T>,
    base: &ClosedLoopConfig<T>,
    seeds: &[u64],
) -> Result<Vec<ClosedLoopRun<T>>, MpcError> {
    let results: Vec<Result<ClosedLoopRun<T>, MpcError>> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ClosedLoopConfig {
                seed,
                ..base.clone()
            };
            closed_loop_sim(mpc, solver, &cfg)
        })
        .collect();
    results.into_iter().collect()
}

/// Mean and 90th percentile (nearest rank) of the cumulative costs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedLoopSummary {
    pub solver: String,
    pub loop_steps: usize,
    pub budget: usize,
    pub process_noise_std: f64,
    pub seeds: Vec<u64>,
    pub mean_cost: f64,
    pub p90_cost: f64,
    pub per_seed_cost: Vec<f64>,
}

pub fn summarize<T: Scalar>(
    solver_id: &str,
    cfg: &ClosedLoopConfig<T>,
    runs: &[ClosedLoopRun<T>],
) -> ClosedLoopSummary {
    let costs: Vec<f64> = runs
        .iter()
        .map(|r| r.cumulative_cost.to_f64().expect("scalar convertible"))
        .collect();
    let mean = costs.iter().sum::<f64>() / costs.len().max(1) as f64;
    let mut sorted = costs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
    let p90 = if sorted.is_empty() {
        f64::NAN
    } else {
        let rank = ((0.9 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        sorted[rank - 1]
    };
    ClosedLoopSummary {
        solver: solver_id.to_string(),
        loop_steps: cfg.loop_steps,
        budget: cfg.budget,
        process_noise_std: cfg.process_noise_std.to_f64().expect("scalar convertible"),
        seeds: runs.iter().map(|r| r.seed).collect(),
        mean_cost: mean,
        p90_cost: p90,
        per_seed_cost: costs,
    }
}
