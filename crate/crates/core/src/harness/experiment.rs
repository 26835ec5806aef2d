use std::time::Instant;

use nalgebra::SMatrix;
use serde::Serialize;

use super::config::{ControllerKind, ExperimentConfig};
use super::HarnessError;
use crate::cost::{TrackingCost, TrackingTarget};
use crate::dynamics::{DiffDrive, StateVector, Trajectory, CONTROL_DIM, STATE_DIM};
use crate::ilqr::{self, IterationRecord, SolverOptions};
use crate::lqr;
use crate::path::{tracking_metrics, ReferencePath, TrackingMetrics};

/// Everything needed to run a controller, resolved from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: ReferencePath<f64>,
    pub target: TrackingTarget<f64, STATE_DIM, CONTROL_DIM>,
    pub model: DiffDrive<f64>,
    pub cost: TrackingCost<f64, STATE_DIM, CONTROL_DIM>,
    pub solver: SolverOptions<f64>,
    pub lqr_substeps: usize,
    pub x0: StateVector<f64>,
    /// Indices whose incoming segment is longer than `v_max · dt`.
    pub spacing_warnings: Vec<usize>,
}

impl Scenario {
    pub fn from_config(cfg: &ExperimentConfig, seed: u64) -> Result<Self, HarnessError> {
        let path = cfg.reference_path()?;
        Self::with_path(cfg, path, seed)
    }

    pub fn with_path(cfg: &ExperimentConfig, path: ReferencePath<f64>, seed: u64) -> Result<Self, HarnessError> {
        let target = path.target()?;
        let model = DiffDrive::new(path.dt)?;
        let cost = cfg.weights.cost()?;
        let x0 = target.states[0] + cfg.perturbation.sample(seed);
        Ok(Self {
            spacing_warnings: path.spacing_violations(cfg.path.v_max),
            path,
            target,
            model,
            cost,
            solver: cfg.solver.clone(),
            lqr_substeps: cfg.controller.lqr_substeps,
            x0,
        })
    }

    /// Same scenario started from `x0 + offset`.
    pub fn offset_start(&self, offset: &StateVector<f64>) -> Self {
        Self { x0: self.x0 + offset, ..self.clone() }
    }

    pub fn run(&self, kind: ControllerKind) -> Result<ControllerRun, HarnessError> {
        let started = Instant::now();
        let (trajectory, solver) = match kind {
            ControllerKind::Lqr => (self.run_lqr()?, None),
            ControllerKind::Ilqr => {
                let sol =
                    ilqr::solve(&self.model, &self.cost, &self.target, &self.x0, &self.target.controls, &self.solver)?;
                let outcome = SolverOutcome {
                    converged: sol.converged,
                    iterations: sol.iterations,
                    cost_history: sol.cost_history.clone(),
                    log: sol.log.clone(),
                };
                (Trajectory::new(sol.states, sol.controls)?, Some(outcome))
            }
        };
        let wall_clock_s = started.elapsed().as_secs_f64();
        let total_cost = self.cost.total_cost(&trajectory.states, &trajectory.controls, &self.target)?;
        let metrics = tracking_metrics(&trajectory.states, &self.path)?;
        Ok(ControllerRun { kind, trajectory, total_cost, metrics, solver, wall_clock_s })
    }

    pub fn lqr_gains(&self) -> Result<Vec<SMatrix<f64, CONTROL_DIM, STATE_DIM>>, HarnessError> {
        let ops = lqr::linearize_along(&self.model, &self.target.states, &self.target.controls)?;
        Ok(lqr::tv_lqr_gains(&ops, &self.cost.weights)?)
    }

    fn run_lqr(&self) -> Result<Trajectory<f64, STATE_DIM, CONTROL_DIM>, HarnessError> {
        let gains = self.lqr_gains()?;
        let m = self.lqr_substeps;
        let fine = self.model.with_dt(self.path.dt / m as f64)?;
        Ok(lqr::track_substepped(&fine, m, &self.cost, &self.x0, &self.target, &gains)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOutcome {
    pub converged: bool,
    pub iterations: usize,
    pub cost_history: Vec<f64>,
    pub log: Vec<IterationRecord<f64>>,
}

/// Result of running one controller on a scenario.
#[derive(Debug, Clone)]
pub struct ControllerRun {
    pub kind: ControllerKind,
    pub trajectory: Trajectory<f64, STATE_DIM, CONTROL_DIM>,
    pub total_cost: f64,
    pub metrics: TrackingMetrics,
    /// Present for iLQR runs.
    pub solver: Option<SolverOutcome>,
    pub wall_clock_s: f64,
}

impl ControllerRun {
    /// Non-converged iLQR runs are still valid data; LQR always "converges".
    pub fn converged(&self) -> bool {
        self.solver.as_ref().is_none_or(|s| s.converged)
    }
}

/// The fixed initial-state offsets used by comparisons: ±0.1 m in x and y, ±0.1 rad in heading.
pub fn standard_perturbations() -> Vec<(String, StateVector<f64>)> {
    let axes = [("x", 0, "m"), ("y", 1, "m"), ("theta", 2, "rad")];
    let mut out = Vec::new();
    for (name, i, _) in axes {
        for sign in [1.0, -1.0] {
            let mut v = StateVector::zeros();
            v[i] = 0.1 * sign;
            out.push((format!("{}{}0.1", name, if sign > 0.0 { "+" } else { "-" }), v));
        }
    }
    out
}
