use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{ControllerRun, SolverOutcome};
use crate::path::TrackingMetrics;

/// Per-controller block of a run report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerBlock {
    pub controller: String,
    pub total_cost: f64,
    pub metrics: TrackingMetrics,
    pub converged: bool,
    pub wall_clock_s: f64,
    /// Only for iLQR.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOutcome>,
    pub trajectory_file: String,
}

impl ControllerBlock {
    pub fn new(run: &ControllerRun, trajectory_file: impl Into<String>) -> Self {
        Self {
            controller: run.kind.name().to_string(),
            total_cost: run.total_cost,
            metrics: run.metrics,
            converged: run.converged(),
            wall_clock_s: run.wall_clock_s,
            solver: run.solver.clone(),
            trajectory_file: trajectory_file.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub initial_state: Vec<f64>,
    /// Path indices whose spacing exceeds `v_max · dt`.
    pub spacing_warnings: Vec<usize>,
    pub controllers: Vec<ControllerBlock>,
    /// The full config, TOML text; feeding it back reproduces the run.
    pub config: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricDelta {
    pub total_cost: f64,
    pub pos_rmse: f64,
    pub heading_rmse: f64,
    pub max_pos_err: f64,
    pub terminal_pos_err: f64,
}

impl MetricDelta {
    /// `candidate - baseline`.
    pub fn between(baseline: &ControllerRun, candidate: &ControllerRun) -> Self {
        let (b, c) = (&baseline.metrics, &candidate.metrics);
        Self {
            total_cost: candidate.total_cost - baseline.total_cost,
            pos_rmse: c.pos_rmse - b.pos_rmse,
            heading_rmse: c.heading_rmse - b.heading_rmse,
            max_pos_err: c.max_pos_err - b.max_pos_err,
            terminal_pos_err: c.terminal_pos_err - b.terminal_pos_err,
        }
    }
}

/// Baseline vs candidate on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub n_points: usize,
    pub initial_offset: Vec<f64>,
    pub baseline_cost: f64,
    pub candidate_cost: f64,
    pub baseline_metrics: TrackingMetrics,
    pub candidate_metrics: TrackingMetrics,
    pub delta: MetricDelta,
    pub candidate_converged: bool,
}

impl CompareRow {
    pub fn new(
        label: impl Into<String>,
        n_points: usize,
        offset: &[f64],
        baseline: &ControllerRun,
        candidate: &ControllerRun,
    ) -> Self {
        Self {
            label: label.into(),
            n_points,
            initial_offset: offset.to_vec(),
            baseline_cost: baseline.total_cost,
            candidate_cost: candidate.total_cost,
            baseline_metrics: baseline.metrics,
            candidate_metrics: candidate.metrics,
            delta: MetricDelta::between(baseline, candidate),
            candidate_converged: candidate.converged(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub seed: u64,
    pub baseline: String,
    pub candidate: String,
    /// The configured scenario.
    pub main: CompareRow,
    /// Main scenario plus each fixed initial offset.
    pub perturbed: Vec<CompareRow>,
    /// One row per swept `n_points`, at fixed duration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<CompareRow>,
    /// Cost trace and iteration log of the candidate on the main scenario, if it is iLQR.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_solver: Option<SolverOutcome>,
    pub config: String,
}

pub fn config_echo(cfg: &ExperimentConfig, seed: u64) -> String {
    let mut echoed = cfg.clone();
    echoed.perturbation.seed = seed;
    echoed.to_toml_string()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
