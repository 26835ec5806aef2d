//! Trajectory tracking for a differential-drive robot with iterative LQR and a
//! time-varying LQR baseline.
//!
//! The numerical core is generic over the scalar type ([`Scalar`]: `f32` or `f64`)
//! and over state/control dimensions; the aliases below fix the common choices.
//!
//! ```
//! use ilqr_track::{generate_bell, ilqr, BellPathParams, DiffDrive, TrackingCost, CostWeights};
//!
//! let params = BellPathParams::<f64> { n_points: 40, ..Default::default() };
//! let path = generate_bell(&params).unwrap();
//! let target = path.target().unwrap();
//! let model = DiffDrive::new(params.dt).unwrap();
//! let cost = TrackingCost::diff_drive(CostWeights::diff_drive_default());
//! let sol = ilqr::solve(&model, &cost, &target, &target.states[0], &target.controls, &Default::default()).unwrap();
//! assert!(sol.converged);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod ilqr;
pub mod lqr;
pub mod path;
pub mod scalar;

pub use cost::{ControlPenalty, CostDerivatives, CostWeights, TrackingCost, TrackingTarget};
pub use dynamics::{
    fd_jacobians, jacobian_u, jacobian_x, rollout, step, ControlInput, DiffDrive, Dynamics, LinearModel, RobotState,
    Trajectory, CONTROL_DIM, STATE_DIM,
};
pub use error::{Error, Result};
pub use ilqr::{backward_pass, forward_pass, solve, GainSchedule, QExpansion, Solution, SolverOptions, ValueExpansion};
pub use lqr::{linearize_along, track, tv_lqr_gains, OperatingPoint};
pub use path::{generate_bell, tracking_metrics, wrap_angle, BellPathParams, ReferencePath, TrackingMetrics};
pub use scalar::Scalar;

pub type RobotState64 = RobotState<f64>;
pub type RobotState32 = RobotState<f32>;
pub type ControlInput64 = ControlInput<f64>;
pub type ControlInput32 = ControlInput<f32>;
pub type DiffDrive64 = DiffDrive<f64>;
pub type DiffDrive32 = DiffDrive<f32>;
pub type DiffDriveCost64 = TrackingCost<f64, STATE_DIM, CONTROL_DIM>;
pub type DiffDriveCost32 = TrackingCost<f32, STATE_DIM, CONTROL_DIM>;
pub type DiffDriveWeights64 = CostWeights<f64, STATE_DIM, CONTROL_DIM>;
pub type DiffDriveTarget64 = TrackingTarget<f64, STATE_DIM, CONTROL_DIM>;
pub type DiffDriveSolution64 = Solution<f64, STATE_DIM, CONTROL_DIM>;
pub type DiffDriveSolution32 = Solution<f32, STATE_DIM, CONTROL_DIM>;
pub type ReferencePath64 = ReferencePath<f64>;
pub type ReferencePath32 = ReferencePath<f32>;
pub type BellPathParams64 = BellPathParams<f64>;
pub type SolverOptions64 = SolverOptions<f64>;
pub type SolverOptions32 = SolverOptions<f32>;
