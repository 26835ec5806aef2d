//! Time-varying LQR baseline: linearize along the nominal trajectory, run a
//! finite-horizon discrete Riccati recursion on those Jacobians, and track with
//! `u = u_ff - K (x ⊖ x_ref)`.

use nalgebra::{Cholesky, SMatrix, SVector};

use crate::cost::{CostWeights, TrackingCost, TrackingTarget};
use crate::dynamics::{Dynamics, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Jacobians of the model at one point of the nominal trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint<T: Scalar, const NX: usize, const NU: usize> {
    pub index: usize,
    pub x_op: SVector<T, NX>,
    pub u_op: SVector<T, NU>,
    pub a: SMatrix<T, NX, NX>,
    pub b: SMatrix<T, NX, NU>,
}

/// Gains and the cost-to-go matrices `P_0 … P_N` of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution<T: Scalar, const NX: usize, const NU: usize> {
    pub gains: Vec<SMatrix<T, NU, NX>>,
    pub cost_to_go: Vec<SMatrix<T, NX, NX>>,
}

/// One operating point per control index.
pub fn linearize_along<T, const NX: usize, const NU: usize, D>(
    model: &D,
    ref_states: &[SVector<T, NX>],
    ref_controls: &[SVector<T, NU>],
) -> Result<Vec<OperatingPoint<T, NX, NU>>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    if ref_controls.is_empty() || ref_states.len() != ref_controls.len() + 1 {
        return Err(invalid(format!(
            "need N states and N-1 >= 1 controls, got {} and {}",
            ref_states.len(),
            ref_controls.len()
        )));
    }
    Ok(ref_states
        .iter()
        .zip(ref_controls)
        .enumerate()
        .map(|(index, (x, u))| {
            let (a, b) = model.jacobians(x, u);
            OperatingPoint { index, x_op: *x, u_op: *u, a, b }
        })
        .collect())
}

/// Finite-horizon Riccati recursion from `P_N = Q_f`.
pub fn tv_lqr<T: Scalar, const NX: usize, const NU: usize>(
    ops: &[OperatingPoint<T, NX, NU>],
    weights: &CostWeights<T, NX, NU>,
) -> Result<RiccatiSolution<T, NX, NU>> {
    if ops.is_empty() {
        return Err(invalid("no operating points"));
    }
    let mut p = *weights.qf();
    let mut cost_to_go = vec![p; ops.len() + 1];
    let mut gains = vec![SMatrix::zeros(); ops.len()];
    for (i, op) in ops.iter().enumerate().rev() {
        let bt_p = op.b.transpose() * p;
        let chol = Cholesky::new(weights.r() + bt_p * op.b).ok_or(Error::NotPositiveDefinite { step: i })?;
        let k = chol.solve(&(bt_p * op.a));
        let next = weights.q() + op.a.transpose() * p * (op.a - op.b * k);
        p = (next + next.transpose()) * T::lit(0.5);
        debug_assert!(crate::cost::min_eigenvalue(&p) >= -T::lit(1e-10) * p.amax().max(T::one()));
        gains[i] = k;
        cost_to_go[i] = p;
    }
    Ok(RiccatiSolution { gains, cost_to_go })
}

/// Feedback gains `K_0 … K_{N-2}` for `u = u_ff - K δx`.
pub fn tv_lqr_gains<T: Scalar, const NX: usize, const NU: usize>(
    ops: &[OperatingPoint<T, NX, NU>],
    weights: &CostWeights<T, NX, NU>,
) -> Result<Vec<SMatrix<T, NU, NX>>> {
    Ok(tv_lqr(ops, weights)?.gains)
}

/// Closed-loop rollout with feedback applied once per step.
pub fn track<T, const NX: usize, const NU: usize, D>(
    model: &D,
    cost: &TrackingCost<T, NX, NU>,
    x0: &SVector<T, NX>,
    target: &TrackingTarget<T, NX, NU>,
    gains: &[SMatrix<T, NU, NX>],
) -> Result<Trajectory<T, NX, NU>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    track_substepped(model, 1, cost, x0, target, gains)
}

/// Closed-loop rollout re-applying feedback `substeps` times per reference interval.
///
/// `fine_model` must step by `dt / substeps`. Between reference points the pose
/// reference is interpolated linearly; the recorded control for an interval is the
/// mean of the commands issued within it.
pub fn track_substepped<T, const NX: usize, const NU: usize, D>(
    fine_model: &D,
    substeps: usize,
    cost: &TrackingCost<T, NX, NU>,
    x0: &SVector<T, NX>,
    target: &TrackingTarget<T, NX, NU>,
    gains: &[SMatrix<T, NU, NX>],
) -> Result<Trajectory<T, NX, NU>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    if substeps == 0 {
        return Err(invalid("substep count must be >= 1"));
    }
    if gains.len() != target.horizon() {
        return Err(invalid(format!("{} gains for a horizon of {}", gains.len(), target.horizon())));
    }
    let m = T::from_usize(substeps).ok_or_else(|| invalid("substep count too large"))?;
    let mut x = *x0;
    let mut states = Vec::with_capacity(target.len());
    let mut controls = Vec::with_capacity(target.horizon());
    states.push(x);
    for (i, gain) in gains.iter().enumerate() {
        let (from, to) = (&target.states[i], &target.states[i + 1]);
        let mut sum = SVector::<T, NU>::zeros();
        for j in 0..substeps {
            let x_ref = if j == 0 {
                *from
            } else {
                let s = T::from_usize(j).expect("substep index fits") / m;
                from + (to - from) * s
            };
            let u = target.controls[i] - gain * cost.state_error(&x, &x_ref);
            x = fine_model.step(&x, &u);
            sum += u;
        }
        controls.push(if substeps == 1 { sum } else { sum / m });
        states.push(x);
    }
    Ok(Trajectory { states, controls })
}
