//! Discrete-time dynamics: the generic model contract used by the solvers and the
//! seven-state differential-drive model.
//!
//! The differential-drive state carries pose, the velocities currently in effect and
//! the change of those velocities over the last step:
//!
//! ```text
//! x'     = x + v cos(theta) dt
//! y'     = y + v sin(theta) dt
//! theta' = theta + omega dt
//! v'     = v_cmd
//! omega' = omega_cmd
//! dv'    = v_cmd - v
//! domega'= omega_cmd - omega
//! ```
//!
//! The pose rows integrate the *stored* velocities, so a command only moves the robot
//! one step after it is issued and the pose rows of the control Jacobian are zero.

use nalgebra::{SMatrix, SVector};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub const STATE_DIM: usize = 7;
pub const CONTROL_DIM: usize = 2;

/// Row/column indices into the differential-drive state vector.
pub mod idx {
    pub const X: usize = 0;
    pub const Y: usize = 1;
    pub const THETA: usize = 2;
    pub const V: usize = 3;
    pub const OMEGA: usize = 4;
    pub const DV: usize = 5;
    pub const DOMEGA: usize = 6;

    pub const V_CMD: usize = 0;
    pub const OMEGA_CMD: usize = 1;
}

pub type StateVector<T> = SVector<T, STATE_DIM>;
pub type ControlVector<T> = SVector<T, CONTROL_DIM>;
pub type StateJacobian<T> = SMatrix<T, STATE_DIM, STATE_DIM>;
pub type ControlJacobian<T> = SMatrix<T, STATE_DIM, CONTROL_DIM>;

/// Discrete model `x[k+1] = f(x[k], u[k])` with a fixed timestep.
///
/// Implementors that have no analytic derivatives can rely on the default
/// [`Dynamics::jacobians`], which falls back to central finite differences.
pub trait Dynamics<T: Scalar, const NX: usize, const NU: usize> {
    fn dt(&self) -> T;

    fn step(&self, x: &SVector<T, NX>, u: &SVector<T, NU>) -> SVector<T, NX>;

    /// `(df/dx, df/du)` evaluated at `(x, u)`.
    fn jacobians(&self, x: &SVector<T, NX>, u: &SVector<T, NU>) -> (SMatrix<T, NX, NX>, SMatrix<T, NX, NU>) {
        central_differences(self, x, u, T::lit(1e-6))
    }

    fn state_dim(&self) -> usize {
        NX
    }

    fn control_dim(&self) -> usize {
        NU
    }
}

impl<T: Scalar, const NX: usize, const NU: usize, D: Dynamics<T, NX, NU> + ?Sized> Dynamics<T, NX, NU> for &D {
    fn dt(&self) -> T {
        (**self).dt()
    }

    fn step(&self, x: &SVector<T, NX>, u: &SVector<T, NU>) -> SVector<T, NX> {
        (**self).step(x, u)
    }

    fn jacobians(&self, x: &SVector<T, NX>, u: &SVector<T, NU>) -> (SMatrix<T, NX, NX>, SMatrix<T, NX, NU>) {
        (**self).jacobians(x, u)
    }
}

/// Central finite-difference approximation of `(df/dx, df/du)` with perturbation `eps`.
pub fn fd_jacobians<T, const NX: usize, const NU: usize, D>(
    model: &D,
    x: &SVector<T, NX>,
    u: &SVector<T, NU>,
    eps: T,
) -> Result<(SMatrix<T, NX, NX>, SMatrix<T, NX, NU>)>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    if !(eps > T::zero()) || !eps.is_finite_value() {
        return Err(invalid(format!("finite-difference step must be > 0, got {eps}")));
    }
    if !all_finite(x.iter()) || !all_finite(u.iter()) {
        return Err(invalid("non-finite state or control"));
    }
    Ok(central_differences(model, x, u, eps))
}

fn central_differences<T, const NX: usize, const NU: usize, D>(
    model: &D,
    x: &SVector<T, NX>,
    u: &SVector<T, NU>,
    eps: T,
) -> (SMatrix<T, NX, NX>, SMatrix<T, NX, NU>)
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    let two_eps = eps + eps;
    let mut a = SMatrix::<T, NX, NX>::zeros();
    for j in 0..NX {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += eps;
        minus[j] -= eps;
        let col = (model.step(&plus, u) - model.step(&minus, u)) / two_eps;
        a.set_column(j, &col);
    }
    let mut b = SMatrix::<T, NX, NU>::zeros();
    for j in 0..NU {
        let mut plus = *u;
        let mut minus = *u;
        plus[j] += eps;
        minus[j] -= eps;
        let col = (model.step(x, &plus) - model.step(x, &minus)) / two_eps;
        b.set_column(j, &col);
    }
    (a, b)
}

/// Applies `controls` from `x0`; returns `controls.len() + 1` states starting with `x0`.
pub fn rollout<T, const NX: usize, const NU: usize, D>(
    model: &D,
    x0: &SVector<T, NX>,
    controls: &[SVector<T, NU>],
) -> Result<Vec<SVector<T, NX>>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    if controls.is_empty() {
        return Err(invalid("rollout needs at least one control"));
    }
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*x0);
    let mut x = *x0;
    for u in controls {
        x = model.step(&x, u);
        states.push(x);
    }
    Ok(states)
}

/// State sequence of length `N` paired with the `N - 1` controls that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar, const NX: usize, const NU: usize> {
    pub states: Vec<SVector<T, NX>>,
    pub controls: Vec<SVector<T, NU>>,
}

impl<T: Scalar, const NX: usize, const NU: usize> Trajectory<T, NX, NU> {
    pub fn new(states: Vec<SVector<T, NX>>, controls: Vec<SVector<T, NU>>) -> Result<Self> {
        if states.len() != controls.len() + 1 {
            return Err(invalid(format!("{} states for {} controls", states.len(), controls.len())));
        }
        Ok(Self { states, controls })
    }

    /// Open-loop rollout of `controls` from `x0`.
    pub fn simulate<D: Dynamics<T, NX, NU> + ?Sized>(
        model: &D,
        x0: &SVector<T, NX>,
        controls: Vec<SVector<T, NU>>,
    ) -> Result<Self> {
        let states = rollout(model, x0, &controls)?;
        Ok(Self { states, controls })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

pub(crate) fn all_finite<'a, T: Scalar + 'a>(mut values: impl Iterator<Item = &'a T>) -> bool {
    values.all(|v| v.is_finite_value())
}

fn check_dt<T: Scalar>(dt: T) -> Result<()> {
    if dt > T::zero() && dt.is_finite_value() {
        Ok(())
    } else {
        Err(invalid(format!("timestep must be finite and > 0, got {dt}")))
    }
}

/// Augmented differential-drive state. Heading is stored unwrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
    pub v: T,
    pub omega: T,
    pub dv: T,
    pub domega: T,
}

impl<T: Scalar> RobotState<T> {
    pub fn new(x: T, y: T, theta: T, v: T, omega: T, dv: T, domega: T) -> Self {
        Self { x, y, theta, v, omega, dv, domega }
    }

    /// Robot at rest at the given pose.
    pub fn at_pose(x: T, y: T, theta: T) -> Self {
        Self::new(x, y, theta, T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn to_vector(&self) -> StateVector<T> {
        StateVector::from([self.x, self.y, self.theta, self.v, self.omega, self.dv, self.domega])
    }

    pub fn from_vector(v: &StateVector<T>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])
    }

    pub fn is_finite(&self) -> bool {
        all_finite(self.to_vector().iter())
    }
}

impl<T: Scalar> From<RobotState<T>> for StateVector<T> {
    fn from(s: RobotState<T>) -> Self {
        s.to_vector()
    }
}

impl<T: Scalar> From<StateVector<T>> for RobotState<T> {
    fn from(v: StateVector<T>) -> Self {
        Self::from_vector(&v)
    }
}

/// Commanded linear and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput<T> {
    pub v_cmd: T,
    pub omega_cmd: T,
}

impl<T: Scalar> ControlInput<T> {
    pub fn new(v_cmd: T, omega_cmd: T) -> Self {
        Self { v_cmd, omega_cmd }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn to_vector(&self) -> ControlVector<T> {
        ControlVector::new(self.v_cmd, self.omega_cmd)
    }

    pub fn from_vector(v: &ControlVector<T>) -> Self {
        Self::new(v[0], v[1])
    }

    pub fn is_finite(&self) -> bool {
        self.v_cmd.is_finite_value() && self.omega_cmd.is_finite_value()
    }
}

impl<T: Scalar> From<ControlInput<T>> for ControlVector<T> {
    fn from(c: ControlInput<T>) -> Self {
        c.to_vector()
    }
}

impl<T: Scalar> From<ControlVector<T>> for ControlInput<T> {
    fn from(v: ControlVector<T>) -> Self {
        Self::from_vector(&v)
    }
}

fn check_point<T: Scalar>(state: &RobotState<T>, control: &ControlInput<T>, dt: T) -> Result<()> {
    check_dt(dt)?;
    if !state.is_finite() || !control.is_finite() {
        return Err(invalid("non-finite state or control"));
    }
    Ok(())
}

fn diff_drive_step<T: Scalar>(x: &StateVector<T>, u: &ControlVector<T>, dt: T) -> StateVector<T> {
    let theta = x[idx::THETA];
    let v = x[idx::V];
    let omega = x[idx::OMEGA];
    StateVector::from([
        x[idx::X] + v * theta.cos() * dt,
        x[idx::Y] + v * theta.sin() * dt,
        theta + omega * dt,
        u[idx::V_CMD],
        u[idx::OMEGA_CMD],
        u[idx::V_CMD] - v,
        u[idx::OMEGA_CMD] - omega,
    ])
}

fn diff_drive_jacobian_x<T: Scalar>(x: &StateVector<T>, dt: T) -> StateJacobian<T> {
    let (sin, cos) = x[idx::THETA].sin_cos();
    let v = x[idx::V];
    let mut a = StateJacobian::zeros();
    a[(idx::X, idx::X)] = T::one();
    a[(idx::X, idx::THETA)] = -v * sin * dt;
    a[(idx::X, idx::V)] = cos * dt;
    a[(idx::Y, idx::Y)] = T::one();
    a[(idx::Y, idx::THETA)] = v * cos * dt;
    a[(idx::Y, idx::V)] = sin * dt;
    a[(idx::THETA, idx::THETA)] = T::one();
    a[(idx::THETA, idx::OMEGA)] = dt;
    a[(idx::DV, idx::V)] = -T::one();
    a[(idx::DOMEGA, idx::OMEGA)] = -T::one();
    a
}

fn diff_drive_jacobian_u<T: Scalar>() -> ControlJacobian<T> {
    let mut b = ControlJacobian::zeros();
    b[(idx::V, idx::V_CMD)] = T::one();
    b[(idx::OMEGA, idx::OMEGA_CMD)] = T::one();
    b[(idx::DV, idx::V_CMD)] = T::one();
    b[(idx::DOMEGA, idx::OMEGA_CMD)] = T::one();
    b
}

/// One step of the differential-drive model.
pub fn step<T: Scalar>(state: &RobotState<T>, control: &ControlInput<T>, dt: T) -> Result<RobotState<T>> {
    check_point(state, control, dt)?;
    Ok(RobotState::from_vector(&diff_drive_step(&state.to_vector(), &control.to_vector(), dt)))
}

/// Analytic `d step / d state`.
pub fn jacobian_x<T: Scalar>(state: &RobotState<T>, control: &ControlInput<T>, dt: T) -> Result<StateJacobian<T>> {
    check_point(state, control, dt)?;
    Ok(diff_drive_jacobian_x(&state.to_vector(), dt))
}

/// Analytic `d step / d control`. Constant: commands only enter the velocity rows.
pub fn jacobian_u<T: Scalar>(state: &RobotState<T>, control: &ControlInput<T>, dt: T) -> Result<ControlJacobian<T>> {
    check_point(state, control, dt)?;
    Ok(diff_drive_jacobian_u())
}

/// Differential-drive model with a fixed timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffDrive<T> {
    dt: T,
}

impl<T: Scalar> DiffDrive<T> {
    pub fn new(dt: T) -> Result<Self> {
        check_dt(dt)?;
        Ok(Self { dt })
    }

    /// Same model with a different timestep.
    pub fn with_dt(&self, dt: T) -> Result<Self> {
        Self::new(dt)
    }

    pub fn step_state(&self, state: &RobotState<T>, control: &ControlInput<T>) -> Result<RobotState<T>> {
        step(state, control, self.dt)
    }

    pub fn rollout_states(&self, x0: &RobotState<T>, controls: &[ControlInput<T>]) -> Result<Vec<RobotState<T>>> {
        if !x0.is_finite() || !controls.iter().all(ControlInput::is_finite) {
            return Err(invalid("non-finite state or control"));
        }
        let us: Vec<_> = controls.iter().map(ControlInput::to_vector).collect();
        Ok(rollout(self, &x0.to_vector(), &us)?.iter().map(RobotState::from_vector).collect())
    }
}

impl<T: Scalar> Dynamics<T, STATE_DIM, CONTROL_DIM> for DiffDrive<T> {
    fn dt(&self) -> T {
        self.dt
    }

    fn step(&self, x: &StateVector<T>, u: &ControlVector<T>) -> StateVector<T> {
        diff_drive_step(x, u, self.dt)
    }

    fn jacobians(&self, x: &StateVector<T>, _u: &ControlVector<T>) -> (StateJacobian<T>, ControlJacobian<T>) {
        (diff_drive_jacobian_x(x, self.dt), diff_drive_jacobian_u())
    }
}

/// Time-invariant linear model `x' = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T: Scalar, const NX: usize, const NU: usize> {
    pub a: SMatrix<T, NX, NX>,
    pub b: SMatrix<T, NX, NU>,
    dt: T,
}

impl<T: Scalar, const NX: usize, const NU: usize> LinearModel<T, NX, NU> {
    pub fn new(a: SMatrix<T, NX, NX>, b: SMatrix<T, NX, NU>, dt: T) -> Result<Self> {
        check_dt(dt)?;
        if !all_finite(a.iter()) || !all_finite(b.iter()) {
            return Err(invalid("non-finite system matrix"));
        }
        Ok(Self { a, b, dt })
    }
}

impl<T: Scalar> LinearModel<T, 4, 2> {
    /// Planar double integrator, state `[px, py, vx, vy]`, control `[ax, ay]`.
    pub fn double_integrator(dt: T) -> Result<Self> {
        let half_dt2 = T::lit(0.5) * dt * dt;
        let mut a = SMatrix::<T, 4, 4>::identity();
        a[(0, 2)] = dt;
        a[(1, 3)] = dt;
        let mut b = SMatrix::<T, 4, 2>::zeros();
        b[(0, 0)] = half_dt2;
        b[(1, 1)] = half_dt2;
        b[(2, 0)] = dt;
        b[(3, 1)] = dt;
        Self::new(a, b, dt)
    }
}

impl<T: Scalar, const NX: usize, const NU: usize> Dynamics<T, NX, NU> for LinearModel<T, NX, NU> {
    fn dt(&self) -> T {
        self.dt
    }

    fn step(&self, x: &SVector<T, NX>, u: &SVector<T, NU>) -> SVector<T, NX> {
        self.a * x + self.b * u
    }

    fn jacobians(&self, _x: &SVector<T, NX>, _u: &SVector<T, NU>) -> (SMatrix<T, NX, NX>, SMatrix<T, NX, NU>) {
        (self.a, self.b)
    }
}
