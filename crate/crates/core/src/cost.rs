//! Quadratic tracking cost and its derivatives.
//!
//! Running cost `½ e_xᵀ Q e_x + ½ e_uᵀ R e_u` with `e_x` the deviation from the
//! per-step reference state (angular components wrapped into `[-π, π)`) and `e_u`
//! the deviation from the nominal control. Final cost `½ e_xᵀ Q_f e_x`.

use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{all_finite, CONTROL_DIM, STATE_DIM};
use crate::error::{invalid, Result};
use crate::path::wrap;
use crate::scalar::Scalar;

/// What the control term of the running cost penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlPenalty {
    /// `u - u_ref`: deviation from the nominal control.
    #[default]
    Deviation,
    /// `u` itself (regulator form).
    Absolute,
}

/// Validated weight matrices: `Q`, `Q_f` symmetric PSD, `R` symmetric PD.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights<T: Scalar, const NX: usize, const NU: usize> {
    q: SMatrix<T, NX, NX>,
    r: SMatrix<T, NU, NU>,
    qf: SMatrix<T, NX, NX>,
}

fn symmetric<T: Scalar, const N: usize>(m: &SMatrix<T, N, N>) -> bool {
    let scale = m.amax().max(T::one());
    (m - m.transpose()).amax() <= T::lit(1e-12) * scale
}

pub(crate) fn min_eigenvalue<T: Scalar, const N: usize>(m: &SMatrix<T, N, N>) -> T {
    DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigenvalues().min()
}

impl<T: Scalar, const NX: usize, const NU: usize> CostWeights<T, NX, NU> {
    pub fn new(q: SMatrix<T, NX, NX>, r: SMatrix<T, NU, NU>, qf: SMatrix<T, NX, NX>) -> Result<Self> {
        if !all_finite(q.iter()) || !all_finite(r.iter()) || !all_finite(qf.iter()) {
            return Err(invalid("non-finite weight"));
        }
        for (name, m) in [("Q", &q), ("Qf", &qf)] {
            if !symmetric(m) {
                return Err(invalid(format!("{name} must be symmetric")));
            }
            let tol = T::lit(1e-12) * m.amax().max(T::one());
            if min_eigenvalue(m) < -tol {
                return Err(invalid(format!("{name} must be positive semi-definite")));
            }
        }
        if !symmetric(&r) {
            return Err(invalid("R must be symmetric"));
        }
        if !(min_eigenvalue(&r) > T::zero()) {
            return Err(invalid("R must be positive definite"));
        }
        Ok(Self { q, r, qf })
    }

    pub fn diagonal(q: [T; NX], r: [T; NU], qf: [T; NX]) -> Result<Self> {
        Self::new(
            SMatrix::from_diagonal(&SVector::from(q)),
            SMatrix::from_diagonal(&SVector::from(r)),
            SMatrix::from_diagonal(&SVector::from(qf)),
        )
    }

    /// `Q = I`, `R = I`, `Q_f = qf_scale · I`.
    pub fn identity(qf_scale: T) -> Result<Self> {
        Self::new(SMatrix::identity(), SMatrix::identity(), SMatrix::identity() * qf_scale)
    }

    pub fn q(&self) -> &SMatrix<T, NX, NX> {
        &self.q
    }

    pub fn r(&self) -> &SMatrix<T, NU, NU> {
        &self.r
    }

    pub fn qf(&self) -> &SMatrix<T, NX, NX> {
        &self.qf
    }

    /// All three matrices multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(invalid("weight scale must be > 0"));
        }
        Self::new(self.q * factor, self.r * factor, self.qf * factor)
    }
}

impl<T: Scalar> CostWeights<T, STATE_DIM, CONTROL_DIM> {
    pub const DEFAULT_Q: [f64; STATE_DIM] = [10.0, 10.0, 1.0, 0.1, 0.1, 0.0, 0.0];
    pub const DEFAULT_R: [f64; CONTROL_DIM] = [1.0, 1.0];
    pub const DEFAULT_QF_SCALE: f64 = 10.0;

    /// `Q = diag(10, 10, 1, 0.1, 0.1, 0, 0)`, `R = I`, `Q_f = 10 Q`.
    pub fn diff_drive_default() -> Self {
        let q = Self::DEFAULT_Q.map(T::lit);
        let qf = Self::DEFAULT_Q.map(|w| T::lit(w * Self::DEFAULT_QF_SCALE));
        Self::diagonal(q, Self::DEFAULT_R.map(T::lit), qf).expect("default weights are valid")
    }
}

/// Per-step reference: `N` states and `N - 1` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingTarget<T: Scalar, const NX: usize, const NU: usize> {
    pub states: Vec<SVector<T, NX>>,
    pub controls: Vec<SVector<T, NU>>,
}

impl<T: Scalar, const NX: usize, const NU: usize> TrackingTarget<T, NX, NU> {
    pub fn new(states: Vec<SVector<T, NX>>, controls: Vec<SVector<T, NU>>) -> Result<Self> {
        if states.len() < 2 || states.len() != controls.len() + 1 {
            return Err(invalid(format!(
                "target needs N >= 2 states and N-1 controls, got {} and {}",
                states.len(),
                controls.len()
            )));
        }
        Ok(Self { states, controls })
    }

    /// Regulation to the origin over `n` points.
    pub fn origin(n: usize) -> Result<Self> {
        Self::new(vec![SVector::zeros(); n], vec![SVector::zeros(); n.saturating_sub(1)])
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }
}

/// First and second derivatives of the running cost at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDerivatives<T: Scalar, const NX: usize, const NU: usize> {
    pub l_x: SVector<T, NX>,
    pub l_u: SVector<T, NU>,
    pub l_xx: SMatrix<T, NX, NX>,
    pub l_uu: SMatrix<T, NU, NU>,
    pub l_ux: SMatrix<T, NU, NX>,
}

/// Quadratic tracking cost over a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingCost<T: Scalar, const NX: usize, const NU: usize> {
    pub weights: CostWeights<T, NX, NU>,
    /// State components measured as angles; their errors are wrapped.
    pub angular: [bool; NX],
    pub control_penalty: ControlPenalty,
}

impl<T: Scalar, const NX: usize, const NU: usize> TrackingCost<T, NX, NU> {
    /// Cost on a plain vector space (no angular components).
    pub fn euclidean(weights: CostWeights<T, NX, NU>) -> Self {
        Self { weights, angular: [false; NX], control_penalty: ControlPenalty::Deviation }
    }

    pub fn with_control_penalty(mut self, penalty: ControlPenalty) -> Self {
        self.control_penalty = penalty;
        self
    }

    /// `x ⊖ x_ref`, wrapping angular components.
    pub fn state_error(&self, x: &SVector<T, NX>, x_ref: &SVector<T, NX>) -> SVector<T, NX> {
        let mut e = x - x_ref;
        for (i, angular) in self.angular.iter().enumerate() {
            if *angular {
                e[i] = wrap(e[i]);
            }
        }
        e
    }

    pub fn control_error(&self, u: &SVector<T, NU>, u_ref: &SVector<T, NU>) -> SVector<T, NU> {
        match self.control_penalty {
            ControlPenalty::Deviation => u - u_ref,
            ControlPenalty::Absolute => *u,
        }
    }

    pub fn running_cost(
        &self,
        x: &SVector<T, NX>,
        u: &SVector<T, NU>,
        x_ref: &SVector<T, NX>,
        u_ref: &SVector<T, NU>,
    ) -> T {
        let ex = self.state_error(x, x_ref);
        let eu = self.control_error(u, u_ref);
        T::lit(0.5) * (ex.dot(&(self.weights.q * ex)) + eu.dot(&(self.weights.r * eu)))
    }

    pub fn final_cost(&self, x_n: &SVector<T, NX>, x_star: &SVector<T, NX>) -> T {
        let e = self.state_error(x_n, x_star);
        T::lit(0.5) * e.dot(&(self.weights.qf * e))
    }

    fn check_lengths(
        &self,
        xs: &[SVector<T, NX>],
        us: &[SVector<T, NU>],
        target: &TrackingTarget<T, NX, NU>,
    ) -> Result<()> {
        if xs.len() != us.len() + 1 || xs.len() != target.len() {
            return Err(invalid(format!(
                "length mismatch: {} states, {} controls, {} reference points",
                xs.len(),
                us.len(),
                target.len()
            )));
        }
        Ok(())
    }

    /// Per-step costs: `N - 1` running terms followed by the final term.
    pub fn step_costs(
        &self,
        xs: &[SVector<T, NX>],
        us: &[SVector<T, NU>],
        target: &TrackingTarget<T, NX, NU>,
    ) -> Result<Vec<T>> {
        self.check_lengths(xs, us, target)?;
        let n = xs.len();
        let mut costs: Vec<T> =
            (0..n - 1).map(|k| self.running_cost(&xs[k], &us[k], &target.states[k], &target.controls[k])).collect();
        costs.push(self.final_cost(&xs[n - 1], &target.states[n - 1]));
        Ok(costs)
    }

    pub fn total_cost(
        &self,
        xs: &[SVector<T, NX>],
        us: &[SVector<T, NU>],
        target: &TrackingTarget<T, NX, NU>,
    ) -> Result<T> {
        self.cost_to_go(xs, us, target, 0)
    }

    /// Cost accumulated from index `t` to the end of the horizon.
    pub fn cost_to_go(
        &self,
        xs: &[SVector<T, NX>],
        us: &[SVector<T, NU>],
        target: &TrackingTarget<T, NX, NU>,
        t: usize,
    ) -> Result<T> {
        self.check_lengths(xs, us, target)?;
        let n = xs.len();
        if t >= n {
            return Err(invalid(format!("start index {t} outside 0..{n}")));
        }
        let mut total = self.final_cost(&xs[n - 1], &target.states[n - 1]);
        for k in t..n - 1 {
            total += self.running_cost(&xs[k], &us[k], &target.states[k], &target.controls[k]);
        }
        Ok(total)
    }

    pub fn cost_derivatives(
        &self,
        x: &SVector<T, NX>,
        u: &SVector<T, NU>,
        x_ref: &SVector<T, NX>,
        u_ref: &SVector<T, NU>,
    ) -> CostDerivatives<T, NX, NU> {
        let ex = self.state_error(x, x_ref);
        let eu = self.control_error(u, u_ref);
        CostDerivatives {
            l_x: self.weights.q * ex,
            l_u: self.weights.r * eu,
            l_xx: self.weights.q,
            l_uu: self.weights.r,
            l_ux: SMatrix::zeros(),
        }
    }

    /// Gradient and Hessian of the final cost.
    pub fn final_derivatives(
        &self,
        x_n: &SVector<T, NX>,
        x_star: &SVector<T, NX>,
    ) -> (SVector<T, NX>, SMatrix<T, NX, NX>) {
        (self.weights.qf * self.state_error(x_n, x_star), self.weights.qf)
    }
}

impl<T: Scalar> TrackingCost<T, STATE_DIM, CONTROL_DIM> {
    pub const DIFF_DRIVE_ANGULAR: [bool; STATE_DIM] = [false, false, true, false, false, false, false];

    /// Tracking cost for the differential-drive state, heading error wrapped.
    pub fn diff_drive(weights: CostWeights<T, STATE_DIM, CONTROL_DIM>) -> Self {
        Self { weights, angular: Self::DIFF_DRIVE_ANGULAR, control_penalty: ControlPenalty::Deviation }
    }
}
