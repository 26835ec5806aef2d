//! Iterative LQR.
//!
//! Each iteration linearizes the dynamics along the current trajectory, runs a
//! backward pass to get feedforward/feedback corrections, then rolls the corrected
//! controls forward under a line search. Second-order dynamics terms are not used,
//! which is what separates this from full DDP.
//!
//! Step acceptance uses two knobs: `mu` (added to `Q_uu`) and the line-search `alpha`.
//! An accepted step shrinks `mu`; a rejected one grows it and recomputes the gains.

use nalgebra::{Cholesky, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::cost::{TrackingCost, TrackingTarget};
use crate::dynamics::{all_finite, rollout, Dynamics};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Local quadratic model of the perturbed cost-to-go.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion<T: Scalar, const NX: usize, const NU: usize> {
    pub q_x: SVector<T, NX>,
    pub q_u: SVector<T, NU>,
    pub q_xx: SMatrix<T, NX, NX>,
    pub q_uu: SMatrix<T, NU, NU>,
    pub q_ux: SMatrix<T, NU, NX>,
}

impl<T: Scalar, const NX: usize, const NU: usize> QExpansion<T, NX, NU> {
    pub fn q_xu(&self) -> SMatrix<T, NX, NU> {
        self.q_ux.transpose()
    }
}

/// Quadratic value model at one timestep; `dv` is the expected cost change contributed there.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueExpansion<T: Scalar, const NX: usize> {
    pub v_x: SVector<T, NX>,
    pub v_xx: SMatrix<T, NX, NX>,
    pub dv: T,
}

/// Per-step feedforward `k` and feedback `K`: `δu = k + K δx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSchedule<T: Scalar, const NX: usize, const NU: usize> {
    pub feedforward: Vec<SVector<T, NU>>,
    pub feedback: Vec<SMatrix<T, NU, NX>>,
}

impl<T: Scalar, const NX: usize, const NU: usize> GainSchedule<T, NX, NU> {
    pub fn zeros(horizon: usize) -> Self {
        Self { feedforward: vec![SVector::zeros(); horizon], feedback: vec![SMatrix::zeros(); horizon] }
    }

    pub fn len(&self) -> usize {
        self.feedforward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feedforward.is_empty()
    }
}

/// Output of [`backward_pass`].
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardPass<T: Scalar, const NX: usize, const NU: usize> {
    pub gains: GainSchedule<T, NX, NU>,
    /// `N` entries; the last one is the final-cost boundary condition.
    pub values: Vec<ValueExpansion<T, NX>>,
}

impl<T: Scalar, const NX: usize, const NU: usize> BackwardPass<T, NX, NU> {
    /// Sum of `ΔV` over the horizon: predicted cost change of a full (`alpha = 1`) step.
    pub fn expected_change(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.dv)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions<T> {
    pub max_iterations: usize,
    /// Converged once `|cost(U) - cost(U')|` falls below this.
    pub convergence_threshold: T,
    pub mu_init: T,
    pub mu_min: T,
    pub mu_max: T,
    pub mu_factor: T,
    /// Line-search step sizes, strictly descending, starting at 1.
    pub alpha_schedule: Vec<T>,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            convergence_threshold: T::lit(1e-6),
            mu_init: T::lit(1e-6),
            mu_min: T::lit(1e-9),
            mu_max: T::lit(1e10),
            mu_factor: T::lit(10.0),
            alpha_schedule: [1.0, 0.5, 0.25, 0.1, 0.05, 0.01].into_iter().map(T::lit).collect(),
        }
    }
}

impl<T: Scalar> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v > T::zero() && v.is_finite_value();
        if self.max_iterations == 0 {
            return Err(invalid("max_iterations must be >= 1"));
        }
        if !positive(self.convergence_threshold) {
            return Err(invalid("convergence_threshold must be > 0"));
        }
        if !(positive(self.mu_init) && positive(self.mu_min) && positive(self.mu_max)) {
            return Err(invalid("mu_init, mu_min, mu_max must be > 0"));
        }
        if self.mu_min > self.mu_init || self.mu_init > self.mu_max {
            return Err(invalid("need mu_min <= mu_init <= mu_max"));
        }
        if !(self.mu_factor > T::one()) || !self.mu_factor.is_finite_value() {
            return Err(invalid("mu_factor must be > 1"));
        }
        match self.alpha_schedule.first() {
            Some(first) if *first == T::one() => {}
            _ => return Err(invalid("alpha_schedule must start at 1")),
        }
        let descending = self.alpha_schedule.windows(2).all(|w| w[1] < w[0]);
        let last_positive = self.alpha_schedule.last().is_some_and(|a| *a > T::zero());
        if !descending || !last_positive {
            return Err(invalid("alpha_schedule must be strictly descending within (0, 1]"));
        }
        Ok(())
    }
}

/// One outer iteration: the current cost, the best line-search trial and what happened.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub mu: T,
    pub cost_current: T,
    /// Cost of the accepted trial, or of the `alpha = 1` trial when nothing was accepted.
    /// `None` when the backward pass itself failed.
    pub cost_trial: Option<T>,
    pub alpha: Option<T>,
    pub accepted: bool,
    pub expected_change: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<T: Scalar, const NX: usize, const NU: usize> {
    pub states: Vec<SVector<T, NX>>,
    pub controls: Vec<SVector<T, NU>>,
    /// Gains from the last successful backward pass.
    pub gains: GainSchedule<T, NX, NU>,
    /// Initial cost followed by every accepted cost.
    pub cost_history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterationRecord<T>>,
}

impl<T: Scalar, const NX: usize, const NU: usize> Solution<T, NX, NU> {
    pub fn cost(&self) -> T {
        *self.cost_history.last().expect("cost history starts with the initial cost")
    }
}

fn symmetrize<T: Scalar, const N: usize>(m: SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    (m + m.transpose()) * T::lit(0.5)
}

fn check_trajectory<T: Scalar, const NX: usize, const NU: usize>(
    xs: &[SVector<T, NX>],
    us: &[SVector<T, NU>],
) -> Result<()> {
    if us.is_empty() || xs.len() != us.len() + 1 {
        return Err(invalid(format!("need N states and N-1 >= 1 controls, got {} and {}", xs.len(), us.len())));
    }
    Ok(())
}

/// Expansion of the perturbed cost-to-go at one step given the next step's value model.
pub fn q_expansion<T, const NX: usize, const NU: usize, D>(
    model: &D,
    cost: &TrackingCost<T, NX, NU>,
    x: &SVector<T, NX>,
    u: &SVector<T, NU>,
    x_ref: &SVector<T, NX>,
    u_ref: &SVector<T, NU>,
    next: &ValueExpansion<T, NX>,
) -> QExpansion<T, NX, NU>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    let (f_x, f_u) = model.jacobians(x, u);
    let l = cost.cost_derivatives(x, u, x_ref, u_ref);
    let f_ut_vxx = f_u.transpose() * next.v_xx;
    QExpansion {
        q_x: l.l_x + f_x.transpose() * next.v_x,
        q_u: l.l_u + f_u.transpose() * next.v_x,
        q_xx: symmetrize(l.l_xx + f_x.transpose() * next.v_xx * f_x),
        q_uu: symmetrize(l.l_uu + f_ut_vxx * f_u),
        q_ux: l.l_ux + f_ut_vxx * f_x,
    }
}

/// Backward recursion from the final cost producing the gain schedule.
///
/// `mu` is added to the diagonal of `Q_uu` before the Cholesky factorization. A failed
/// factorization reports the offending control index.
pub fn backward_pass<T, const NX: usize, const NU: usize, D>(
    model: &D,
    cost: &TrackingCost<T, NX, NU>,
    target: &TrackingTarget<T, NX, NU>,
    xs: &[SVector<T, NX>],
    us: &[SVector<T, NU>],
    mu: T,
) -> Result<BackwardPass<T, NX, NU>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    check_trajectory(xs, us)?;
    if xs.len() != target.len() {
        return Err(invalid(format!("{} states vs {} reference points", xs.len(), target.len())));
    }
    if !(mu >= T::zero()) {
        return Err(invalid("regularization must be >= 0"));
    }
    let horizon = us.len();
    let (v_x, v_xx) = cost.final_derivatives(&xs[horizon], &target.states[horizon]);
    let mut values = vec![ValueExpansion { v_x, v_xx, dv: T::zero() }; horizon + 1];
    let mut gains = GainSchedule::zeros(horizon);
    let regularizer = SMatrix::<T, NU, NU>::identity() * mu;

    for i in (0..horizon).rev() {
        let q = q_expansion(model, cost, &xs[i], &us[i], &target.states[i], &target.controls[i], &values[i + 1]);
        let q_uu = q.q_uu + regularizer;
        let chol = Cholesky::new(q_uu).ok_or(Error::NotPositiveDefinite { step: i })?;

        let k = -chol.solve(&q.q_u);
        let big_k = -chol.solve(&q.q_ux);
        if !all_finite(k.iter()) || !all_finite(big_k.iter()) {
            return Err(Error::NotPositiveDefinite { step: i });
        }
        debug_assert!(crate::cost::min_eigenvalue(&q_uu) > T::zero());
        // -Q_xu Q_uu^-1 Q_u = Q_ux^T k and -Q_xu Q_uu^-1 Q_ux = Q_ux^T K
        let q_xu = q.q_xu();
        values[i] = ValueExpansion {
            v_x: q.q_x + q_xu * k,
            v_xx: symmetrize(q.q_xx + q_xu * big_k),
            dv: T::lit(0.5) * q.q_u.dot(&k),
        };
        gains.feedforward[i] = k;
        gains.feedback[i] = big_k;
    }
    Ok(BackwardPass { gains, values })
}

/// States and controls of a rollout.
pub type Rollout<T, const NX: usize, const NU: usize> = (Vec<SVector<T, NX>>, Vec<SVector<T, NU>>);

/// Closed-loop rollout of the corrected controls `u + alpha k + K (x_new - x)`.
pub fn forward_pass<T, const NX: usize, const NU: usize, D>(
    model: &D,
    xs: &[SVector<T, NX>],
    us: &[SVector<T, NU>],
    gains: &GainSchedule<T, NX, NU>,
    alpha: T,
) -> Result<Rollout<T, NX, NU>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    check_trajectory(xs, us)?;
    if gains.feedforward.len() != us.len() || gains.feedback.len() != us.len() {
        return Err(invalid(format!("{} gains for {} controls", gains.len(), us.len())));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let mut new_xs = Vec::with_capacity(xs.len());
    let mut new_us = Vec::with_capacity(us.len());
    let mut x = xs[0];
    new_xs.push(x);
    for i in 0..us.len() {
        let u = us[i] + gains.feedforward[i] * alpha + gains.feedback[i] * (x - xs[i]);
        x = model.step(&x, &u);
        new_us.push(u);
        new_xs.push(x);
    }
    Ok((new_xs, new_us))
}

/// Runs iLQR from `x0` with initial controls `u_init` against `target`.
///
/// Running out of iterations or regularization headroom is not an error: the best
/// trajectory found is returned with `converged = false`.
pub fn solve<T, const NX: usize, const NU: usize, D>(
    model: &D,
    cost: &TrackingCost<T, NX, NU>,
    target: &TrackingTarget<T, NX, NU>,
    x0: &SVector<T, NX>,
    u_init: &[SVector<T, NU>],
    opts: &SolverOptions<T>,
) -> Result<Solution<T, NX, NU>>
where
    T: Scalar,
    D: Dynamics<T, NX, NU> + ?Sized,
{
    opts.validate()?;
    if u_init.len() != target.horizon() {
        return Err(invalid(format!("{} initial controls for a horizon of {}", u_init.len(), target.horizon())));
    }
    if !all_finite(x0.iter()) || !u_init.iter().all(|u| all_finite(u.iter())) {
        return Err(invalid("non-finite initial state or controls"));
    }

    let mut us = u_init.to_vec();
    let mut xs = rollout(model, x0, &us)?;
    let mut current = cost.total_cost(&xs, &us, target)?;
    let mut cost_history = vec![current];
    let mut log = Vec::new();
    let mut gains = GainSchedule::zeros(us.len());
    let mut mu = opts.mu_init;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let pass = match backward_pass(model, cost, target, &xs, &us, mu) {
            Ok(pass) => pass,
            Err(Error::NotPositiveDefinite { .. }) => {
                log.push(IterationRecord {
                    iteration: iterations,
                    mu,
                    cost_current: current,
                    cost_trial: None,
                    alpha: None,
                    accepted: false,
                    expected_change: None,
                });
                mu *= opts.mu_factor;
                if mu > opts.mu_max {
                    break;
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        let mut full_step_cost = None;
        let mut accepted = None;
        for &alpha in &opts.alpha_schedule {
            let (new_xs, new_us) = forward_pass(model, &xs, &us, &pass.gains, alpha)?;
            let trial = cost.total_cost(&new_xs, &new_us, target)?;
            if full_step_cost.is_none() {
                full_step_cost = Some(trial);
            }
            if trial.is_finite_value() && trial < current {
                accepted = Some((alpha, trial, new_xs, new_us));
                break;
            }
        }

        let expected_change = Some(pass.expected_change());
        gains = pass.gains;
        match accepted {
            Some((alpha, trial, new_xs, new_us)) => {
                log.push(IterationRecord {
                    iteration: iterations,
                    mu,
                    cost_current: current,
                    cost_trial: Some(trial),
                    alpha: Some(alpha),
                    accepted: true,
                    expected_change,
                });
                let decrease = current - trial;
                xs = new_xs;
                us = new_us;
                current = trial;
                cost_history.push(current);
                mu = (mu / opts.mu_factor).max(opts.mu_min);
                if decrease < opts.convergence_threshold {
                    converged = true;
                    break;
                }
            }
            None => {
                log.push(IterationRecord {
                    iteration: iterations,
                    mu,
                    cost_current: current,
                    cost_trial: full_step_cost,
                    alpha: None,
                    accepted: false,
                    expected_change,
                });
                // no descent and the full step barely moves the cost: stationary
                if full_step_cost.is_some_and(|c| (c - current).magnitude() < opts.convergence_threshold) {
                    converged = true;
                    break;
                }
                mu *= opts.mu_factor;
                if mu > opts.mu_max {
                    break;
                }
            }
        }
    }

    Ok(Solution { states: xs, controls: us, gains, cost_history, iterations, converged, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostWeights;
    use crate::dynamics::LinearModel;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    type Di = LinearModel<f64, 4, 2>;

    fn double_integrator() -> (Di, TrackingCost<f64, 4, 2>, TrackingTarget<f64, 4, 2>) {
        (
            LinearModel::double_integrator(0.1).unwrap(),
            TrackingCost::euclidean(CostWeights::identity(10.0).unwrap()),
            TrackingTarget::origin(30).unwrap(),
        )
    }

    /// Independent finite-horizon Riccati recursion on dynamic matrices with explicit inverses.
    /// Returns gains (u = -K x) and the optimal cost ½ x0ᵀ P0 x0.
    fn riccati_oracle(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
        qf: &DMatrix<f64>,
        horizon: usize,
        x0: &DVector<f64>,
    ) -> (Vec<DMatrix<f64>>, f64) {
        let mut p = qf.clone();
        let mut gains = vec![DMatrix::zeros(b.ncols(), a.nrows()); horizon];
        for i in (0..horizon).rev() {
            let s = r + b.transpose() * &p * b;
            let k = s.try_inverse().unwrap() * b.transpose() * &p * a;
            p = q + a.transpose() * &p * a - a.transpose() * &p * b * &k;
            gains[i] = k;
        }
        (gains, 0.5 * (x0.transpose() * p * x0)[(0, 0)])
    }

    fn to_dyn<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
        DMatrix::from_column_slice(R, C, m.as_slice())
    }

    #[test]
    fn options_validation() {
        let mut o = SolverOptions::<f64>::default();
        assert!(o.validate().is_ok());
        o.alpha_schedule = vec![0.5, 0.25];
        assert!(o.validate().is_err());
        o.alpha_schedule = vec![1.0, 0.5, 0.5];
        assert!(o.validate().is_err());
        o = SolverOptions { convergence_threshold: 0.0, ..Default::default() };
        assert!(o.validate().is_err());
        o = SolverOptions { mu_factor: 1.0, ..Default::default() };
        assert!(o.validate().is_err());
    }

    #[test]
    fn backward_pass_gains_match_riccati() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, -2.0, 0.5, 0.3);
        let us = vec![SVector::<f64, 2>::new(0.1, -0.2); 29];
        let xs = rollout(&model, &x0, &us).unwrap();
        let pass = backward_pass(&model, &cost, &target, &xs, &us, 0.0).unwrap();
        let (oracle, _) = riccati_oracle(
            &to_dyn(&model.a),
            &to_dyn(&model.b),
            &DMatrix::identity(4, 4),
            &DMatrix::identity(2, 2),
            &(DMatrix::identity(4, 4) * 10.0),
            29,
            &DVector::from_column_slice(x0.as_slice()),
        );
        for (k, o) in pass.gains.feedback.iter().zip(&oracle) {
            assert!((to_dyn(k) + o).amax() < 1e-10);
        }
    }

    #[test]
    fn optimal_trajectory_has_zero_feedforward() {
        let (model, cost, target) = double_integrator();
        let xs = target.states.clone();
        let us = target.controls.clone();
        let pass = backward_pass(&model, &cost, &target, &xs, &us, 0.0).unwrap();
        assert!(pass.gains.feedforward.iter().all(|k| k.amax() == 0.0));
        assert_eq!(pass.expected_change(), 0.0);
    }

    #[test]
    fn heavy_regularization_kills_gains() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, 1.0, 0.0, 0.0);
        let us = vec![SVector::<f64, 2>::zeros(); 29];
        let xs = rollout(&model, &x0, &us).unwrap();
        let pass = backward_pass(&model, &cost, &target, &xs, &us, 1e14).unwrap();
        assert!(pass.gains.feedforward.iter().all(|k| k.amax() < 1e-11));
        assert!(pass.gains.feedback.iter().all(|k| k.amax() < 1e-11));
    }

    /// Double integrator whose control Jacobian is poisoned, so `Q_uu` can never be factored.
    struct Poisoned(Di);

    impl Dynamics<f64, 4, 2> for Poisoned {
        fn dt(&self) -> f64 {
            self.0.dt()
        }
        fn step(&self, x: &SVector<f64, 4>, u: &SVector<f64, 2>) -> SVector<f64, 4> {
            self.0.step(x, u)
        }
        fn jacobians(&self, _x: &SVector<f64, 4>, _u: &SVector<f64, 2>) -> (SMatrix<f64, 4, 4>, SMatrix<f64, 4, 2>) {
            (self.0.a, -self.0.b * 1e200 * 1e200)
        }
    }

    #[test]
    fn unfactorable_hessian_reports_step() {
        let (model, cost, target) = double_integrator();
        let us = vec![SVector::<f64, 2>::zeros(); 29];
        let xs = rollout(&model, &SVector::zeros(), &us).unwrap();
        assert!(matches!(backward_pass(&model, &cost, &target, &xs, &us, -1.0), Err(Error::InvalidArgument(_))));
        let poisoned = Poisoned(model);
        assert_eq!(
            backward_pass(&poisoned, &cost, &target, &xs, &us, 0.0),
            Err(Error::NotPositiveDefinite { step: 28 })
        );
    }

    #[test]
    fn regularization_overflow_returns_best_so_far() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, 0.0, 0.0, 0.0);
        let us = vec![SVector::<f64, 2>::zeros(); 29];
        let sol = solve(&Poisoned(model), &cost, &target, &x0, &us, &SolverOptions::default()).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.controls, us);
        assert_eq!(sol.cost_history.len(), 1);
        assert!(sol.log.iter().all(|r| !r.accepted && r.cost_trial.is_none()));
    }

    #[test]
    fn forward_pass_identities() {
        let (model, _, _) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, 0.0, 0.0, 1.0);
        let us: Vec<_> = (0..10).map(|i| SVector::<f64, 2>::new(i as f64 * 0.1, -0.3)).collect();
        let xs = rollout(&model, &x0, &us).unwrap();
        let zero = GainSchedule::zeros(10);
        assert_eq!(forward_pass(&model, &xs, &us, &zero, 1.0).unwrap(), (xs.clone(), us.clone()));

        let mut gains = GainSchedule::zeros(10);
        gains.feedforward.iter_mut().for_each(|k| *k = SVector::<f64, 2>::new(3.0, -1.0));
        gains.feedback.iter_mut().for_each(|k| *k = SMatrix::from_element(0.7));
        assert_eq!(forward_pass(&model, &xs, &us, &gains, 0.0).unwrap(), (xs.clone(), us.clone()));
        assert!(forward_pass(&model, &xs, &us, &gains, 1.5).is_err());
        assert!(forward_pass(&model, &xs, &us[..9], &gains, 1.0).is_err());
    }

    #[test]
    fn expected_change_predicts_full_step() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(2.0, -1.0, 0.0, 0.5);
        let us: Vec<_> = (0..29).map(|i| SVector::<f64, 2>::new((i as f64).sin(), 0.2)).collect();
        let xs = rollout(&model, &x0, &us).unwrap();
        let before = cost.total_cost(&xs, &us, &target).unwrap();
        let pass = backward_pass(&model, &cost, &target, &xs, &us, 0.0).unwrap();
        let (nx, nu) = forward_pass(&model, &xs, &us, &pass.gains, 1.0).unwrap();
        let after = cost.total_cost(&nx, &nu, &target).unwrap();
        assert_relative_eq!(after - before, pass.expected_change(), max_relative = 1e-8);
    }

    #[test]
    fn solve_reaches_riccati_optimum() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, -1.0, 0.2, 0.0);
        let sol = solve(&model, &cost, &target, &x0, &vec![SVector::zeros(); 29], &SolverOptions::default()).unwrap();
        let (_, optimal) = riccati_oracle(
            &to_dyn(&model.a),
            &to_dyn(&model.b),
            &DMatrix::identity(4, 4),
            &DMatrix::identity(2, 2),
            &(DMatrix::identity(4, 4) * 10.0),
            29,
            &DVector::from_column_slice(x0.as_slice()),
        );
        assert!(sol.converged);
        assert!(sol.iterations <= 2);
        assert_relative_eq!(sol.cost(), optimal, max_relative = 1e-8);
    }

    #[test]
    fn solve_from_optimum_stops_immediately() {
        let (model, cost, target) = double_integrator();
        let x0 = SVector::<f64, 4>::new(1.0, -1.0, 0.2, 0.0);
        let first = solve(&model, &cost, &target, &x0, &vec![SVector::zeros(); 29], &SolverOptions::default()).unwrap();
        let again = solve(&model, &cost, &target, &x0, &first.controls, &SolverOptions::default()).unwrap();
        assert!(again.converged);
        assert_eq!(again.iterations, 1);
        assert!((1..=2).contains(&again.cost_history.len()));
        assert!((again.cost_history[0] - again.cost()).abs() < 1e-6);
    }

    #[test]
    fn solve_rejects_bad_lengths() {
        let (model, cost, target) = double_integrator();
        let err = solve(&model, &cost, &target, &SVector::zeros(), &[SVector::zeros(); 5], &SolverOptions::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn iteration_budget_exhaustion_is_not_an_error() {
        let (model, cost, target) = double_integrator();
        let opts = SolverOptions { max_iterations: 1, convergence_threshold: 1e-300, ..Default::default() };
        let sol = solve(
            &model,
            &cost,
            &target,
            &SVector::<f64, 4>::new(5.0, 5.0, 0.0, 0.0),
            &vec![SVector::zeros(); 29],
            &opts,
        )
        .unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.cost_history.windows(2).all(|w| w[1] < w[0]));
    }
}
