//! Reference paths: the inclined bell benchmark, the nominal state/control
//! sequences derived from a path, and tracking-error metrics.

use std::io::{Read, Write};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::cost::TrackingTarget;
use crate::dynamics::{idx, ControlInput, ControlVector, RobotState, StateVector, CONTROL_DIM, STATE_DIM};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Column names of the path CSV.
pub const PATH_CSV_HEADER: [&str; 4] = ["s", "x", "y", "theta"];

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle<T: Scalar>(a: T) -> Result<T> {
    if !a.is_finite_value() {
        return Err(invalid(format!("cannot wrap non-finite angle {a}")));
    }
    Ok(wrap(a))
}

pub(crate) fn wrap<T: Scalar>(a: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    let mut r = a - two_pi * ((a + pi) / two_pi).floor();
    // rounding in the floor can leave r a hair outside the interval
    if r >= pi {
        r -= two_pi;
    }
    if r < -pi {
        r += two_pi;
    }
    r
}

/// Formats a float with 17 significant digits.
pub fn format_float<T: Scalar>(v: T) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BellPathParams<T> {
    /// Extent of the bell along its own axis, meters.
    pub length: T,
    pub height: T,
    /// Position of the peak as a fraction of `length`.
    pub center: T,
    pub width_sigma: T,
    /// Rotation of the whole path about the origin, radians.
    pub incline: T,
    pub n_points: usize,
    pub dt: T,
}

impl<T: Scalar> Default for BellPathParams<T> {
    fn default() -> Self {
        Self {
            length: T::lit(10.0),
            height: T::lit(2.0),
            center: T::lit(0.5),
            width_sigma: T::lit(1.5),
            incline: T::lit(0.3),
            n_points: 200,
            dt: T::lit(0.1),
        }
    }
}

impl<T: Scalar> BellPathParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.length, self.height, self.center, self.width_sigma, self.incline, self.dt]
            .iter()
            .all(|v| v.is_finite_value());
        if !finite {
            return Err(invalid("bell parameters must be finite"));
        }
        if !(self.length > T::zero()) {
            return Err(invalid("length must be > 0"));
        }
        if !(self.width_sigma > T::zero()) {
            return Err(invalid("width_sigma must be > 0"));
        }
        if self.n_points < 2 {
            return Err(invalid("n_points must be >= 2"));
        }
        if !(self.dt > T::zero()) {
            return Err(invalid("dt must be > 0"));
        }
        Ok(())
    }

    /// Same path traversed in the same total time with `n_points` samples.
    pub fn resampled(&self, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(invalid("n_points must be >= 2"));
        }
        let duration = self.dt * T::from_usize(self.n_points - 1).expect("point count fits");
        Ok(Self { n_points, dt: duration / T::from_usize(n_points - 1).expect("point count fits"), ..self.clone() })
    }
}

/// Timestamped reference poses with headings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath<T: Scalar> {
    /// Path parameter per point (bell axis coordinate, or arc length for imported points).
    pub arc: Vec<T>,
    pub points: Vec<Vector2<T>>,
    /// Unwrapped headings, one per point.
    pub headings: Vec<T>,
    pub dt: T,
}

impl<T: Scalar> ReferencePath<T> {
    pub fn new(arc: Vec<T>, points: Vec<Vector2<T>>, headings: Vec<T>, dt: T) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("a path needs at least two points"));
        }
        if arc.len() != points.len() || headings.len() != points.len() {
            return Err(invalid(format!(
                "{} parameters, {} points, {} headings",
                arc.len(),
                points.len(),
                headings.len()
            )));
        }
        if !(dt > T::zero() && dt.is_finite_value()) {
            return Err(invalid("dt must be finite and > 0"));
        }
        let finite = arc.iter().chain(headings.iter()).all(|v| v.is_finite_value())
            && points.iter().all(|p| p.x.is_finite_value() && p.y.is_finite_value());
        if !finite {
            return Err(invalid("non-finite path data"));
        }
        Ok(Self { arc, points, headings, dt })
    }

    /// Path through `points`; headings from finite differences, arc from cumulative chord length.
    pub fn from_points(points: Vec<Vector2<T>>, dt: T) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("a path needs at least two points"));
        }
        let mut arc = Vec::with_capacity(points.len());
        let mut s = T::zero();
        arc.push(s);
        for w in points.windows(2) {
            s += (w[1] - w[0]).norm();
            arc.push(s);
        }
        let headings = finite_difference_headings(&points);
        Self::new(arc, points, headings, dt)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nominal controls: segment speed and wrapped heading change per `dt`, one per segment.
    pub fn nominal_controls(&self) -> Result<Vec<ControlInput<T>>> {
        if self.len() < 2 {
            return Err(invalid("a path needs at least two points"));
        }
        Ok((1..self.len())
            .map(|k| {
                let v = (self.points[k] - self.points[k - 1]).norm() / self.dt;
                let omega = wrap(self.headings[k] - self.headings[k - 1]) / self.dt;
                ControlInput::new(v, omega)
            })
            .collect())
    }

    /// Nominal state per point. Velocity fields hold the control that led into the point
    /// (zero at the start), so the sequence agrees with how the model propagates velocities.
    pub fn path_to_states(&self) -> Result<Vec<RobotState<T>>> {
        let controls = self.nominal_controls()?;
        let mut states = Vec::with_capacity(self.len());
        let mut prev = ControlInput::zero();
        states.push(RobotState::at_pose(self.points[0].x, self.points[0].y, self.headings[0]));
        for (k, u) in controls.iter().enumerate() {
            let p = self.points[k + 1];
            states.push(RobotState::new(
                p.x,
                p.y,
                self.headings[k + 1],
                u.v_cmd,
                u.omega_cmd,
                u.v_cmd - prev.v_cmd,
                u.omega_cmd - prev.omega_cmd,
            ));
            prev = *u;
        }
        Ok(states)
    }

    /// Nominal states and controls as a solver target.
    pub fn target(&self) -> Result<TrackingTarget<T, STATE_DIM, CONTROL_DIM>> {
        let states = self.path_to_states()?.iter().map(RobotState::to_vector).collect();
        let controls = self.nominal_controls()?.iter().map(ControlInput::to_vector).collect();
        TrackingTarget::new(states, controls)
    }

    /// Indices `k` where the step from point `k - 1` exceeds `v_max · dt`.
    pub fn spacing_violations(&self, v_max: T) -> Vec<usize> {
        let limit = v_max * self.dt;
        (1..self.len()).filter(|&k| (self.points[k] - self.points[k - 1]).norm() > limit).collect()
    }

    pub fn max_speed(&self) -> T {
        (1..self.len()).map(|k| (self.points[k] - self.points[k - 1]).norm() / self.dt).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PATH_CSV_HEADER).map_err(csv_error)?;
        for k in 0..self.len() {
            w.write_record([
                format_float(self.arc[k]),
                format_float(self.points[k].x),
                format_float(self.points[k].y),
                format_float(self.headings[k]),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// Reads a path written by [`ReferencePath::write_csv`]; headings are taken as given.
    pub fn read_csv<R: Read>(reader: R, dt: T) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(csv_error)?.clone();
        if header.iter().map(str::trim).ne(PATH_CSV_HEADER) {
            return Err(invalid(format!("path CSV header must be {}", PATH_CSV_HEADER.join(","))));
        }
        let (mut arc, mut points, mut headings) = (Vec::new(), Vec::new(), Vec::new());
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_error)?;
            let field = |i: usize| -> Result<T> {
                let raw = record.get(i).ok_or_else(|| invalid(format!("row {}: missing column {i}", line + 1)))?;
                raw.trim().parse::<f64>().map(T::lit).map_err(|e| invalid(format!("row {}: {raw:?}: {e}", line + 1)))
            };
            arc.push(field(0)?);
            points.push(Vector2::new(field(1)?, field(2)?));
            headings.push(field(3)?);
        }
        Self::new(arc, points, headings, dt)
    }
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        invalid(e.to_string())
    }
}

/// Central differences inside, second-order one-sided differences at the ends
/// (plain chord direction for a two-point path), unwrapped to be continuous.
fn finite_difference_headings<T: Scalar>(points: &[Vector2<T>]) -> Vec<T> {
    let n = points.len();
    let direction = |k: usize| -> Vector2<T> {
        if n == 2 {
            return points[1] - points[0];
        }
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        match k {
            0 => points[1] * four - points[0] * three - points[2],
            k if k == n - 1 => points[n - 1] * three - points[n - 2] * four + points[n - 3],
            k => points[k + 1] - points[k - 1],
        }
    };
    let mut headings = Vec::with_capacity(n);
    let mut prev: Option<T> = None;
    for k in 0..n {
        let d = direction(k);
        let raw = d.y.atan2(d.x);
        let theta = match prev {
            Some(p) => p + wrap(raw - p),
            None => raw,
        };
        headings.push(theta);
        prev = Some(theta);
    }
    headings
}

/// Inclined bell: `(s, height · exp(-(s - center·length)² / (2σ²)))` for `s` uniform in
/// `[0, length]`, rotated about the origin by `incline`.
pub fn generate_bell<T: Scalar>(params: &BellPathParams<T>) -> Result<ReferencePath<T>> {
    params.validate()?;
    let n = params.n_points;
    let last = T::from_usize(n - 1).expect("point count fits");
    let peak = params.center * params.length;
    let two_var = T::lit(2.0) * params.width_sigma * params.width_sigma;
    let (sin, cos) = params.incline.sin_cos();
    let arc: Vec<T> = (0..n).map(|k| params.length * T::from_usize(k).expect("index fits") / last).collect();
    let points: Vec<Vector2<T>> = arc
        .iter()
        .map(|&s| {
            let d = s - peak;
            let h = params.height * (-(d * d) / two_var).exp();
            Vector2::new(cos * s - sin * h, sin * s + cos * h)
        })
        .collect();
    let headings = finite_difference_headings(&points);
    ReferencePath::new(arc, points, headings, params.dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics {
    pub pos_rmse: f64,
    pub heading_rmse: f64,
    pub max_pos_err: f64,
    pub terminal_pos_err: f64,
}

/// Position and wrapped-heading errors of executed states against the path, per index.
pub fn tracking_metrics<T: Scalar>(states: &[StateVector<T>], path: &ReferencePath<T>) -> Result<TrackingMetrics> {
    if states.len() != path.len() {
        return Err(invalid(format!("{} states vs {} path points", states.len(), path.len())));
    }
    let n = states.len() as f64;
    let (mut pos_sq, mut head_sq, mut max_pos, mut last) = (0.0, 0.0, 0.0f64, 0.0);
    for (x, (p, h)) in states.iter().zip(path.points.iter().zip(&path.headings)) {
        let pos = (x[idx::X] - p.x).as_f64().hypot((x[idx::Y] - p.y).as_f64());
        let head = wrap(x[idx::THETA] - *h).as_f64();
        pos_sq += pos * pos;
        head_sq += head * head;
        max_pos = max_pos.max(pos);
        last = pos;
    }
    Ok(TrackingMetrics {
        pos_rmse: (pos_sq / n).sqrt(),
        heading_rmse: (head_sq / n).sqrt(),
        max_pos_err: max_pos,
        terminal_pos_err: last,
    })
}

/// Control sequence as vectors.
pub fn control_vectors<T: Scalar>(controls: &[ControlInput<T>]) -> Vec<ControlVector<T>> {
    controls.iter().map(ControlInput::to_vector).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DiffDrive;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert_eq!(wrap_angle(PI).unwrap(), -PI);
        assert_relative_eq!(wrap_angle(3.0 * FRAC_PI_2).unwrap(), -FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(wrap_angle(-PI).unwrap(), -PI);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn flat_bell_is_straight() {
        let params = BellPathParams { height: 0.0, incline: 0.0, ..BellPathParams::<f64>::default() };
        let path = generate_bell(&params).unwrap();
        assert!(path.points.iter().all(|p| p.y == 0.0));
        assert!(path.headings.iter().all(|h| *h == 0.0));

        let tilted = generate_bell(&BellPathParams { incline: FRAC_PI_4, ..params }).unwrap();
        assert!(tilted.headings.iter().all(|h| (h - FRAC_PI_4).abs() < 1e-12));
    }

    #[test]
    fn bell_validation() {
        let bad = [
            BellPathParams { length: 0.0, ..Default::default() },
            BellPathParams { width_sigma: -1.0, ..Default::default() },
            BellPathParams { n_points: 1, ..Default::default() },
            BellPathParams { dt: 0.0, ..Default::default() },
            BellPathParams { height: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(generate_bell(&p).is_err());
        }
    }

    #[test]
    fn default_bell_heading_extremes_at_inflection_points() {
        let params = BellPathParams::<f64>::default();
        let path = generate_bell(&params).unwrap();
        let deviation: Vec<f64> = path.headings.iter().map(|h| (h - params.incline).abs()).collect();
        let spacing = params.length / (params.n_points - 1) as f64;
        let peak = params.center * params.length;
        let rising = (0..path.len())
            .filter(|&k| path.arc[k] < peak)
            .max_by(|&a, &b| deviation[a].total_cmp(&deviation[b]))
            .unwrap();
        let falling = (0..path.len())
            .filter(|&k| path.arc[k] > peak)
            .max_by(|&a, &b| deviation[a].total_cmp(&deviation[b]))
            .unwrap();
        assert!((path.arc[rising] - (peak - params.width_sigma)).abs() <= spacing);
        assert!((path.arc[falling] - (peak + params.width_sigma)).abs() <= spacing);
    }

    #[test]
    fn nominal_controls_examples() {
        let straight =
            ReferencePath::from_points((0..11).map(|k| Vector2::new(0.1 * k as f64, 0.0)).collect(), 0.1).unwrap();
        for u in straight.nominal_controls().unwrap() {
            assert_relative_eq!(u.v_cmd, 1.0, epsilon = 1e-12);
            assert_eq!(u.omega_cmd, 0.0);
        }
        let still = ReferencePath::from_points(vec![Vector2::new(1.0, 2.0); 5], 0.1).unwrap();
        assert!(still.nominal_controls().unwrap().iter().all(|u| *u == ControlInput::zero()));
    }

    #[test]
    fn quarter_circle_turn_rate() {
        let points = (0..=100)
            .map(|k| {
                let phi = FRAC_PI_2 * k as f64 / 100.0;
                Vector2::new(phi.sin(), 1.0 - phi.cos())
            })
            .collect();
        let path = ReferencePath::from_points(points, 0.1).unwrap();
        let expected = FRAC_PI_2 / 10.0;
        for u in path.nominal_controls().unwrap() {
            assert!((u.omega_cmd - expected).abs() <= 0.01 * expected, "{}", u.omega_cmd);
        }
    }

    #[test]
    fn nominal_states_straight_line() {
        let path =
            ReferencePath::from_points((0..8).map(|k| Vector2::new(0.05 * k as f64, 0.0)).collect(), 0.1).unwrap();
        let states = path.path_to_states().unwrap();
        assert_eq!(states.len(), path.len());
        assert!(states.iter().all(|s| s.theta == 0.0 && s.omega == 0.0));
        assert_eq!(states[0].v, 0.0);
        assert_relative_eq!(states[1].dv, 0.5, epsilon = 1e-12);
        assert!(states[2].dv.abs() < 1e-12);
    }

    #[test]
    fn nominal_rollout_stays_near_path() {
        let params = BellPathParams::<f64>::default();
        let path = generate_bell(&params).unwrap();
        let states = path.path_to_states().unwrap();
        let model = DiffDrive::new(params.dt).unwrap();
        let rolled = model.rollout_states(&states[0], &path.nominal_controls().unwrap()).unwrap();
        let v_max = path.max_speed();
        for (k, (r, p)) in rolled.iter().zip(&path.points).enumerate() {
            let err = (r.x - p.x).hypot(r.y - p.y);
            assert!(err <= v_max * params.dt * k as f64 + 1e-12, "k={k} err={err}");
        }
        // velocity fields of the nominal states are reproduced exactly by the model
        for (r, s) in rolled.iter().zip(&states) {
            assert_eq!((r.v, r.omega), (s.v, s.omega));
        }
    }

    #[test]
    fn spacing_check() {
        let path = generate_bell(&BellPathParams::<f64>::default()).unwrap();
        assert!(path.spacing_violations(2.0).is_empty());
        assert_eq!(path.spacing_violations(0.1).len(), path.len() - 1);
    }

    #[test]
    fn metrics_examples() {
        let path = generate_bell(&BellPathParams::<f64>::default()).unwrap();
        let states: Vec<_> = path.path_to_states().unwrap().iter().map(RobotState::to_vector).collect();
        let m = tracking_metrics(&states, &path).unwrap();
        assert_eq!(m, TrackingMetrics { pos_rmse: 0.0, heading_rmse: 0.0, max_pos_err: 0.0, terminal_pos_err: 0.0 });

        let shifted: Vec<_> = states
            .iter()
            .map(|s| {
                let mut s = *s;
                s[0] += 0.1;
                s
            })
            .collect();
        let m = tracking_metrics(&shifted, &path).unwrap();
        assert_relative_eq!(m.pos_rmse, 0.1, epsilon = 1e-12);
        assert_relative_eq!(m.max_pos_err, 0.1, epsilon = 1e-12);
        assert!(tracking_metrics(&shifted[1..], &path).is_err());

        let wound: Vec<_> = states
            .iter()
            .map(|s| {
                let mut s = *s;
                s[2] += 4.0 * PI;
                s
            })
            .collect();
        assert!(tracking_metrics(&wound, &path).unwrap().heading_rmse < 1e-12);
    }

    #[test]
    fn metrics_match_two_pass_oracle() {
        let path = generate_bell(&BellPathParams::<f64> { n_points: 50, ..Default::default() }).unwrap();
        let states: Vec<StateVector<f64>> = path
            .path_to_states()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut v = s.to_vector();
                v[0] += 0.03 * (k as f64 * 1.7).sin();
                v[1] += 0.02 * (k as f64 * 0.3).cos();
                v[2] += 0.1 * (k as f64).sin();
                v
            })
            .collect();
        let m = tracking_metrics(&states, &path).unwrap();
        let errs: Vec<f64> = states
            .iter()
            .zip(&path.points)
            .map(|(s, p)| ((s[0] - p.x).powi(2) + (s[1] - p.y).powi(2)).sqrt())
            .collect();
        let mean_sq = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
        assert_relative_eq!(m.pos_rmse, mean_sq.sqrt(), max_relative = 1e-14);
        assert_eq!(m.max_pos_err, errs.iter().cloned().fold(0.0, f64::max));
        let heads: Vec<f64> =
            states.iter().zip(&path.headings).map(|(s, h)| (s[2] - h).sin().atan2((s[2] - h).cos())).collect();
        let head_rmse = (heads.iter().map(|e| e * e).sum::<f64>() / heads.len() as f64).sqrt();
        assert_relative_eq!(m.heading_rmse, head_rmse, max_relative = 1e-12);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let path = generate_bell(&BellPathParams::<f64> { n_points: 20, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s,x,y,theta\n"));
        assert_eq!(ReferencePath::read_csv(buf.as_slice(), 0.1).unwrap(), path);

        assert!(ReferencePath::<f64>::read_csv("a,b,c,d\n1,2,3,4\n".as_bytes(), 0.1).is_err());
        assert!(ReferencePath::<f64>::read_csv("s,x,y,theta\n0,0,0,0\n".as_bytes(), 0.1).is_err());
        assert!(ReferencePath::<f64>::read_csv("s,x,y,theta\n0,0,0,0\n1,x,0,0\n".as_bytes(), 0.1).is_err());
    }

    #[test]
    fn resampling_keeps_duration() {
        let p = BellPathParams::<f64>::default();
        let q = p.resampled(400).unwrap();
        assert_relative_eq!(q.dt * 399.0, p.dt * 199.0, max_relative = 1e-14);
        assert!(p.resampled(1).is_err());
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent_and_periodic(a in -1e3..1e3f64) {
            let w = wrap_angle(a).unwrap();
            prop_assert!((-PI..PI).contains(&w));
            prop_assert_eq!(wrap_angle(w).unwrap(), w);
            let shifted = wrap_angle(a + 2.0 * PI).unwrap();
            // equal modulo 2π, measured as the shortest angular distance
            let diff = (shifted - w).abs();
            prop_assert!(diff.min(2.0 * PI - diff) < 1e-12);
        }

        #[test]
        fn incline_is_a_rigid_rotation(incline in -PI..PI, height in -3.0..3.0f64, n in 2usize..60) {
            let flat = generate_bell(&BellPathParams { incline: 0.0, height, n_points: n, ..Default::default() }).unwrap();
            let tilted = generate_bell(&BellPathParams { incline, height, n_points: n, ..Default::default() }).unwrap();
            let (s, c) = incline.sin_cos();
            for (p, q) in flat.points.iter().zip(&tilted.points) {
                let r = Vector2::new(c * p.x - s * p.y, s * p.x + c * p.y);
                prop_assert!((r - q).amax() <= 1e-12);
            }
        }

        #[test]
        fn uniform_straight_path_has_constant_controls(angle in -PI..PI, spacing in 0.01..1.0f64, n in 2usize..40) {
            let dir = Vector2::new(angle.cos(), angle.sin());
            let path = ReferencePath::from_points((0..n).map(|k| dir * spacing * k as f64).collect(), 0.1).unwrap();
            let us = path.nominal_controls().unwrap();
            for u in &us {
                prop_assert!((u.v_cmd - us[0].v_cmd).abs() < 1e-9);
                prop_assert!(u.omega_cmd.abs() < 1e-9);
            }
        }
    }
}
