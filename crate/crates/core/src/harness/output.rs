use std::io::{Read, Write};

use nalgebra::Vector2;

use super::HarnessError;
use crate::dynamics::{idx, StateVector};
use crate::path::{format_float, tracking_metrics, ReferencePath, TrackingMetrics};

pub const TRAJECTORY_CSV_HEADER: [&str; 11] =
    ["t", "x", "y", "theta", "v", "omega", "x_ref", "y_ref", "theta_ref", "u_v", "u_omega"];

fn csv_error(e: csv::Error) -> HarnessError {
    if e.is_io_error() {
        HarnessError::Io(e.to_string())
    } else {
        HarnessError::Config(e.to_string())
    }
}

/// One row per state; the control columns are empty on the last row.
pub fn write_trajectory_csv<W: Write>(
    writer: W,
    states: &[StateVector<f64>],
    controls: &[nalgebra::Vector2<f64>],
    path: &ReferencePath<f64>,
) -> Result<(), HarnessError> {
    if states.len() != path.len() || controls.len() + 1 != states.len() {
        return Err(HarnessError::Config(format!(
            "{} states, {} controls, {} path points",
            states.len(),
            controls.len(),
            path.len()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_CSV_HEADER).map_err(csv_error)?;
    for (k, x) in states.iter().enumerate() {
        let mut row = vec![
            format_float(path.dt * k as f64),
            format_float(x[idx::X]),
            format_float(x[idx::Y]),
            format_float(x[idx::THETA]),
            format_float(x[idx::V]),
            format_float(x[idx::OMEGA]),
            format_float(path.points[k].x),
            format_float(path.points[k].y),
            format_float(path.headings[k]),
        ];
        match controls.get(k) {
            Some(u) => row.extend([format_float(u[0]), format_float(u[1])]),
            None => row.extend([String::new(), String::new()]),
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// A trajectory CSV read back into columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub t: Vec<f64>,
    pub pose: Vec<[f64; 3]>,
    pub velocity: Vec<[f64; 2]>,
    pub reference: Vec<[f64; 3]>,
    pub controls: Vec<[f64; 2]>,
}

impl TrajectoryTable {
    /// Re-scores the executed poses against the reference columns.
    pub fn metrics(&self) -> Result<TrackingMetrics, HarnessError> {
        let dt = if self.t.len() > 1 { self.t[1] - self.t[0] } else { 1.0 };
        let points = self.reference.iter().map(|r| Vector2::new(r[0], r[1])).collect();
        let headings = self.reference.iter().map(|r| r[2]).collect();
        let arc = self.t.clone();
        let path = ReferencePath::new(arc, points, headings, dt)?;
        let states: Vec<StateVector<f64>> = self
            .pose
            .iter()
            .zip(&self.velocity)
            .map(|(p, v)| StateVector::from_column_slice(&[p[0], p[1], p[2], v[0], v[1], 0.0, 0.0]))
            .collect();
        Ok(tracking_metrics(&states, &path)?)
    }
}

pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<TrajectoryTable, HarnessError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().map(str::trim).ne(TRAJECTORY_CSV_HEADER) {
        return Err(HarnessError::Config(format!("trajectory CSV header must be {}", TRAJECTORY_CSV_HEADER.join(","))));
    }
    let mut table = TrajectoryTable {
        t: Vec::new(),
        pose: Vec::new(),
        velocity: Vec::new(),
        reference: Vec::new(),
        controls: Vec::new(),
    };
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let field = |i: usize| -> Result<Option<f64>, HarnessError> {
            let raw = record.get(i).unwrap_or("").trim();
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>().map(Some).map_err(|e| HarnessError::Config(format!("row {}: {raw:?}: {e}", line + 1)))
        };
        let req = |i: usize| -> Result<f64, HarnessError> {
            field(i)?.ok_or_else(|| HarnessError::Config(format!("row {}: empty column {i}", line + 1)))
        };
        table.t.push(req(0)?);
        table.pose.push([req(1)?, req(2)?, req(3)?]);
        table.velocity.push([req(4)?, req(5)?]);
        table.reference.push([req(6)?, req(7)?, req(8)?]);
        if let (Some(v), Some(w)) = (field(9)?, field(10)?) {
            table.controls.push([v, w]);
        }
    }
    Ok(table)
}

/// Gnuplot script drawing the reference and each trajectory file found next to it.
pub fn gnuplot_script(trajectory_files: &[String]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset key autotitle columnhead\nset size ratio -1\n\
         set xlabel 'x [m]'\nset ylabel 'y [m]'\n",
    );
    let mut plots = Vec::new();
    if let Some(first) = trajectory_files.first() {
        plots.push(format!("'{first}' using 7:8 with lines dashtype 2 title 'reference'"));
    }
    for f in trajectory_files {
        plots.push(format!("'{f}' using 2:3 with lines title '{}'", f.trim_end_matches(".csv")));
    }
    s.push_str("plot ");
    s.push_str(&plots.join(", \\\n     "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{generate_bell, BellPathParams};

    fn sample() -> (ReferencePath<f64>, Vec<StateVector<f64>>, Vec<Vector2<f64>>) {
        let path = generate_bell(&BellPathParams { n_points: 30, ..Default::default() }).unwrap();
        let target = path.target().unwrap();
        let states: Vec<_> = target
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| s + StateVector::from_element(0.01 * (k as f64).sin() / 3.0))
            .collect();
        (path, states, target.controls.clone())
    }

    #[test]
    fn round_trip_reproduces_metrics() {
        let (path, states, controls) = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &states, &controls, &path).unwrap();
        let table = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(table.t.len(), 30);
        assert_eq!(table.controls.len(), 29);
        let direct = tracking_metrics(&states, &path).unwrap();
        let reread = table.metrics().unwrap();
        assert!((direct.pos_rmse - reread.pos_rmse).abs() <= 1e-12);
        assert!((direct.heading_rmse - reread.heading_rmse).abs() <= 1e-12);
        assert!((direct.max_pos_err - reread.max_pos_err).abs() <= 1e-12);
        assert!((direct.terminal_pos_err - reread.terminal_pos_err).abs() <= 1e-12);
    }

    #[test]
    fn last_row_has_blank_controls() {
        let (path, states, controls) = sample();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &states, &controls, &path).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRAJECTORY_CSV_HEADER.join(","));
        assert!(text.lines().last().unwrap().ends_with(",,"));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let (path, states, controls) = sample();
        assert!(write_trajectory_csv(Vec::new(), &states[1..], &controls, &path).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(read_trajectory_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn script_mentions_every_file() {
        let s = gnuplot_script(&["trajectory_lqr.csv".into(), "trajectory_ilqr.csv".into()]);
        assert!(s.contains("trajectory_lqr.csv") && s.contains("trajectory_ilqr.csv"));
        assert!(s.contains("using 7:8"));
    }
}
