use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::{ControllerChoice, ExperimentConfig};
use super::experiment::{standard_perturbations, ControllerRun, Scenario};
use super::output::{gnuplot_script, write_trajectory_csv};
use super::report::{config_echo, to_json, CompareReport, CompareRow, ControllerBlock, RunReport};
use super::{io_error, HarnessError};
use crate::path::{generate_bell, ReferencePath};

/// Files written by a command, plus human-readable notes for stderr.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutcome {
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn create_out_dir(out: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(out).map_err(|e| io_error(out, e))
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(f);
    body(&mut w)?;
    w.flush().map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    write_file(path, |w| w.write_all(text.as_bytes()).map_err(|e| io_error(path, e)))
}

fn write_run_csv(path: &Path, run: &ControllerRun, reference: &ReferencePath<f64>) -> Result<(), HarnessError> {
    write_file(path, |w| write_trajectory_csv(w, &run.trajectory.states, &run.trajectory.controls, reference))
}

fn spacing_note(scenario: &Scenario) -> Option<String> {
    (!scenario.spacing_warnings.is_empty()).then(|| {
        format!(
            "warning: {} path segments exceed v_max * dt (first at index {})",
            scenario.spacing_warnings.len(),
            scenario.spacing_warnings[0]
        )
    })
}

/// Writes `path.csv` for the configured path.
pub fn cmd_path_generate(cfg: &ExperimentConfig, out: &Path) -> Result<CommandOutcome, HarnessError> {
    let path = match cfg.path.file {
        Some(_) => cfg.reference_path()?,
        None => generate_bell(&cfg.path.bell())?,
    };
    create_out_dir(out)?;
    let file = out.join("path.csv");
    write_file(&file, |w| path.write_csv(w).map_err(HarnessError::from))?;
    Ok(CommandOutcome { files: vec![file], notes: Vec::new() })
}

/// Runs the configured controller(s); writes `trajectory_<kind>.csv`, `report.json`, `plot.gp`.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<CommandOutcome, HarnessError> {
    let seed = seed.unwrap_or(cfg.perturbation.seed);
    let scenario = Scenario::from_config(cfg, seed)?;
    let runs = cfg.controller.kind.kinds().into_iter().map(|k| scenario.run(k)).collect::<Result<Vec<_>, _>>()?;

    create_out_dir(out)?;
    let mut outcome = CommandOutcome::default();
    outcome.notes.extend(spacing_note(&scenario));
    let mut blocks = Vec::new();
    let mut names = Vec::new();
    for run in &runs {
        let name = format!("trajectory_{}.csv", run.kind.name());
        let file = out.join(&name);
        write_run_csv(&file, run, &scenario.path)?;
        if !run.converged() {
            outcome.notes.push(format!("{} did not converge; results reported as is", run.kind.name()));
        }
        blocks.push(ControllerBlock::new(run, &name));
        names.push(name);
        outcome.files.push(file);
    }
    let report = RunReport {
        seed,
        initial_state: scenario.x0.iter().copied().collect(),
        spacing_warnings: scenario.spacing_warnings.clone(),
        controllers: blocks,
        config: config_echo(cfg, seed),
    };
    let report_file = out.join("report.json");
    write_text(&report_file, &to_json(&report))?;
    let plot_file = out.join("plot.gp");
    write_text(&plot_file, &gnuplot_script(&names))?;
    outcome.files.extend([report_file, plot_file]);
    Ok(outcome)
}

fn compare_row(
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    label: &str,
    offset: &[f64],
) -> Result<(CompareRow, ControllerRun, ControllerRun), HarnessError> {
    let baseline = scenario.run(cfg.controller.baseline)?;
    let candidate = scenario.run(cfg.controller.candidate)?;
    let row = CompareRow::new(label, scenario.path.len(), offset, &baseline, &candidate);
    Ok((row, baseline, candidate))
}

/// Runs baseline and candidate on identical scenarios and reports `candidate - baseline`.
///
/// Besides the configured scenario, each of [`standard_perturbations`] is run, and
/// `sweep` lists `n_points` values to repeat the configured scenario at (same duration).
pub fn cmd_compare(
    cfg: &ExperimentConfig,
    out: &Path,
    seed: Option<u64>,
    sweep: &[usize],
) -> Result<CommandOutcome, HarnessError> {
    if cfg.controller.kind != ControllerChoice::Both {
        return Err(HarnessError::Config("compare needs controller.kind = \"both\"".into()));
    }
    if !sweep.is_empty() && cfg.path.file.is_some() {
        return Err(HarnessError::Config("--sweep needs a generated path, not path.file".into()));
    }
    let seed = seed.unwrap_or(cfg.perturbation.seed);
    let scenario = Scenario::from_config(cfg, seed)?;
    let (main, baseline, candidate) = compare_row(&scenario, cfg, "main", &[0.0; 7])?;

    let perturbed = standard_perturbations()
        .iter()
        .map(|(label, offset)| compare_row(&scenario.offset_start(offset), cfg, label, offset.as_slice()).map(|r| r.0))
        .collect::<Result<Vec<_>, _>>()?;

    let sweep_rows = std::thread::scope(|s| {
        let handles: Vec<_> = sweep
            .iter()
            .map(|&n| {
                s.spawn(move || -> Result<CompareRow, HarnessError> {
                    let params = cfg.path.bell().resampled(n)?;
                    let path = generate_bell(&params)?;
                    let sc = Scenario::with_path(cfg, path, seed)?;
                    Ok(compare_row(&sc, cfg, &format!("n_points={n}"), &[0.0; 7])?.0)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect::<Result<Vec<_>, _>>()
    })?;

    create_out_dir(out)?;
    let mut outcome = CommandOutcome::default();
    outcome.notes.extend(spacing_note(&scenario));
    let report = CompareReport {
        seed,
        baseline: cfg.controller.baseline.name().into(),
        candidate: cfg.controller.candidate.name().into(),
        main,
        perturbed,
        sweep: sweep_rows,
        candidate_solver: candidate.solver.clone(),
        config: config_echo(cfg, seed),
    };
    for (name, run) in [("trajectory_baseline.csv", &baseline), ("trajectory_candidate.csv", &candidate)] {
        let file = out.join(name);
        write_run_csv(&file, run, &scenario.path)?;
        outcome.files.push(file);
    }
    let report_file = out.join("compare.json");
    write_text(&report_file, &to_json(&report))?;
    let plot_file = out.join("plot.gp");
    write_text(&plot_file, &gnuplot_script(&["trajectory_baseline.csv".into(), "trajectory_candidate.csv".into()]))?;
    outcome.files.extend([report_file, plot_file]);
    Ok(outcome)
}
