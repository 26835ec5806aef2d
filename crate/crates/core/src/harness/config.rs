//! Experiment configuration, loaded from TOML.
//!
//! ```toml
//! [path]              # bell parameters, or `file = "path.csv"`
//! n_points = 200
//! dt = 0.1
//!
//! [weights]
//! q = [10, 10, 1, 0.1, 0.1, 0, 0]
//! r = [1, 1]
//!
//! [solver]
//! max_iterations = 100
//!
//! [controller]
//! kind = "both"
//!
//! [perturbation]
//! offset = [0.1, 0, 0, 0, 0, 0, 0]
//! seed = 7
//! ```
//!
//! Every field has a default, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cost::{ControlPenalty, CostWeights, TrackingCost};
use crate::dynamics::{StateVector, CONTROL_DIM, STATE_DIM};
use crate::ilqr::SolverOptions;
use crate::path::{generate_bell, BellPathParams, ReferencePath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    /// Path CSV to load instead of generating the bell.
    pub file: Option<PathBuf>,
    pub length: f64,
    pub height: f64,
    pub center: f64,
    pub width_sigma: f64,
    pub incline: f64,
    pub n_points: usize,
    pub dt: f64,
    /// Speed used for the point-spacing warning.
    pub v_max: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        let bell = BellPathParams::<f64>::default();
        Self {
            file: None,
            length: bell.length,
            height: bell.height,
            center: bell.center,
            width_sigma: bell.width_sigma,
            incline: bell.incline,
            n_points: bell.n_points,
            dt: bell.dt,
            v_max: 2.0,
        }
    }
}

impl PathSection {
    pub fn bell(&self) -> BellPathParams<f64> {
        BellPathParams {
            length: self.length,
            height: self.height,
            center: self.center,
            width_sigma: self.width_sigma,
            incline: self.incline,
            n_points: self.n_points,
            dt: self.dt,
        }
    }

    pub fn set_bell(&mut self, bell: &BellPathParams<f64>) {
        self.length = bell.length;
        self.height = bell.height;
        self.center = bell.center;
        self.width_sigma = bell.width_sigma;
        self.incline = bell.incline;
        self.n_points = bell.n_points;
        self.dt = bell.dt;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    /// Diagonal of `Q`.
    pub q: [f64; STATE_DIM],
    /// Diagonal of `R`.
    pub r: [f64; CONTROL_DIM],
    /// Diagonal of `Q_f`; defaults to `10 q`.
    pub qf: Option<[f64; STATE_DIM]>,
    pub control_penalty: ControlPenalty,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            q: CostWeights::<f64, STATE_DIM, CONTROL_DIM>::DEFAULT_Q,
            r: CostWeights::<f64, STATE_DIM, CONTROL_DIM>::DEFAULT_R,
            qf: None,
            control_penalty: ControlPenalty::Deviation,
        }
    }
}

impl WeightsSection {
    pub fn qf_diagonal(&self) -> [f64; STATE_DIM] {
        self.qf.unwrap_or(self.q.map(|w| w * CostWeights::<f64, STATE_DIM, CONTROL_DIM>::DEFAULT_QF_SCALE))
    }

    pub fn cost(&self) -> crate::Result<TrackingCost<f64, STATE_DIM, CONTROL_DIM>> {
        let weights = CostWeights::diagonal(self.q, self.r, self.qf_diagonal())?;
        Ok(TrackingCost::diff_drive(weights).with_control_penalty(self.control_penalty))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Lqr,
    Ilqr,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lqr => "lqr",
            Self::Ilqr => "ilqr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerChoice {
    Lqr,
    Ilqr,
    Both,
}

impl ControllerChoice {
    pub fn kinds(self) -> Vec<ControllerKind> {
        match self {
            Self::Lqr => vec![ControllerKind::Lqr],
            Self::Ilqr => vec![ControllerKind::Ilqr],
            Self::Both => vec![ControllerKind::Lqr, ControllerKind::Ilqr],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerChoice,
    /// Feedback updates per reference interval for the LQR tracker.
    pub lqr_substeps: usize,
    /// `compare` reports `candidate - baseline`.
    pub baseline: ControllerKind,
    pub candidate: ControllerKind,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            kind: ControllerChoice::Both,
            lqr_substeps: 1,
            baseline: ControllerKind::Lqr,
            candidate: ControllerKind::Ilqr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSection {
    /// Added to the nominal initial state.
    pub offset: [f64; STATE_DIM],
    /// Half-widths of a uniform random offset drawn per component from `seed`.
    pub random_scale: [f64; STATE_DIM],
    pub seed: u64,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        Self { offset: [0.0; STATE_DIM], random_scale: [0.0; STATE_DIM], seed: 0 }
    }
}

impl PerturbationSection {
    /// Deterministic initial-state offset for `seed`.
    pub fn sample(&self, seed: u64) -> StateVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StateVector::from_fn(|i, _| {
            let scale = self.random_scale[i];
            let noise = if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
            self.offset[i] + noise
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub path: PathSection,
    pub weights: WeightsSection,
    pub solver: SolverOptions<f64>,
    pub controller: ControllerSection,
    pub perturbation: PerturbationSection,
}

fn config_error(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(config_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file. Relative `path.file` entries resolve against
    /// the config file's directory.
    pub fn load(file: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(file).map_err(|e| HarnessError::Io(format!("{}: {e}", file.display())))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", file.display())))?;
        if let (Some(p), Some(dir)) = (cfg.path.file.as_mut(), file.parent()) {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every precondition that can be checked without touching the filesystem.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.path.file.is_none() {
            self.path.bell().validate().map_err(config_error)?;
        } else if !(self.path.dt > 0.0 && self.path.dt.is_finite()) {
            return Err(config_error("path.dt must be finite and > 0"));
        }
        if !(self.path.v_max > 0.0) {
            return Err(config_error("path.v_max must be > 0"));
        }
        self.weights.cost().map_err(config_error)?;
        self.solver.validate().map_err(config_error)?;
        if self.controller.lqr_substeps == 0 {
            return Err(config_error("controller.lqr_substeps must be >= 1"));
        }
        let p = &self.perturbation;
        if !p.offset.iter().chain(&p.random_scale).all(|v| v.is_finite()) || p.random_scale.iter().any(|s| *s < 0.0) {
            return Err(config_error("perturbation values must be finite, scales >= 0"));
        }
        Ok(())
    }

    /// The reference path: loaded from `path.file` or generated.
    pub fn reference_path(&self) -> Result<ReferencePath<f64>, HarnessError> {
        match &self.path.file {
            Some(file) => {
                let f = std::fs::File::open(file).map_err(|e| HarnessError::Io(format!("{}: {e}", file.display())))?;
                ReferencePath::read_csv(std::io::BufReader::new(f), self.path.dt).map_err(HarnessError::from)
            }
            None => generate_bell(&self.path.bell()).map_err(config_error),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.path.n_points, 200);
        assert_eq!(cfg.weights.qf_diagonal()[0], 100.0);
        assert_eq!(cfg.controller.kind, ControllerChoice::Both);
    }

    #[test]
    fn sections_parse() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            [path]
            n_points = 50
            height = 1.0
            [weights]
            q = [1, 1, 1, 0, 0, 0, 0]
            r = [2, 2]
            control_penalty = "absolute"
            [solver]
            max_iterations = 20
            alpha_schedule = [1.0, 0.3]
            [controller]
            kind = "ilqr"
            lqr_substeps = 4
            [perturbation]
            offset = [0.1, 0, 0, 0, 0, 0, 0]
            seed = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.path.n_points, 50);
        assert_eq!(cfg.weights.control_penalty, ControlPenalty::Absolute);
        assert_eq!(cfg.solver.max_iterations, 20);
        assert_eq!(cfg.solver.mu_factor, 10.0);
        assert_eq!(cfg.controller.kind, ControllerChoice::Ilqr);
        assert_eq!(cfg.perturbation.seed, 3);
        assert_eq!(ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            "[path]\nn_points = 1",
            "[path]\nbogus = 1",
            "[weights]\nr = [0, 1]",
            "[weights]\nq = [1, 1, 1]",
            "[solver]\nalpha_schedule = [0.5]",
            "[controller]\nkind = \"mpc\"",
            "[controller]\nlqr_substeps = 0",
            "[perturbation]\nrandom_scale = [-1, 0, 0, 0, 0, 0, 0]",
            "not toml at all [",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn perturbation_sampling_is_seeded() {
        let p = PerturbationSection { random_scale: [0.1; STATE_DIM], offset: [1.0; STATE_DIM], seed: 0 };
        assert_eq!(p.sample(42), p.sample(42));
        assert_ne!(p.sample(42), p.sample(43));
        assert!(p.sample(42).iter().all(|v| (0.9..=1.1).contains(v)));
        assert_eq!(PerturbationSection::default().sample(9), StateVector::zeros());
    }
}
