//! Experiment configuration: a single canonical JSON format driving every
//! CLI mode. Runs are deterministic given the config and seed.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::checks::Profile;
use crate::constructions::FamilyId;
use crate::domain::Domain;
use crate::dynamics::{FlowConfig, StepSchedule, DEFAULT_DISP_TOL, DEFAULT_GRAD_TOL};
use crate::error::{Error, Result};
use crate::network::ParamVector;
use crate::target::TargetFunction;
use crate::verification::DEFAULT_CRIT_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SimulateGf,
    SimulateGd,
    Sequence,
    Critical,
    Bounds,
    Discrete,
    VerifyAll,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "simulate-gf" => Ok(Mode::SimulateGf),
            "simulate-gd" => Ok(Mode::SimulateGd),
            "sequence" => Ok(Mode::Sequence),
            "critical" => Ok(Mode::Critical),
            "bounds" => Ok(Mode::Bounds),
            "discrete" => Ok(Mode::Discrete),
            "verify-all" => Ok(Mode::VerifyAll),
            _ => Err(Error::InvalidParameter(format!("unknown mode '{s}'"))),
        }
    }
}

/// Initial parameter choice for the simulation modes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    /// Explicit parameter vector.
    Theta { h: usize, values: Vec<f64> },
    /// A family member at index `n`.
    Family { family: String, n: u32 },
    /// Componentwise uniform draw on `[-scale, scale]` from the run seed.
    Random { scale: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdSpec {
    pub schedule: StepSchedule,
    pub n_steps: usize,
}

impl Default for GdSpec {
    fn default() -> Self {
        Self { schedule: StepSchedule::armijo_default(), n_steps: 1000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub family: String,
    #[serde(default)]
    pub n_list: Option<Vec<u32>>,
    #[serde(default)]
    pub h: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalSpec {
    pub h: usize,
    pub n_seeds: usize,
    #[serde(default = "default_crit_tol")]
    pub crit_tol: f64,
}

fn default_crit_tol() -> f64 {
    DEFAULT_CRIT_TOL
}

impl Default for CriticalSpec {
    fn default() -> Self {
        Self { h: 2, n_seeds: 200, crit_tol: DEFAULT_CRIT_TOL }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteSpec {
    /// Path to an `x,y` CSV file.
    #[serde(default)]
    pub data_file: Option<String>,
    /// Inline dataset, used when no file is given.
    #[serde(default)]
    pub xs: Option<Vec<f64>>,
    #[serde(default)]
    pub ys: Option<Vec<f64>>,
    /// Sequence index for the escaping construction.
    #[serde(default = "default_discrete_n")]
    pub n: u32,
    #[serde(default = "default_fit_tol")]
    pub fit_tol: f64,
}

fn default_discrete_n() -> u32 {
    200
}

fn default_fit_tol() -> f64 {
    1e-6
}

/// Verdict thresholds for trajectory classification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyTolerances {
    pub eps_floor: f64,
    pub grad_tol: f64,
    pub disp_tol: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self { eps_floor: 1.0 / 864.0, grad_tol: DEFAULT_GRAD_TOL, disp_tol: DEFAULT_DISP_TOL }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must agree with the CLI mode when present.
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default = "default_domain")]
    pub domain: (f64, f64),
    #[serde(default = "default_h")]
    pub h: usize,
    #[serde(default)]
    pub init: Option<InitSpec>,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub gd: Option<GdSpec>,
    #[serde(default)]
    pub sequence: Option<SequenceSpec>,
    #[serde(default)]
    pub critical: Option<CriticalSpec>,
    #[serde(default)]
    pub discrete: Option<DiscreteSpec>,
    #[serde(default)]
    pub classify: Option<ClassifyTolerances>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub profile: Option<Profile>,
    /// Include the parameter columns in trajectory CSVs.
    #[serde(default)]
    pub include_theta: bool,
}

fn default_kind() -> String {
    "relu".into()
}

fn default_target() -> String {
    "indicator".into()
}

fn default_domain() -> (f64, f64) {
    (0.0, 1.0)
}

fn default_h() -> usize {
    2
}

fn default_seed() -> u64 {
    42
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config parse error: {e}")))
    }

    pub fn kind(&self) -> Result<ActivationKind> {
        ActivationKind::parse(&self.kind)
    }

    pub fn target(&self) -> Result<TargetFunction> {
        TargetFunction::parse(&self.target)
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.domain.0, self.domain.1)
    }

    /// Resolve the initial parameters for simulation modes.
    pub fn initial_theta(&self, rng: &mut impl rand::Rng) -> Result<ParamVector> {
        let domain = self.domain()?;
        match self.init.as_ref() {
            None => Ok(ParamVector::zeros(self.h)),
            Some(InitSpec::Theta { h, values }) => ParamVector::new(*h, values.clone()),
            Some(InitSpec::Family { family, n }) => {
                let id = FamilyId::parse(family)?;
                crate::constructions::sequence_theta(id, *n, domain, self.h.max(id.min_h()))
            }
            Some(InitSpec::Random { scale }) => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidParameter("random init scale must be positive".into()));
                }
                let dim = 3 * self.h + 1;
                let values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..*scale)).collect();
                ParamVector::new(self.h, values)
            }
        }
    }
}
