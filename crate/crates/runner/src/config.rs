//! Run configuration (TOML) and its validation.

use std::path::Path;

use chainqed_core::dynamics::{IntegratorSettings, ProductState, PropagateSettings};
use chainqed_core::hamiltonian::SystemParams;
use chainqed_core::hilbert::{SpaceSpec, DEFAULT_MAX_DIM};
use chainqed_core::meanfield::FieldTreatment;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Propagate,
    VerifyEom,
    VerifyCompact,
    Meanfield,
    Compare,
    Sweep,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Propagate => "propagate",
            Task::VerifyEom => "verify_eom",
            Task::VerifyCompact => "verify_compact",
            Task::Meanfield => "meanfield",
            Task::Compare => "compare",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub n_sites: usize,
    #[serde(default)]
    pub field_cutoffs: Vec<usize>,
    #[serde(default)]
    pub phonon_cutoffs: Vec<usize>,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    DEFAULT_MAX_DIM
}

impl SpaceConfig {
    pub fn spec(&self) -> SpaceSpec {
        let mut spec = SpaceSpec::new(self.n_sites, &self.field_cutoffs, &self.phonon_cutoffs);
        spec.max_dim = self.max_dim;
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationConfig {
    pub t_end: f64,
    pub dt_out: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            dt_out: 0.1,
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

impl PropagationConfig {
    pub fn settings(&self) -> PropagateSettings {
        PropagateSettings {
            t_end: self.t_end,
            dt_out: self.dt_out,
            integrator: IntegratorSettings {
                rtol: self.rtol,
                atol: self.atol,
                ..Default::default()
            },
            record_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    #[serde(default)]
    pub field: FieldTreatment,
    /// Also run the regime diagnostics.
    #[serde(default)]
    pub diagnostics: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    #[serde(default = "default_eom_tol")]
    pub eom_tolerance: f64,
    #[serde(default = "default_compact_tol")]
    pub compact_tolerance: f64,
    /// Residual the identity-metric control must exceed.
    #[serde(default = "default_control")]
    pub control_threshold: f64,
    /// Extra seeded random parameter draws for the identity checks.
    #[serde(default)]
    pub random_draws: usize,
    #[serde(default = "default_check_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_norm_tol")]
    pub norm_tolerance: f64,
    #[serde(default = "default_invariant_tol")]
    pub invariant_tolerance: f64,
    /// `max |sᶻ_MF − ⟨σᶻ⟩|` allowed by the comparison task.
    #[serde(default = "default_compare_tol")]
    pub compare_tolerance: f64,
}

fn default_eom_tol() -> f64 {
    1e-11
}
fn default_compact_tol() -> f64 {
    1e-10
}
fn default_control() -> f64 {
    1e-3
}
fn default_check_times() -> Vec<f64> {
    vec![0.0]
}
fn default_norm_tol() -> f64 {
    1e-6
}
fn default_invariant_tol() -> f64 {
    1e-8
}
fn default_compare_tol() -> f64 {
    0.05
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            eom_tolerance: default_eom_tol(),
            compact_tolerance: default_compact_tol(),
            control_threshold: default_control(),
            random_draws: 0,
            times: default_check_times(),
            norm_tolerance: default_norm_tol(),
            invariant_tolerance: default_invariant_tol(),
            compare_tolerance: default_compare_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    ExchangeJ,
    FieldAmplitude { mode: usize },
    FieldOmega { mode: usize },
    PhononLambda { mode: usize },
    PhononNu { mode: usize },
    Dipole { site: usize },
}

impl SweepParameter {
    pub fn label(&self) -> String {
        match self {
            SweepParameter::ExchangeJ => "exchange_j".into(),
            SweepParameter::FieldAmplitude { mode } => format!("field_amplitude[{mode}]"),
            SweepParameter::FieldOmega { mode } => format!("field_omega[{mode}]"),
            SweepParameter::PhononLambda { mode } => format!("phonon_lambda[{mode}]"),
            SweepParameter::PhononNu { mode } => format!("phonon_nu[{mode}]"),
            SweepParameter::Dipole { site } => format!("dipole[{site}]"),
        }
    }

    fn check(&self, params: &SystemParams) -> Option<String> {
        let (idx, len, what) = match *self {
            SweepParameter::ExchangeJ => return None,
            SweepParameter::FieldAmplitude { mode } | SweepParameter::FieldOmega { mode } => {
                (mode, params.field_modes.len(), "field mode")
            }
            SweepParameter::PhononLambda { mode } | SweepParameter::PhononNu { mode } => {
                (mode, params.phonon_modes.len(), "phonon mode")
            }
            SweepParameter::Dipole { site } => (site, params.n_sites(), "site"),
        };
        (idx >= len).then(|| format!("sweep over {}: {what} {idx} does not exist", self.label()))
    }

    pub fn apply(&self, params: &mut SystemParams, value: f64) {
        match *self {
            SweepParameter::ExchangeJ => params.exchange_j = value,
            SweepParameter::FieldAmplitude { mode } => params.field_modes[mode].amplitude = value,
            SweepParameter::FieldOmega { mode } => params.field_modes[mode].omega = value,
            SweepParameter::PhononLambda { mode } => params.phonon_modes[mode].lambda = value,
            SweepParameter::PhononNu { mode } => params.phonon_modes[mode].nu = value,
            SweepParameter::Dipole { site } => params.dipole[site] = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// `[start, stop, count]`, endpoints included.
    #[serde(default)]
    pub linspace: Option<[f64; 3]>,
}

impl SweepAxis {
    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        match self.linspace {
            Some([a, b, n]) => {
                let n = n as usize;
                if n == 1 {
                    vec![a]
                } else {
                    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
                }
            }
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base_task: Task,
    pub axes: Vec<SweepAxis>,
}

impl SweepConfig {
    /// Cartesian product of the axis values, first axis slowest.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            let pts = axis.points();
            acc.iter()
                .flat_map(|prefix| {
                    pts.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub seed: u64,
    pub space: SpaceConfig,
    pub params: SystemParams,
    #[serde(default)]
    pub initial: Option<ProductState>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default)]
    pub meanfield: MeanFieldConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok((Self::from_toml_str(&text)?, text))
    }

    /// Initial state, defaulting to every site in the lower level and every
    /// mode in vacuum.
    pub fn initial_state(&self) -> ProductState {
        self.initial.clone().unwrap_or_else(|| {
            ProductState::ground(
                self.space.n_sites,
                self.space.field_cutoffs.len(),
                self.space.phonon_cutoffs.len(),
            )
        })
    }

    /// A prescribed field on a space without quantized field modes: exact
    /// runs then use the classical-drive Hamiltonian.
    pub fn classical_drive(&self) -> bool {
        matches!(self.meanfield.field, FieldTreatment::Prescribed(_)) && self.space.field_cutoffs.is_empty()
    }

    /// Validates everything the given task needs, collecting every problem.
    pub fn validate(&self, task: Task) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let spec = self.space.spec();
        if self.space.n_sites == 0 {
            errs.push("space.n_sites must be at least 1".to_string());
        }
        if self.space.field_cutoffs.iter().chain(&self.space.phonon_cutoffs).any(|&c| c == 0) {
            errs.push("mode cutoffs must be at least 1".to_string());
        }
        if spec.dimension() > self.space.max_dim as u128 {
            errs.push(format!(
                "Hilbert-space dimension {} exceeds max_dim {}",
                spec.dimension(),
                self.space.max_dim
            ));
        }
        let sweep_task = match (task, &self.sweep) {
            (Task::Sweep, Some(s)) => Some(s.base_task),
            _ => None,
        };
        let effective = sweep_task.unwrap_or(task);
        // mean-field and classical-drive runs do not need a quantized field
        let quantized = effective != Task::Meanfield && !self.classical_drive();
        let n_field = quantized.then_some(self.space.field_cutoffs.len());
        if let Err(e) = self.params.check(self.space.n_sites, n_field, self.space.phonon_cutoffs.len()) {
            errs.extend(e.0);
        }
        if let Some(init) = &self.initial {
            if init.sites.len() != self.space.n_sites {
                errs.push(format!(
                    "initial.sites has {} entries, expected {}",
                    init.sites.len(),
                    self.space.n_sites
                ));
            }
            if init.field.len() != self.space.field_cutoffs.len() && quantized {
                errs.push(format!(
                    "initial.field has {} entries, expected {}",
                    init.field.len(),
                    self.space.field_cutoffs.len()
                ));
            }
            if init.phonons.len() != self.space.phonon_cutoffs.len() {
                errs.push(format!(
                    "initial.phonons has {} entries, expected {}",
                    init.phonons.len(),
                    self.space.phonon_cutoffs.len()
                ));
            }
        }
        if matches!(effective, Task::Propagate | Task::Meanfield | Task::Compare) {
            let p = &self.propagation;
            if !(p.t_end >= 0.0 && p.t_end.is_finite()) {
                errs.push("propagation.t_end must be finite and non-negative".into());
            }
            if !(p.dt_out > 0.0) {
                errs.push("propagation.dt_out must be positive".into());
            }
            if !(p.rtol > 0.0 && p.atol > 0.0) {
                errs.push("propagation tolerances must be positive".into());
            }
        }
        if let FieldTreatment::Prescribed(a) = &self.meanfield.field {
            if a.len() != self.params.field_modes.len() {
                errs.push(format!(
                    "meanfield.field has {} amplitudes for {} field modes",
                    a.len(),
                    self.params.field_modes.len()
                ));
            }
        }
        if self.checks.times.is_empty() {
            errs.push("checks.times must not be empty".into());
        }
        match (task, &self.sweep) {
            (Task::Sweep, None) => errs.push("sweep task needs a [sweep] section".into()),
            (Task::Sweep, Some(s)) => {
                if s.base_task == Task::Sweep {
                    errs.push("sweep.base_task cannot be sweep".into());
                }
                if s.axes.is_empty() {
                    errs.push("sweep.axes must not be empty".into());
                }
                for axis in &s.axes {
                    if let Some(e) = axis.parameter.check(&self.params) {
                        errs.push(e);
                    }
                    match (&axis.values, axis.linspace) {
                        (Some(_), Some(_)) => errs.push(format!(
                            "sweep over {}: give either values or linspace",
                            axis.parameter.label()
                        )),
                        (None, None) => errs.push(format!(
                            "sweep over {}: values or linspace required",
                            axis.parameter.label()
                        )),
                        (Some(v), None) if v.is_empty() => {
                            errs.push(format!("sweep over {}: no values", axis.parameter.label()))
                        }
                        (None, Some([_, _, n])) if !(n >= 1.0 && n.fract() == 0.0) => errs.push(format!(
                            "sweep over {}: linspace count must be a positive integer",
                            axis.parameter.label()
                        )),
                        _ => {}
                    }
                }
            }
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

/// Hex SHA-256 of the raw configuration text.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
task = "propagate"
seed = 3

[space]
n_sites = 2
field_cutoffs = [4]

[params]
site_energies = [[0.0, 1.0], [0.0, 1.0]]
exchange_j = 0.02
dipole = [1.0, 1.0]
site_positions = [0.0, 1.0]

[[params.field_modes]]
omega = 1.0
amplitude = 0.02
polarization_overlap = [1.0, 1.0]

[initial]
sites = ["upper", { angles = { theta = 1.0, phi = 0.0 } }]
field = [{ coherent = { re = 1.0, im = 0.0 } }]
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = Config::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.task, Some(Task::Propagate));
        assert_eq!(cfg.params.field_modes[0].wavevector, 0.0);
        cfg.validate(Task::Propagate).unwrap();
    }

    #[test]
    fn collects_all_errors() {
        let text = BASIC
            .replace("dipole = [1.0, 1.0]", "dipole = [1.0]")
            .replace("[[0.0, 1.0], [0.0, 1.0]]", "[[0.0, 1.0], [1.0, 0.5]]")
            .replace("field_cutoffs = [4]", "field_cutoffs = [4, 2]");
        let cfg = Config::from_toml_str(&text).unwrap();
        let ConfigError::Invalid(errs) = cfg.validate(Task::Propagate).unwrap_err() else {
            panic!("expected validation errors")
        };
        assert!(errs.len() >= 4, "{errs:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = BASIC.replace("seed = 3", "seed = 3\nsede = 4");
        assert!(matches!(Config::from_toml_str(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn sweep_grid() {
        let s = SweepConfig {
            base_task: Task::Propagate,
            axes: vec![
                SweepAxis {
                    parameter: SweepParameter::ExchangeJ,
                    values: Some(vec![0.0, 0.1]),
                    linspace: None,
                },
                SweepAxis {
                    parameter: SweepParameter::FieldAmplitude { mode: 0 },
                    values: None,
                    linspace: Some([0.0, 1.0, 3.0]),
                },
            ],
        };
        let g = s.grid();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[1], vec![0.0, 0.5]);
        assert_eq!(g[5], vec![0.1, 1.0]);
    }

    #[test]
    fn sweep_validation() {
        let text = format!(
            "{BASIC}\n[sweep]\nbase_task = \"propagate\"\n[[sweep.axes]]\nparameter = {{ phonon_nu = {{ mode = 0 }} }}\nvalues = [0.1]\n[[sweep.axes]]\nparameter = \"exchange_j\"\nlinspace = [0.0, 1.0, 2.5]\n"
        );
        let cfg = Config::from_toml_str(&text).unwrap();
        let ConfigError::Invalid(errs) = cfg.validate(Task::Sweep).unwrap_err() else {
            panic!()
        };
        assert_eq!(errs.len(), 2, "{errs:?}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("a"), config_hash("a"));
        assert_ne!(config_hash("a"), config_hash("b"));
        assert_eq!(config_hash("").len(), 64);
    }
}
