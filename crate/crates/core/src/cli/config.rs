use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::functions::TestFunction;
use crate::geometry::{Domain, DomainSpec, ExhaustionLevel};
use crate::limits::{validate_grid, FitModel, SweepSpec, DEFAULT_S_GRID, DEFAULT_TAIL};
use crate::seminorm::{Budgets, EnergyKind, SeminormParams};
use crate::{Error, Result};

fn default_grid() -> Vec<f64> {
    DEFAULT_S_GRID.to_vec()
}

fn default_kinds() -> Vec<EnergyKind> {
    vec![EnergyKind::Truncated]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_tail() -> usize {
    DEFAULT_TAIL
}

/// One experiment, read from a JSON file. Unknown fields are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub function: TestFunction,
    pub p: f64,
    pub tau: f64,
    #[serde(default = "default_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EnergyKind>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub emit_plots: bool,
    /// Margin `alpha_j` of the exhaustion level used by `verify`.
    #[serde(default)]
    pub exhaustion_margin: Option<f64>,
    /// Relative tolerance of the theorem verdict.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub fit: FitModel,
    #[serde(default = "default_tail")]
    pub tail: usize,
}

/// A validated configuration with its domain built.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub domain: Domain,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::param(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::param(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every precondition before any computation.
    pub fn validate(self) -> Result<Experiment> {
        let domain = Domain::from_spec(&self.domain)?;
        self.function.validate_for(&domain)?;
        SeminormParams::new(0.5, self.p, self.tau)?;
        validate_grid(&self.s_grid)?;
        if let Some(m) = self.exhaustion_margin {
            domain.exhaustion(ExhaustionLevel::new(1, m)?)?;
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param(format!("tolerance {t} must be positive")));
            }
        }
        let exp = Experiment { config: self, domain };
        exp.sweep_spec(exp.config.kinds.clone()).validate()?;
        Ok(exp)
    }
}

impl Experiment {
    pub fn sweep_spec(&self, kinds: Vec<EnergyKind>) -> SweepSpec<'_> {
        let c = &self.config;
        let mut spec = SweepSpec::new(&c.function, &self.domain, c.p, c.tau);
        spec.s_grid = c.s_grid.clone();
        spec.kinds = kinds;
        spec.budgets = c.budgets;
        spec.seed = c.seed;
        spec.fit = c.fit;
        spec.tail = c.tail;
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"kind": "box", "corners": [[0, 0], [1, 1]]},
        "function": {"kind": "linear", "coefficients": [0, 1]},
        "p": 2, "tau": 0.5
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.s_grid, DEFAULT_S_GRID.to_vec());
        assert_eq!(c.budgets, Budgets::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        c.exhaustion_margin = Some(0.25);
        c.kinds = vec![EnergyKind::Truncated, EnergyKind::FarPart];
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = MINIMAL.replace("\"tau\": 0.5", "\"tau\": 0.5, \"colour\": 1");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = MINIMAL.replace("\"p\": 2", "\"p\": 2, \"budgets\": {\"outer\": 4, \"inner\": 4, \"pairs\": 8, \"x\": 1}");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let bad_tau = MINIMAL.replace("\"tau\": 0.5", "\"tau\": 1.5");
        assert!(ExperimentConfig::from_json(&bad_tau).unwrap().validate().is_err());
        let bad_grid = MINIMAL.replace("\"p\": 2", "\"p\": 2, \"s_grid\": [0.9, 0.8, 0.95]");
        assert!(ExperimentConfig::from_json(&bad_grid).unwrap().validate().is_err());
        let bad_f = MINIMAL.replace("[0, 1]}", "[0, 1, 2]}");
        assert!(ExperimentConfig::from_json(&bad_f).unwrap().validate().is_err());
    }
}
