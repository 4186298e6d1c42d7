use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Fixed,
    Adaptive,
}

impl ModeName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeName::Fixed => "fixed",
            ModeName::Adaptive => "adaptive",
        }
    }
}

impl std::str::FromStr for ModeName {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fixed" => Ok(ModeName::Fixed),
            "adaptive" => Ok(ModeName::Adaptive),
            other => Err(HarnessError::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// One closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mode: ModeName,
    /// Multiplies every adaptive `P0`.
    pub alpha_p: f64,
    /// Multiplies every adaptive `sigma`.
    pub alpha_n: f64,
    /// Multiplies the plant inertia only; the controller keeps nominal values.
    pub inertia_scale: f64,
    /// Mission file; the built-in square circuit when absent.
    pub mission: Option<PathBuf>,
    pub t_max: f64,
    pub dt_sim: f64,
    pub out: PathBuf,
    /// Keep every n-th simulation step in the telemetry.
    pub decimation: u64,
    /// Hover-thrust feedforward; defaults to on for the fixed baseline and
    /// off for the adaptive autopilot.
    pub gravity_ff: Option<bool>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: ModeName::Adaptive,
            alpha_p: 1.0,
            alpha_n: 1.0,
            inertia_scale: 1.0,
            mission: None,
            t_max: 200.0,
            dt_sim: 0.001,
            out: PathBuf::from("out"),
            decimation: 10,
            gravity_ff: None,
        }
    }
}

impl ScenarioConfig {
    pub fn fixed() -> Self {
        Self {
            mode: ModeName::Fixed,
            ..Self::default()
        }
    }

    pub fn adaptive() -> Self {
        Self::default()
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn gravity_ff_enabled(&self) -> bool {
        self.gravity_ff.unwrap_or(self.mode == ModeName::Fixed)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha_p) {
            return Err(HarnessError::Config("alpha_p must be positive".into()));
        }
        if !positive(self.alpha_n) {
            return Err(HarnessError::Config("alpha_n must be positive".into()));
        }
        if !positive(self.inertia_scale) {
            return Err(HarnessError::Config("inertia_scale must be positive".into()));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(HarnessError::Config("t_max must be non-negative".into()));
        }
        if !positive(self.dt_sim) {
            return Err(HarnessError::Config("dt_sim must be positive".into()));
        }
        let ratio = 0.004 / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(HarnessError::Config(
                "dt_sim must divide 0.004 s exactly".into(),
            ));
        }
        if self.decimation == 0 {
            return Err(HarnessError::Config("decimation must be at least 1".into()));
        }
        Ok(())
    }
}
