//! Scenario configuration files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::entropy::{DboundConstants, EntropyError, ShockDatum};
use crate::flux::{FluxError, FluxModel};
use crate::fronttrack::{NonEntropicPolicy, RunConfig, DEFAULT_EVENT_CAP};
use crate::profile::{Profile, ProfileError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Flux(#[from] FluxError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Shock(#[from] EntropyError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpOverride {
    pub index: usize,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub admissibility: Vec<JumpOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    pub u_ell: f64,
    pub u_r: f64,
    /// Whether the initial data carries this shock as a jump at `x = 0`.
    #[serde(default = "yes")]
    pub at_origin: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(rename = "C_thm", default = "default_c_thm")]
    pub c_thm: f64,
    #[serde(default = "default_c_drift")]
    pub c_drift: f64,
    #[serde(rename = "C1", default = "default_c1")]
    pub c1: f64,
    #[serde(rename = "C2", default = "default_c2")]
    pub c2: f64,
    #[serde(default = "default_drift_exponent")]
    pub drift_exponent: f64,
}

fn default_c_thm() -> f64 {
    68.0
}
fn default_c_drift() -> f64 {
    1.0 / 24.0
}
fn default_c1() -> f64 {
    DboundConstants::default().c1
}
fn default_c2() -> f64 {
    DboundConstants::default().c2
}
fn default_drift_exponent() -> f64 {
    3.0
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_thm: default_c_thm(),
            c_drift: default_c_drift(),
            c1: default_c1(),
            c2: default_c2(),
            drift_exponent: default_drift_exponent(),
        }
    }
}

impl Constants {
    pub fn dbound(&self) -> DboundConstants {
        DboundConstants {
            c1: self.c1,
            c2: self.c2,
        }
    }
}

/// Regions whose entropy-production masses are reported. Missing spatial
/// bounds of a rectangle mean an unbounded side; a cone without `S` uses the
/// scenario's speed bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RegionSpec {
    Rect {
        t0: f64,
        t1: f64,
        #[serde(default)]
        x0: Option<f64>,
        #[serde(default)]
        x1: Option<f64>,
    },
    Cone {
        #[serde(rename = "R")]
        r: f64,
        #[serde(rename = "S", default)]
        s: Option<f64>,
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub flux: FluxSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub policy: NonEntropicPolicy,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub shock: ShockSpec,
    #[serde(default = "default_windows")]
    pub windows: Vec<f64>,
    #[serde(default)]
    pub sample_times: Option<Vec<f64>>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub event_cap: Option<usize>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_delta() -> f64 {
    0.01
}

fn default_windows() -> Vec<f64> {
    vec![2.0, 5.0, 10.0]
}

/// A checked configuration, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub model: FluxModel,
    pub initial: Profile,
    pub run: RunConfig,
    pub shock: ShockDatum,
    pub shock_at_origin: bool,
    pub windows: Vec<f64>,
    pub sample_times: Option<Vec<f64>>,
    pub constants: Constants,
    pub regions: Vec<RegionSpec>,
    pub config_sha256: String,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        let model = FluxModel::from_name(
            &self.flux.name,
            self.flux.params.iter().map(|(k, v)| (k.as_str(), *v)),
        )?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return invalid(format!("T must be positive and finite (got {})", self.t_final));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid(format!("delta must be positive and finite (got {})", self.delta));
        }
        let shock = ShockDatum::new(self.shock.u_ell, self.shock.u_r)?;
        let (initial, map) = Profile::with_index_map(self.initial.breakpoints.clone(), self.initial.values.clone())?;

        let mut run = RunConfig::new(self.t_final).policy(self.policy).delta(self.delta);
        run.event_cap = self.event_cap.unwrap_or(DEFAULT_EVENT_CAP);
        for o in &self.initial.admissibility {
            let Some(slot) = map.get(o.index) else {
                return invalid(format!("admissibility index {} has no matching breakpoint", o.index));
            };
            if let (Some(k), false) = (slot, o.admissible) {
                run.inadmissible.insert(*k);
            }
        }

        if self.shock.at_origin {
            let k = initial.breakpoints().iter().position(|&x| x == 0.0);
            let ok = k.is_some_and(|k| {
                initial.values()[k] == shock.u_ell && initial.values()[k + 1] == shock.u_r
            });
            if !ok {
                return invalid("initial data has no jump (u_ell, u_r) at x = 0; set shock.at_origin = false");
            }
        }
        if self.windows.is_empty() || self.windows.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return invalid("windows must be a non-empty list of positive radii");
        }
        if let Some(ts) = &self.sample_times {
            if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0 && *t <= self.t_final)) {
                return invalid("sample_times must be a non-empty list within [0, T]");
            }
        }
        let c = &self.constants;
        for (name, v) in [
            ("C_thm", c.c_thm),
            ("c_drift", c.c_drift),
            ("C1", c.c1),
            ("C2", c.c2),
            ("drift_exponent", c.drift_exponent),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("constant {name} must be finite and non-negative"));
            }
        }
        for r in &self.regions {
            let ok = match r {
                RegionSpec::Rect { t0, t1, x0, x1 } => {
                    t1 >= t0 && x0.unwrap_or(f64::NEG_INFINITY) <= x1.unwrap_or(f64::INFINITY)
                }
                RegionSpec::Cone { r, s, t } => *r > 0.0 && *t >= 0.0 && s.is_none_or(|s| s >= 0.0),
            };
            if !ok {
                return invalid(format!("malformed region {r:?}"));
            }
        }

        Ok(Scenario {
            id: self.id.clone(),
            model,
            initial,
            run,
            shock,
            shock_at_origin: self.shock.at_origin,
            windows: self.windows.clone(),
            sample_times: self.sample_times.clone(),
            constants: self.constants,
            regions: self.regions.clone(),
            config_sha256: self.sha256(),
        })
    }
}
