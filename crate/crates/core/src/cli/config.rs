//! Experiment configuration files.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "experiment": "dynkin",
//!   "master_seed": 20240601,
//!   "scenario": "mm1",
//!   "model": {
//!     "lambda_field": {"kind": "constant", "params": {"value": 0.5}, "declared_sup": 0.5},
//!     "h_field": {"kind": "constant", "params": {"value": 1.0}, "declared_sup": 1.0},
//!     "lambda0": 0.5
//!   },
//!   "params": {"t": 5.0, "replicas": 100000}
//! }
//! ```
//!
//! `experiment` may be omitted when the subcommand names it. Every
//! experiment-specific parameter has a default; the materialized config is
//! echoed into the report and hashed.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynkin::{Functional, TestFunction, TimeTestFunction};
use crate::ergodicity::{Binning, BOOTSTRAP_RESAMPLES};
use crate::model::{ModelSpec, State};
use crate::sampler::Sampler;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Dynkin,
    DynkinTime,
    Lemma1,
    Martingale,
    Conditions,
    Drift,
    Converge,
    Moments,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::Simulate,
        Experiment::Dynkin,
        Experiment::DynkinTime,
        Experiment::Lemma1,
        Experiment::Martingale,
        Experiment::Conditions,
        Experiment::Drift,
        Experiment::Converge,
        Experiment::Moments,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Dynkin => "dynkin",
            Experiment::DynkinTime => "dynkin_time",
            Experiment::Lemma1 => "lemma1",
            Experiment::Martingale => "martingale",
            Experiment::Conditions => "conditions",
            Experiment::Drift => "drift",
            Experiment::Converge => "converge",
            Experiment::Moments => "moments",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let norm = s.replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == norm)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown experiment '{s}'")))
    }
}

fn one_zero() -> State {
    State::new(1, 0.0).expect("valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateParams {
    pub initial: State,
    pub horizon: f64,
    pub sampler: Sampler,
    pub replica: u64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        Self {
            initial: State::EMPTY,
            horizon: 100.0,
            sampler: Sampler::Race,
            replica: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynkinParams {
    pub initial: State,
    pub t: f64,
    pub replicas: u64,
    pub functions: Vec<TestFunction>,
    pub sampler: Sampler,
}

impl Default for DynkinParams {
    fn default() -> Self {
        Self {
            initial: one_zero(),
            t: 5.0,
            replicas: 100_000,
            functions: vec![
                TestFunction::BoundedSmooth1,
                TestFunction::BoundedSmooth2,
                TestFunction::Constant { c: 1.0 },
            ],
            sampler: Sampler::Race,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynkinTimeParams {
    pub initial: State,
    pub t: f64,
    pub replicas: u64,
    pub functions: Vec<TimeTestFunction>,
    pub sampler: Sampler,
}

impl Default for DynkinTimeParams {
    fn default() -> Self {
        let base = DynkinParams::default();
        Self {
            initial: base.initial,
            t: base.t,
            replicas: base.replicas,
            functions: base
                .functions
                .into_iter()
                .map(TimeTestFunction::Discounted)
                .collect(),
            sampler: base.sampler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma1Params {
    pub initial: State,
    pub deltas: Vec<f64>,
    pub replicas: u64,
    pub sampler: Sampler,
    /// Minimum fitted order required of both residual series.
    pub min_order: f64,
}

impl Default for Lemma1Params {
    fn default() -> Self {
        Self {
            initial: one_zero(),
            deltas: vec![0.4, 0.2, 0.1, 0.05],
            replicas: 100_000,
            sampler: Sampler::Race,
            min_order: 1.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MartingaleParams {
    pub function: Functional,
    pub initial: State,
    pub s: f64,
    pub t: f64,
    pub probes: Vec<TestFunction>,
    pub replicas: u64,
}

impl Default for MartingaleParams {
    fn default() -> Self {
        Self {
            function: Functional::Static(TestFunction::Lyapunov { m: 2.0 }),
            initial: one_zero(),
            s: 1.0,
            t: 3.0,
            probes: vec![
                TestFunction::Constant { c: 1.0 },
                TestFunction::BoundedSmooth1,
            ],
            replicas: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditionsParams {
    /// Hazard lower-bound constant; defaults to the `pk_hazard` c0 of the model.
    pub c0: Option<f64>,
    /// Defaults to the model's sup of λ over n > 0.
    pub big_lambda: Option<f64>,
    pub k: f64,
    /// Probe grid for the hazard lower bound: n in 1..=probe_n_max, x in [0, probe_x_max] by probe_x_step.
    pub probe_n_max: u64,
    pub probe_x_max: f64,
    pub probe_x_step: f64,
}

impl Default for ConditionsParams {
    fn default() -> Self {
        Self {
            c0: None,
            big_lambda: None,
            k: 1.1,
            probe_n_max: 10,
            probe_x_max: 20.0,
            probe_x_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftParams {
    pub m: f64,
    pub n_max: u64,
    pub x_max: f64,
    pub x_step: f64,
}

impl Default for DriftParams {
    fn default() -> Self {
        Self {
            m: 2.0,
            n_max: 10,
            x_max: 10.0,
            x_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeParams {
    pub initial_a: State,
    pub initial_b: State,
    pub t_grid: Vec<f64>,
    pub replicas: u64,
    pub binning: Binning,
    pub resamples: u64,
    /// The fitted log-log slope must not exceed this.
    pub max_slope: f64,
}

impl Default for ConvergeParams {
    fn default() -> Self {
        Self {
            initial_a: State::EMPTY,
            initial_b: State::new(5, 2.0).expect("valid"),
            t_grid: vec![10.0, 20.0, 40.0, 80.0, 160.0],
            replicas: 200_000,
            binning: Binning::default(),
            resamples: BOOTSTRAP_RESAMPLES,
            max_slope: -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentsParams {
    pub initials: Vec<State>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub orders: Vec<u32>,
    pub replicas: u64,
}

impl Default for MomentsParams {
    fn default() -> Self {
        Self {
            initials: vec![State::EMPTY, State::new(3, 1.0).expect("valid")],
            horizon: 10.0,
            orders: vec![1, 2, 3],
            replicas: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentParams {
    Simulate(SimulateParams),
    Dynkin(DynkinParams),
    DynkinTime(DynkinTimeParams),
    Lemma1(Lemma1Params),
    Martingale(MartingaleParams),
    Conditions(ConditionsParams),
    Drift(DriftParams),
    Converge(ConvergeParams),
    Moments(MomentsParams),
}

impl ExperimentParams {
    fn parse(experiment: Experiment, value: Value) -> Result<Self, ConfigError> {
        fn p<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, ConfigError> {
            serde_json::from_value(v).map_err(|e| ConfigError::Invalid(format!("params: {e}")))
        }
        Ok(match experiment {
            Experiment::Simulate => ExperimentParams::Simulate(p(value)?),
            Experiment::Dynkin => ExperimentParams::Dynkin(p(value)?),
            Experiment::DynkinTime => ExperimentParams::DynkinTime(p(value)?),
            Experiment::Lemma1 => ExperimentParams::Lemma1(p(value)?),
            Experiment::Martingale => ExperimentParams::Martingale(p(value)?),
            Experiment::Conditions => ExperimentParams::Conditions(p(value)?),
            Experiment::Drift => ExperimentParams::Drift(p(value)?),
            Experiment::Converge => ExperimentParams::Converge(p(value)?),
            Experiment::Moments => ExperimentParams::Moments(p(value)?),
        })
    }

    fn replicas_mut(&mut self) -> Option<&mut u64> {
        match self {
            ExperimentParams::Dynkin(p) => Some(&mut p.replicas),
            ExperimentParams::DynkinTime(p) => Some(&mut p.replicas),
            ExperimentParams::Lemma1(p) => Some(&mut p.replicas),
            ExperimentParams::Martingale(p) => Some(&mut p.replicas),
            ExperimentParams::Converge(p) => Some(&mut p.replicas),
            ExperimentParams::Moments(p) => Some(&mut p.replicas),
            ExperimentParams::Simulate(_)
            | ExperimentParams::Conditions(_)
            | ExperimentParams::Drift(_) => None,
        }
    }

    /// Largest time the experiment simulates to, if it simulates at all.
    fn horizon(&self) -> Option<f64> {
        match self {
            ExperimentParams::Simulate(p) => Some(p.horizon),
            ExperimentParams::Dynkin(p) => Some(p.t),
            ExperimentParams::DynkinTime(p) => Some(p.t),
            ExperimentParams::Lemma1(p) => p.deltas.iter().copied().reduce(f64::max),
            ExperimentParams::Martingale(p) => Some(p.t),
            ExperimentParams::Converge(p) => p.t_grid.last().copied(),
            ExperimentParams::Moments(p) => Some(p.horizon),
            ExperimentParams::Conditions(_) | ExperimentParams::Drift(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub scenario: String,
    pub model: ModelSpec,
    pub params: ExperimentParams,
    /// Non-fatal findings from validation, echoed into the report.
    #[serde(skip)]
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: Option<Experiment>,
    master_seed: u64,
    #[serde(default)]
    scenario: Option<String>,
    model: ModelSpec,
    #[serde(default)]
    params: Option<Value>,
}

/// Parses config text. `expected` is the experiment named on the command line.
pub fn parse_config(
    text: &str,
    expected: Option<Experiment>,
) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let experiment = match (raw.experiment, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Invalid(format!(
                "config is for experiment '{a}' but '{b}' was requested"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(ConfigError::Invalid("experiment not specified".into())),
    };
    let params = ExperimentParams::parse(
        experiment,
        raw.params.unwrap_or(Value::Object(Default::default())),
    )?;
    let mut cfg = ExperimentConfig {
        experiment,
        master_seed: raw.master_seed,
        scenario: raw.scenario.unwrap_or_else(|| "custom".to_owned()),
        model: raw.model,
        params,
        warnings: Vec::new(),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(
    path: &FsPath,
    expected: Option<Experiment>,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, expected)
}

impl ExperimentConfig {
    /// Command-line overrides of scalar fields; re-validates.
    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        replicas: Option<u64>,
    ) -> Result<(), ConfigError> {
        if let Some(seed) = seed {
            self.master_seed = seed;
        }
        if let Some(r) = replicas {
            match self.params.replicas_mut() {
                Some(slot) => *slot = r,
                None => {
                    return Err(ConfigError::Invalid(format!(
                        "--replicas does not apply to experiment '{}'",
                        self.experiment
                    )))
                }
            }
        }
        self.validate()
    }

    fn validate(&mut self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(r) = self.params.clone().replicas_mut() {
            if *r == 0 {
                return bad("replicas must be at least 1".into());
            }
        }
        if let Some(h) = self.params.horizon() {
            if !(h > 0.0) || !h.is_finite() {
                return bad(format!("horizon/t must be positive, got {h}"));
            }
        }
        match &self.params {
            ExperimentParams::Lemma1(p) => {
                if p.deltas.len() < 4 || p.deltas.iter().any(|d| !(*d > 0.0)) {
                    return bad("lemma1 needs at least 4 positive deltas".into());
                }
            }
            ExperimentParams::Martingale(p) => {
                if !(0.0 <= p.s && p.s < p.t) {
                    return bad(format!(
                        "martingale needs 0 <= s < t, got s={}, t={}",
                        p.s, p.t
                    ));
                }
            }
            ExperimentParams::Converge(p) => {
                if p.t_grid.len() < 5
                    || p.t_grid.windows(2).any(|w| w[0] >= w[1])
                    || !(p.t_grid[0] > 0.0)
                {
                    return bad(
                        "converge needs an increasing positive t_grid with at least 5 points"
                            .into(),
                    );
                }
                p.binning
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            ExperimentParams::Moments(p) => {
                if p.orders.iter().any(|&m| m == 0 || m > 20) || p.initials.is_empty() {
                    return bad(
                        "moments needs orders in 1..=20 and at least one initial state".into(),
                    );
                }
            }
            ExperimentParams::Drift(p) => {
                if !(p.x_step > 0.0) || !(p.x_max >= 0.0) {
                    return bad("drift needs x_step > 0 and x_max >= 0".into());
                }
            }
            ExperimentParams::Conditions(p) => {
                if !(p.k > 1.0) {
                    return bad(format!("k must exceed 1, got {}", p.k));
                }
                if !(p.probe_x_step > 0.0) || p.probe_n_max == 0 {
                    return bad(
                        "conditions probe grid needs probe_x_step > 0 and probe_n_max >= 1".into(),
                    );
                }
            }
            _ => {}
        }
        self.warnings.clear();
        if self.model.lambda_bar() == 0.0 && self.params.horizon().is_some() {
            self.warnings.push(
                "lambda_bar = 0: no arrivals can ever occur; the process only ages and drains"
                    .to_owned(),
            );
        }
        Ok(())
    }

    /// The materialized config as canonical JSON (sorted keys, no whitespace).
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
