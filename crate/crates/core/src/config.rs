//! TOML scenario and radio-model files, and the shipped presets.
//!
//! A scenario file looks like
//!
//! ```toml
//! name = "static_alternating"
//! duration_s = 120.0
//! period_s = 1.0
//! frames_per_transmission = 10
//! payload_bytes_per_frame = 12
//! data_rate_bps = 120.0          # bytes per second
//! seed = 1
//! repeats = 5
//!
//! [policy]
//! max_backoff = 3
//!
//! [wisp_model]                   # any subset of RadioModel fields
//! a = 30.0
//!
//! [trace]
//! ble_distance_m = 5.0
//! alternating = { first_m = 5.0, second_m = 60.0, interval_s = 10.0 }
//! # or: segments = [{ start_s = 0.0, distance_m = 5.0 }, ...]
//! ```
//!
//! Every key is optional except `trace`; omitted keys take the defaults of
//! [`Scenario::new`]. Unknown keys are rejected. Repeat `k` of a run is
//! seeded with `mix64(seed ^ k)`, where `mix64` is the splitmix64 finaliser
//! ([`crate::sim::mix64`]).
//!
//! Model files hold a list of radios:
//!
//! ```toml
//! [[models]]
//! id = "wisp"
//! a = 30.0
//! r = 4.0
//! payload_bits = 96
//! overhead_bits = 320
//! energy_per_frame = 2080.0
//! ```

use crate::controller::Policy;
use crate::link_model::RadioModel;
use crate::sim::{MobilityTrace, ReceiverSetup, Scenario, Segment, SimError};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid { key, reason } => ConfigError::Invalid { key, reason },
            other => ConfigError::Invalid {
                key: "trace".into(),
                reason: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelOverride {
    id: Option<String>,
    a: Option<f64>,
    r: Option<f64>,
    payload_bits: Option<u32>,
    overhead_bits: Option<u32>,
    energy_per_frame: Option<f64>,
    max_distance: Option<f64>,
}

impl ModelOverride {
    fn apply(self, mut m: RadioModel) -> RadioModel {
        if let Some(v) = self.id {
            m.id = v;
        }
        if let Some(v) = self.a {
            m.a = v;
        }
        if let Some(v) = self.r {
            m.r = v;
        }
        if let Some(v) = self.payload_bits {
            m.payload_bits = v;
        }
        if let Some(v) = self.overhead_bits {
            m.overhead_bits = v;
        }
        if let Some(v) = self.energy_per_frame {
            m.energy_per_frame = v;
        }
        if let Some(v) = self.max_distance {
            m.max_distance = v;
        }
        m
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Alternating {
    first_m: f64,
    second_m: f64,
    interval_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    ble_distance_m: Option<f64>,
    segments: Option<Vec<Segment>>,
    alternating: Option<Alternating>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    #[serde(default)]
    max_backoff: i64,
    #[serde(default)]
    literal_alg1: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    duration_s: Option<f64>,
    period_s: Option<f64>,
    frames_per_transmission: Option<usize>,
    payload_bytes_per_frame: Option<usize>,
    data_rate_bps: Option<f64>,
    seed: Option<u64>,
    repeats: Option<u32>,
    wisp_idle_power_uw: Option<f64>,
    ble_idle_power_uw: Option<f64>,
    policy: Option<PolicyFile>,
    wisp_model: Option<ModelOverride>,
    ble_model: Option<ModelOverride>,
    wisp_downlink_model: Option<ModelOverride>,
    trace: TraceFile,
    receiver: Option<ReceiverSetup>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelsFile {
    models: Vec<ModelOverride>,
}

const DEFAULT_BLE_DISTANCE_M: f64 = 5.0;

fn deserialize<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Invalid {
        key: "<syntax>".into(),
        reason: e.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "<root>".to_string() } else { path };
        ConfigError::Invalid {
            key,
            reason: e.into_inner().message().to_string(),
        }
    })
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str, fallback_name: &str) -> Result<Scenario, ConfigError> {
    let f: ScenarioFile = deserialize(text)?;
    let duration_s = f.duration_s.unwrap_or(crate::sim::DEFAULT_DURATION_S);
    let ble_distance_m = f.trace.ble_distance_m.unwrap_or(DEFAULT_BLE_DISTANCE_M);
    let trace = match (f.trace.segments, f.trace.alternating) {
        (Some(segments), None) => MobilityTrace::new(segments, duration_s, ble_distance_m)?,
        (None, Some(a)) => MobilityTrace::alternating(
            a.first_m,
            a.second_m,
            a.interval_s,
            duration_s,
            ble_distance_m,
        )?,
        _ => {
            return Err(ConfigError::Invalid {
                key: "trace".into(),
                reason: "exactly one of `segments` or `alternating` is required".into(),
            })
        }
    };

    let mut s = Scenario::new(f.name.unwrap_or_else(|| fallback_name.to_string()), trace);
    if let Some(p) = f.policy {
        s.policy = Policy {
            max_backoff: u32::try_from(p.max_backoff).map_err(|_| ConfigError::Invalid {
                key: "policy.max_backoff".into(),
                reason: format!("must be a non-negative integer, got {}", p.max_backoff),
            })?,
            literal_alg1: p.literal_alg1,
        };
    }
    if let Some(o) = f.wisp_model {
        s.wisp_model = o.apply(s.wisp_model);
    }
    if let Some(o) = f.ble_model {
        s.ble_model = o.apply(s.ble_model);
    }
    if let Some(o) = f.wisp_downlink_model {
        s.wisp_downlink_model = Some(o.apply(s.wisp_model.clone()));
    }
    s.period_s = f.period_s.unwrap_or(s.period_s);
    s.frames_per_transmission = f.frames_per_transmission.unwrap_or(s.frames_per_transmission);
    s.payload_bytes_per_frame = f.payload_bytes_per_frame.unwrap_or(s.payload_bytes_per_frame);
    s.data_rate_bps = f.data_rate_bps.unwrap_or(s.data_rate_bps);
    s.seed = f.seed.unwrap_or(s.seed);
    s.repeats = f.repeats.unwrap_or(s.repeats);
    s.wisp_idle_power_uw = f.wisp_idle_power_uw.unwrap_or(0.0);
    s.ble_idle_power_uw = f.ble_idle_power_uw.unwrap_or(0.0);
    s.receiver = f.receiver;
    s.validate()?;
    Ok(s)
}

/// Parses a radio-model list. Fields left out default to the fitted WISP model.
pub fn parse_models(text: &str) -> Result<Vec<RadioModel>, ConfigError> {
    let f: ModelsFile = deserialize(text)?;
    if f.models.is_empty() {
        return Err(ConfigError::Invalid {
            key: "models".into(),
            reason: "must not be empty".into(),
        });
    }
    let models: Vec<RadioModel> = f
        .models
        .into_iter()
        .map(|o| o.apply(RadioModel::wisp()))
        .collect();
    for (i, m) in models.iter().enumerate() {
        m.validate().map_err(|e| ConfigError::Invalid {
            key: format!("models[{i}]"),
            reason: e.to_string(),
        })?;
    }
    Ok(models)
}

/// Names of the shipped scenario presets.
pub const SCENARIO_PRESETS: [&str; 6] = [
    "static_in",
    "static_out",
    "static_alternating",
    "mobile_in",
    "mobile_out",
    "mobile_alternating",
];

fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "static_in" => include_str!("../presets/static_in.toml"),
        "static_out" => include_str!("../presets/static_out.toml"),
        "static_alternating" => include_str!("../presets/static_alternating.toml"),
        "mobile_in" => include_str!("../presets/mobile_in.toml"),
        "mobile_out" => include_str!("../presets/mobile_out.toml"),
        "mobile_alternating" => include_str!("../presets/mobile_alternating.toml"),
        _ => return None,
    })
}

pub fn scenario_preset(name: &str) -> Result<Scenario, ConfigError> {
    let text = preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    parse_scenario(text, name)
}

/// `default` is the fitted WISP and BLE pair.
pub fn models_preset(name: &str) -> Result<Vec<RadioModel>, ConfigError> {
    match name {
        "default" => Ok(vec![RadioModel::wisp(), RadioModel::ble()]),
        _ => Err(ConfigError::UnknownPreset(name.to_string())),
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Resolves a preset name, falling back to reading a file.
pub fn load_scenario(spec: &str) -> Result<Scenario, ConfigError> {
    if preset_text(spec).is_some() {
        return scenario_preset(spec);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(ConfigError::UnknownPreset(spec.to_string()));
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_scenario(&read(path)?, &stem)
}

pub fn load_models(spec: &str) -> Result<Vec<RadioModel>, ConfigError> {
    if let Ok(m) = models_preset(spec) {
        return Ok(m);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(ConfigError::UnknownPreset(spec.to_string()));
    }
    parse_models(&read(path)?)
}
