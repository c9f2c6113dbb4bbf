use super::{MobilityTrace, SimError};
use crate::controller::Policy;
use crate::link_model::RadioModel;
use serde::{Deserialize, Serialize};

/// Sensor data rate of the node, bytes per second.
pub const DEFAULT_DATA_RATE_BPS: f64 = 120.0;
pub const DEFAULT_FRAMES_PER_TRANSMISSION: usize = 10;
pub const DEFAULT_PAYLOAD_BYTES_PER_FRAME: usize = 12;
pub const DEFAULT_DURATION_S: f64 = 120.0;
pub const DEFAULT_REPEATS: u32 = 5;

/// Interrogator/receiver setup. Informational only; nothing here feeds the model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverSetup {
    pub host_model: Option<String>,
    pub host_software: Option<String>,
    pub reader_model: Option<String>,
    pub reader_tx_power_dbm: Option<f64>,
    pub reader_rx_sensitivity_dbm: Option<f64>,
    pub reader_antenna_gain_dbi: Option<f64>,
    pub link_frequency_khz: Option<f64>,
    pub coding: Option<String>,
    pub session: Option<u8>,
    pub q_value: Option<u8>,
    pub reader_duty_cycle_pct: Option<f64>,
    pub ble_receiver_model: Option<String>,
    pub ble_receiver_duty_cycle_pct: Option<f64>,
}

/// One experiment: radios, mobility, timing, policy and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub wisp_model: RadioModel,
    pub ble_model: RadioModel,
    /// Model for the interrogator-to-tag direction; `wisp_model` when unset.
    pub wisp_downlink_model: Option<RadioModel>,
    pub trace: MobilityTrace,
    pub period_s: f64,
    pub frames_per_transmission: usize,
    pub payload_bytes_per_frame: usize,
    pub data_rate_bps: f64,
    pub policy: Policy,
    pub seed: u64,
    pub repeats: u32,
    pub wisp_idle_power_uw: f64,
    pub ble_idle_power_uw: f64,
    pub receiver: Option<ReceiverSetup>,
}

impl Scenario {
    /// Default radios and timing around the given trace.
    pub fn new(name: impl Into<String>, trace: MobilityTrace) -> Self {
        Self {
            name: name.into(),
            wisp_model: RadioModel::wisp(),
            ble_model: RadioModel::ble(),
            wisp_downlink_model: None,
            trace,
            period_s: 1.0,
            frames_per_transmission: DEFAULT_FRAMES_PER_TRANSMISSION,
            payload_bytes_per_frame: DEFAULT_PAYLOAD_BYTES_PER_FRAME,
            data_rate_bps: DEFAULT_DATA_RATE_BPS,
            policy: Policy::naive(),
            seed: 0,
            repeats: DEFAULT_REPEATS,
            wisp_idle_power_uw: 0.0,
            ble_idle_power_uw: 0.0,
            receiver: None,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.trace.duration_s()
    }

    /// Number of transmission periods.
    pub fn periods(&self) -> usize {
        (self.duration_s() / self.period_s).round() as usize
    }

    pub fn generated_messages(&self) -> u64 {
        (self.periods() * self.frames_per_transmission) as u64
    }

    pub fn downlink_model(&self) -> &RadioModel {
        self.wisp_downlink_model.as_ref().unwrap_or(&self.wisp_model)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let model_err = |key: &str, e: crate::link_model::LinkError| SimError::invalid(key, e.to_string());
        self.wisp_model.validate().map_err(|e| model_err("wisp_model", e))?;
        self.ble_model.validate().map_err(|e| model_err("ble_model", e))?;
        if let Some(m) = &self.wisp_downlink_model {
            m.validate().map_err(|e| model_err("wisp_downlink_model", e))?;
        }

        if !(self.period_s > 0.0 && self.period_s.is_finite()) {
            return Err(SimError::invalid("period_s", "must be positive"));
        }
        let ratio = self.duration_s() / self.period_s;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(SimError::invalid(
                "duration_s",
                format!("{} s is not a multiple of period_s = {} s", self.duration_s(), self.period_s),
            ));
        }
        if self.frames_per_transmission == 0 {
            return Err(SimError::invalid("frames_per_transmission", "must be positive"));
        }
        if self.payload_bytes_per_frame == 0 {
            return Err(SimError::invalid("payload_bytes_per_frame", "must be positive"));
        }
        if !(self.data_rate_bps > 0.0 && self.data_rate_bps.is_finite()) {
            return Err(SimError::invalid("data_rate_bps", "must be positive"));
        }
        let produced = (self.frames_per_transmission * self.payload_bytes_per_frame) as f64 / self.period_s;
        if (produced - self.data_rate_bps).abs() > 1e-9 * self.data_rate_bps {
            return Err(SimError::invalid(
                "data_rate_bps",
                format!(
                    "frames_per_transmission * payload_bytes_per_frame / period_s = {produced} B/s, expected {}",
                    self.data_rate_bps
                ),
            ));
        }
        if self.repeats == 0 {
            return Err(SimError::invalid("repeats", "must be at least 1"));
        }
        for (key, p) in [
            ("wisp_idle_power_uw", self.wisp_idle_power_uw),
            ("ble_idle_power_uw", self.ble_idle_power_uw),
        ] {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(SimError::invalid(key, "must be non-negative"));
            }
        }

        let wisp_limit = self.wisp_model.max_distance.min(self.downlink_model().max_distance);
        for (i, s) in self.trace.segments().iter().enumerate() {
            if s.distance_m >= wisp_limit {
                return Err(SimError::invalid(
                    format!("trace.segments[{i}].distance_m"),
                    format!("{} m is outside the wisp model range (0, {wisp_limit})", s.distance_m),
                ));
            }
        }
        if self.trace.ble_distance_m() >= self.ble_model.max_distance {
            return Err(SimError::invalid(
                "trace.ble_distance_m",
                format!(
                    "{} m is outside the ble model range (0, {})",
                    self.trace.ble_distance_m(),
                    self.ble_model.max_distance
                ),
            ));
        }
        Ok(())
    }
}
