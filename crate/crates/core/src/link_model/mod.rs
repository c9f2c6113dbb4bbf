//! Analytic link and energy model for a set of heterogeneous radios.
//!
//! Each radio is characterised by a decay function `f(d) = (d / a)^(-r)`
//! that is treated as the argument of a per-bit error probability
//! `erfc(f(d))`. A frame of `L + H` bits survives when every bit does, so the
//! fraction of useful bytes received per transmitted frame is
//!
//! ```text
//! B_rx(d) = L / (L + H) * [1 - erfc(f(d))]^(L + H)
//! ```
//!
//! and the energy per delivered byte is `E_tx / B_rx(d)`. `B_rx` is a
//! dimensionless goodput fraction, so energy values are in µJ per unit of
//! that fraction.
//!
//! Distances are in meters, energies in microjoules.

mod envelope;
mod erfc;

pub use envelope::{
    crossover_distance, energy_floor, is_dominated, lower_envelope, operational_range,
    system_operational_range, EnvelopePoint,
};
pub use erfc::erfc;

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Default upper bound of the validity interval for the shipped models.
pub const DEFAULT_MAX_DISTANCE_M: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkError {
    #[error("distance {distance} m outside model `{radio}` validity interval (0, {max_distance})")]
    Domain {
        radio: String,
        distance: f64,
        max_distance: f64,
    },
    #[error("energy budget {e_max} µJ/B is not above the zero-distance floor {floor} µJ/B of `{radio}`")]
    BelowFloor { radio: String, e_max: f64, floor: f64 },
    #[error("no crossover between `{first}` and `{second}`")]
    NoCrossover { first: String, second: String },
    #[error("energy difference between `{first}` and `{second}` changes sign {changes} times")]
    MultipleCrossovers {
        first: String,
        second: String,
        changes: usize,
    },
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("invalid radio model `{radio}`: {reason}")]
    InvalidModel { radio: String, reason: String },
}

/// Link and energy parameters of one radio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioModel {
    pub id: String,
    /// Radio-intrinsic correction distance, meters.
    pub a: f64,
    /// Loss coefficient (4 for backscatter, 2 for active radio).
    pub r: f64,
    pub payload_bits: u32,
    pub overhead_bits: u32,
    /// Energy of one `(L + H)`-bit transmission attempt, µJ.
    pub energy_per_frame: f64,
    #[serde(default = "default_max_distance")]
    pub max_distance: f64,
}

fn default_max_distance() -> f64 {
    DEFAULT_MAX_DISTANCE_M
}

impl RadioModel {
    /// Fitted backscatter (WISP) curve: a = 30 m, r = 4, 5 µJ per frame bit.
    pub fn wisp() -> Self {
        Self {
            id: "wisp".to_string(),
            a: 30.0,
            r: 4.0,
            payload_bits: 96,
            overhead_bits: 320,
            energy_per_frame: 416.0 * 5.0,
            max_distance: DEFAULT_MAX_DISTANCE_M,
        }
    }

    /// Fitted BLE curve: a = 87 m, r = 2, 21 µJ per frame bit.
    pub fn ble() -> Self {
        Self {
            id: "ble".to_string(),
            a: 87.0,
            r: 2.0,
            payload_bits: 96,
            overhead_bits: 320,
            energy_per_frame: 416.0 * 21.0,
            max_distance: DEFAULT_MAX_DISTANCE_M,
        }
    }

    pub fn frame_bits(&self) -> u32 {
        self.payload_bits + self.overhead_bits
    }

    /// `L / (L + H)`, the useful share of a frame.
    pub fn payload_fraction(&self) -> f64 {
        f64::from(self.payload_bits) / f64::from(self.frame_bits())
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |reason: &str| {
            Err(LinkError::InvalidModel {
                radio: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r must be positive");
        }
        if self.payload_bits == 0 {
            return bad("payload_bits must be positive");
        }
        if !(self.energy_per_frame > 0.0 && self.energy_per_frame.is_finite()) {
            return bad("energy_per_frame must be positive");
        }
        if !(self.max_distance > 0.0 && self.max_distance.is_finite()) {
            return bad("max_distance must be positive");
        }
        Ok(())
    }

    fn check_distance(&self, d: f64) -> Result<(), LinkError> {
        if d > 0.0 && d < self.max_distance {
            Ok(())
        } else {
            Err(LinkError::Domain {
                radio: self.id.clone(),
                distance: d,
                max_distance: self.max_distance,
            })
        }
    }

    /// Same radio with energy_per_frame multiplied by `factor`.
    pub fn with_energy_scaled(&self, factor: f64) -> Self {
        Self {
            energy_per_frame: self.energy_per_frame * factor,
            ..self.clone()
        }
    }
}

/// Energy per delivered byte. `Unbounded` once nothing gets through.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyPerByte {
    Finite(f64),
    Unbounded,
}

impl EnergyPerByte {
    /// `energy / delivered`, or `Unbounded` when nothing was delivered.
    pub fn from_ratio(energy: f64, delivered: f64) -> Self {
        if delivered > 0.0 {
            let v = energy / delivered;
            if v.is_finite() {
                return EnergyPerByte::Finite(v);
            }
        }
        EnergyPerByte::Unbounded
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            EnergyPerByte::Finite(v) => Some(v),
            EnergyPerByte::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, EnergyPerByte::Unbounded)
    }

    /// Parses the CSV representation (`inf` or a decimal number).
    pub fn parse(s: &str) -> Option<Self> {
        if s == "inf" {
            return Some(EnergyPerByte::Unbounded);
        }
        let v: f64 = s.parse().ok()?;
        (v.is_finite() && v >= 0.0).then_some(EnergyPerByte::Finite(v))
    }
}

impl Eq for EnergyPerByte {}

impl PartialOrd for EnergyPerByte {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Unbounded is greater than every finite value and equal to itself.
impl Ord for EnergyPerByte {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (EnergyPerByte::Finite(a), EnergyPerByte::Finite(b)) => a.total_cmp(b),
            (EnergyPerByte::Finite(_), EnergyPerByte::Unbounded) => Ordering::Less,
            (EnergyPerByte::Unbounded, EnergyPerByte::Finite(_)) => Ordering::Greater,
            (EnergyPerByte::Unbounded, EnergyPerByte::Unbounded) => Ordering::Equal,
        }
    }
}

impl fmt::Display for EnergyPerByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyPerByte::Finite(v) => write!(f, "{v}"),
            EnergyPerByte::Unbounded => f.write_str("inf"),
        }
    }
}

/// Signal quality decay `(d / a)^(-r)`.
pub fn decay(model: &RadioModel, d: f64) -> Result<f64, LinkError> {
    model.check_distance(d)?;
    Ok((d / model.a).powf(-model.r))
}

/// Per-bit error probability `erfc(f(d))`.
pub fn bit_error_probability(model: &RadioModel, d: f64) -> Result<f64, LinkError> {
    Ok(erfc(decay(model, d)?).clamp(0.0, 1.0))
}

/// Probability that all `L + H` bits of a frame survive.
///
/// Evaluated as `exp(n * ln(1 - q))` so small per-bit error rates keep their
/// precision. Underflows to exactly 0 far past the model's wall.
pub fn packet_success(model: &RadioModel, d: f64) -> Result<f64, LinkError> {
    let q = bit_error_probability(model, d)?;
    if q >= 1.0 {
        return Ok(0.0);
    }
    let p = (f64::from(model.frame_bits()) * (-q).ln_1p()).exp();
    Ok(p.clamp(0.0, 1.0))
}

/// Received useful bytes per transmitted frame byte, `L/(L+H) * packet_success`.
pub fn rx_bytes(model: &RadioModel, d: f64) -> Result<f64, LinkError> {
    Ok(model.payload_fraction() * packet_success(model, d)?)
}

/// `E_tx / B_rx(d)`.
pub fn energy_per_byte(model: &RadioModel, d: f64) -> Result<EnergyPerByte, LinkError> {
    let rx = rx_bytes(model, d)?;
    Ok(EnergyPerByte::from_ratio(model.energy_per_frame, rx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_models_match_fitted_parameters() {
        let w = RadioModel::wisp();
        assert_eq!(w.energy_per_frame, 2080.0);
        assert_eq!(RadioModel::ble().energy_per_frame, 8736.0);
        assert!(w.validate().is_ok());
        assert!(RadioModel::ble().validate().is_ok());
    }

    #[test]
    fn decay_examples() {
        assert_eq!(decay(&RadioModel::wisp(), 30.0).unwrap(), 1.0);
        assert!((decay(&RadioModel::wisp(), 15.0).unwrap() - 16.0).abs() < 1e-12);
        assert_eq!(decay(&RadioModel::ble(), 87.0).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        let w = RadioModel::wisp();
        assert!(matches!(decay(&w, 0.0), Err(LinkError::Domain { .. })));
        assert!(matches!(decay(&w, -1.0), Err(LinkError::Domain { .. })));
        assert!(matches!(packet_success(&w, 200.0), Err(LinkError::Domain { .. })));
        assert!(energy_per_byte(&w, f64::NAN).is_err());
    }

    #[test]
    fn near_distance_is_lossless() {
        let w = RadioModel::wisp();
        assert!((packet_success(&w, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((rx_bytes(&w, 1.0).unwrap() - 96.0 / 416.0).abs() < 1e-12);
        let e = energy_per_byte(&w, 1.0).unwrap().finite().unwrap();
        assert!((e - 9013.333_333_333_333).abs() < 1e-6);
    }

    #[test]
    fn ble_at_25m_is_near_perfect() {
        assert!(packet_success(&RadioModel::ble(), 25.0).unwrap() >= 0.999);
    }

    #[test]
    fn wisp_far_is_unbounded() {
        let w = RadioModel::wisp();
        assert_eq!(rx_bytes(&w, 60.0).unwrap(), 0.0);
        assert_eq!(energy_per_byte(&w, 60.0).unwrap(), EnergyPerByte::Unbounded);
        assert_eq!(energy_per_byte(&w, 199.0).unwrap(), EnergyPerByte::Unbounded);
    }

    #[test]
    fn wisp_at_25m_matches_high_precision_value() {
        // (1 - erfc((30/25)^4))^416 evaluated with 50-digit arithmetic.
        let p = packet_success(&RadioModel::wisp(), 25.0).unwrap();
        assert!((p - 0.246_331_775_975_628_5).abs() / p < 5e-5, "{p}");
    }

    #[test]
    fn rx_bytes_composes_packet_success() {
        let b = RadioModel::ble();
        let p = packet_success(&b, 40.0).unwrap();
        assert_eq!(rx_bytes(&b, 40.0).unwrap(), 96.0 / 416.0 * p);
    }

    #[test]
    fn energy_ordering() {
        let f = EnergyPerByte::Finite(1e300);
        assert!(f < EnergyPerByte::Unbounded);
        assert_eq!(EnergyPerByte::Unbounded, EnergyPerByte::Unbounded);
        assert_eq!(EnergyPerByte::from_ratio(1.0, 0.0), EnergyPerByte::Unbounded);
        assert_eq!(EnergyPerByte::from_ratio(1e300, 1e-300), EnergyPerByte::Unbounded);
    }

    #[test]
    fn energy_display_parse() {
        assert_eq!(EnergyPerByte::Unbounded.to_string(), "inf");
        assert_eq!(EnergyPerByte::parse("inf"), Some(EnergyPerByte::Unbounded));
        assert_eq!(EnergyPerByte::parse("12.5"), Some(EnergyPerByte::Finite(12.5)));
        assert_eq!(EnergyPerByte::parse("NaN"), None);
        assert_eq!(EnergyPerByte::parse("-3"), None);
    }

    #[test]
    fn invalid_models_rejected() {
        let mut m = RadioModel::wisp();
        m.a = 0.0;
        assert!(m.validate().is_err());
        let mut m = RadioModel::ble();
        m.payload_bits = 0;
        assert!(m.validate().is_err());
        let mut m = RadioModel::ble();
        m.energy_per_frame = -1.0;
        assert!(m.validate().is_err());
    }
}
