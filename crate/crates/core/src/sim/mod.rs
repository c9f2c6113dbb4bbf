//! Discrete-period experiment engine.
//!
//! Each period the node samples `frames_per_transmission` new messages, the
//! controller picks the radios, the backscatter radio runs one inventory
//! round over the distance of the mobility trace, and BLE (if enabled)
//! advertises the same messages. Transmitted frames cost their full energy
//! whether or not they arrive.

mod scenario;
mod trace;

pub use scenario::{
    ReceiverSetup, Scenario, DEFAULT_DATA_RATE_BPS, DEFAULT_DURATION_S,
    DEFAULT_FRAMES_PER_TRANSMISSION, DEFAULT_PAYLOAD_BYTES_PER_FRAME, DEFAULT_REPEATS,
};
pub use trace::{MobilityTrace, Segment};

use crate::controller::{Controller, Decision, Policy};
use crate::link_model::packet_success;
use crate::protocol::{ack_count, ble_advertise, inventory_round, ChannelSample, FrameOutcome};
use crate::report::RunMetrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{key}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("time {t} s outside trace [0, {duration_s})")]
    TimeOutOfRange { t: f64, duration_s: f64 },
}

impl SimError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        SimError::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// Constant filler appended to every message.
pub const PADDING: [u8; 8] = [0xA5; 8];
pub const SENSOR_BYTES: usize = 4;

/// One sensor sample as framed on the air.
///
/// `id` is the sample timestamp since startup, counted in sampling ticks, and
/// doubles as the receiver-side deduplication key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub id: u64,
    pub sensor_bytes: [u8; SENSOR_BYTES],
    pub padding_bytes: [u8; 8],
}

impl Message {
    pub fn new(id: u64) -> Self {
        // synthetic temperature in centi-degrees around 21.5 C
        let temperature = 2150i16 + (id.wrapping_mul(37) % 200) as i16 - 100;
        let t = temperature.to_le_bytes();
        let ts = (id as u16).to_le_bytes();
        Self {
            id,
            sensor_bytes: [t[0], t[1], ts[0], ts[1]],
            padding_bytes: PADDING,
        }
    }

    pub fn to_bytes(&self) -> [u8; 12] {
        let mut out = [0u8; 12];
        out[..SENSOR_BYTES].copy_from_slice(&self.sensor_bytes);
        out[SENSOR_BYTES..].copy_from_slice(&self.padding_bytes);
        out
    }
}

/// Which radios a run may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setup {
    WispOnly,
    BleOnly,
    Blisp(Policy),
}

impl Setup {
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setup::WispOnly => f.write_str("wisp_only"),
            Setup::BleOnly => f.write_str("ble_only"),
            Setup::Blisp(p) if p.literal_alg1 => write!(f, "blisp_x{}_literal", p.max_backoff),
            Setup::Blisp(p) => write!(f, "blisp_x{}", p.max_backoff),
        }
    }
}

/// Log entry of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub t: usize,
    pub distance_m: f64,
    pub decision: Decision,
    /// One entry per backscatter frame; empty when the radio stayed silent.
    pub outcomes: Vec<FrameOutcome>,
    /// Per-frame BLE delivery; empty when BLE stayed silent.
    pub ble_delivered: Vec<bool>,
    pub wisp_energy_uj: f64,
    pub ble_energy_uj: f64,
    pub wisp_idle_energy_uj: f64,
    pub ble_idle_energy_uj: f64,
    pub wisp_message_ids: Vec<u64>,
    pub ble_message_ids: Vec<u64>,
}

impl PeriodRecord {
    pub fn total_energy_uj(&self) -> f64 {
        self.wisp_energy_uj + self.ble_energy_uj + self.wisp_idle_energy_uj + self.ble_idle_energy_uj
    }
}

/// splitmix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of repeat `repeat`: `mix64(seed ^ repeat)`.
pub fn repeat_seed(seed: u64, repeat: u32) -> u64 {
    mix64(seed ^ u64::from(repeat))
}

/// Runs repeat 0 of the BLISP setup with the scenario's own policy.
pub fn run(scenario: &Scenario) -> Result<(Vec<PeriodRecord>, RunMetrics), SimError> {
    run_with(scenario, Setup::Blisp(scenario.policy), 0)
}

/// Runs one repeat of `setup` over `scenario`.
///
/// All randomness comes from one ChaCha8 stream seeded with
/// [`repeat_seed`]; per period the controller draws first, then the
/// inventory round (3 draws per frame), then BLE (1 draw per frame).
pub fn run_with(
    scenario: &Scenario,
    setup: Setup,
    repeat: u32,
) -> Result<(Vec<PeriodRecord>, RunMetrics), SimError> {
    scenario.validate()?;
    let link = |e: crate::link_model::LinkError| SimError::invalid("trace", e.to_string());

    let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed(scenario.seed, repeat));
    let mut controller = match setup {
        Setup::Blisp(policy) => Some(Controller::new(policy)),
        _ => None,
    };
    let frames = scenario.frames_per_transmission;
    let p_ble = packet_success(&scenario.ble_model, scenario.trace.ble_distance_m()).map_err(link)?;
    let wisp_frame_uj = scenario.wisp_model.energy_per_frame;
    let ble_frame_uj = scenario.ble_model.energy_per_frame;
    let wisp_idle_uj = scenario.wisp_idle_power_uw * scenario.period_s;
    let ble_idle_uj = scenario.ble_idle_power_uw * scenario.period_s;

    let mut records = Vec::with_capacity(scenario.periods());
    for t in 0..scenario.periods() {
        let distance_m = scenario.trace.distance_at(t as f64 * scenario.period_s)?;
        let decision = match (&mut controller, setup) {
            (Some(c), _) => c.step(&mut rng),
            (None, Setup::WispOnly) => Decision {
                wisp_tx: true,
                ble_tx: false,
            },
            (None, _) => Decision {
                wisp_tx: false,
                ble_tx: true,
            },
        };
        let first_id = (t * frames) as u64;
        let ids = first_id..first_id + frames as u64;

        let mut rec = PeriodRecord {
            t,
            distance_m,
            decision,
            outcomes: Vec::new(),
            ble_delivered: Vec::new(),
            wisp_energy_uj: 0.0,
            ble_energy_uj: 0.0,
            wisp_idle_energy_uj: 0.0,
            ble_idle_energy_uj: 0.0,
            wisp_message_ids: Vec::new(),
            ble_message_ids: Vec::new(),
        };

        if decision.wisp_tx {
            let ch = ChannelSample::new(
                packet_success(&scenario.wisp_model, distance_m).map_err(link)?,
                packet_success(scenario.downlink_model(), distance_m).map_err(link)?,
            );
            rec.outcomes = inventory_round(ch, frames, &mut rng);
            rec.wisp_energy_uj = frames as f64 * wisp_frame_uj;
            rec.wisp_message_ids = ids
                .clone()
                .zip(&rec.outcomes)
                .filter(|(_, o)| o.epc_delivered)
                .map(|(id, _)| id)
                .collect();
            if let Some(c) = &mut controller {
                c.feed_back(frames, ack_count(&rec.outcomes));
            }
        } else {
            rec.wisp_idle_energy_uj = wisp_idle_uj;
            if let Some(c) = &mut controller {
                c.feed_back(0, 0);
            }
        }

        if decision.ble_tx {
            rec.ble_delivered = (0..frames).map(|_| ble_advertise(p_ble, &mut rng)).collect();
            rec.ble_energy_uj = frames as f64 * ble_frame_uj;
            rec.ble_message_ids = ids
                .zip(&rec.ble_delivered)
                .filter(|(_, &ok)| ok)
                .map(|(id, _)| id)
                .collect();
        } else {
            rec.ble_idle_energy_uj = ble_idle_uj;
        }
        records.push(rec);
    }

    let metrics = RunMetrics::from_records(&records, scenario);
    Ok((records, metrics))
}

/// Distinct delivered messages over both radios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniqueCount {
    pub messages: u64,
    pub bytes: u64,
}

/// Counts each message id once, however many radios delivered it.
pub fn dedupe_unique(records: &[PeriodRecord], bytes_per_message: usize) -> UniqueCount {
    let ids: BTreeSet<u64> = records
        .iter()
        .flat_map(|r| r.wisp_message_ids.iter().chain(&r.ble_message_ids))
        .copied()
        .collect();
    let messages = ids.len() as u64;
    UniqueCount {
        messages,
        bytes: messages * bytes_per_message as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_model::RadioModel;

    fn scenario(trace: MobilityTrace) -> Scenario {
        Scenario::new("test", trace)
    }

    fn record(t: usize, wisp: Vec<u64>, ble: Vec<u64>) -> PeriodRecord {
        PeriodRecord {
            t,
            distance_m: 1.0,
            decision: Decision {
                wisp_tx: true,
                ble_tx: true,
            },
            outcomes: vec![],
            ble_delivered: vec![],
            wisp_energy_uj: 0.0,
            ble_energy_uj: 0.0,
            wisp_idle_energy_uj: 0.0,
            ble_idle_energy_uj: 0.0,
            wisp_message_ids: wisp,
            ble_message_ids: ble,
        }
    }

    #[test]
    fn message_framing() {
        let m = Message::new(1234);
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 12);
        assert_eq!(&bytes[4..], &[0xA5; 8]);
        assert_eq!(u16::from_le_bytes([bytes[2], bytes[3]]), 1234);
    }

    #[test]
    fn dedupe_examples() {
        let both = [record(0, vec![1, 2], vec![2, 3])];
        assert_eq!(dedupe_unique(&both, 12), UniqueCount { messages: 3, bytes: 36 });
        assert_eq!(dedupe_unique(&[], 12).messages, 0);
        let full: Vec<_> = (0..120)
            .map(|t| record(t, (t as u64 * 10..t as u64 * 10 + 10).collect(), vec![]))
            .collect();
        assert_eq!(dedupe_unique(&full, 12), UniqueCount { messages: 1200, bytes: 14400 });
    }

    #[test]
    fn seed_split_differs_per_repeat() {
        assert_ne!(repeat_seed(7, 0), repeat_seed(7, 1));
        assert_eq!(repeat_seed(7, 3), mix64(7 ^ 3));
        // reference splitmix64 output for state 0
        assert_eq!(mix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn in_range_hand_trace() {
        // 5 m: packet_success is exactly 1, so every probe is acknowledged.
        let mut s = scenario(MobilityTrace::constant(5.0, 5.0, 5.0).unwrap());
        s.policy = Policy::random(10);
        let (records, m) = run(&s).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            assert!(r.decision.wisp_tx && !r.decision.ble_tx);
            assert_eq!(r.wisp_message_ids.len(), 10);
            assert_eq!(r.wisp_energy_uj, 20_800.0);
            assert_eq!(r.ble_energy_uj, 0.0);
        }
        assert_eq!(m.unique_messages, 50);
    }

    #[test]
    fn out_of_range_probes_at_backoff_rate() {
        let mut s = scenario(MobilityTrace::constant(60.0, 120.0, 5.0).unwrap());
        s.policy = Policy::naive();
        let (records, m) = run(&s).unwrap();
        // period 0 trusts the optimistic start and loses its messages
        assert!(!records[0].decision.ble_tx);
        assert!(records[1..].iter().all(|r| r.decision.ble_tx && r.decision.wisp_tx));
        assert_eq!(m.raw_messages_per_radio["wisp"], 0);
        assert_eq!(m.unique_messages, 1190);
    }

    #[test]
    fn alternating_naive_loses_first_out_period_only() {
        let s = scenario(MobilityTrace::alternating(5.0, 60.0, 10.0, 120.0, 5.0).unwrap());
        let (records, m) = run_with(&s, Setup::Blisp(Policy::naive()), 0).unwrap();
        // six out-of-range segments, each loses its first period
        assert_eq!(m.unique_messages, 1140);
        for seg in 0..6 {
            let first_out = 20 * seg + 10;
            let r = &records[first_out];
            assert!(r.decision.wisp_tx && !r.decision.ble_tx);
            assert!(r.wisp_message_ids.is_empty());
        }
        let ble_periods = records.iter().filter(|r| r.decision.ble_tx).count();
        assert_eq!(ble_periods, 6 * 9 + 5);
    }

    #[test]
    fn energy_conservation_and_record_invariants() {
        let mut s = scenario(MobilityTrace::alternating(5.0, 26.0, 7.0, 120.0, 5.0).unwrap());
        s.policy = Policy::random(3);
        s.seed = 99;
        for setup in [Setup::WispOnly, Setup::BleOnly, Setup::Blisp(s.policy)] {
            let (records, m) = run_with(&s, setup, 2).unwrap();
            let wisp_periods = records.iter().filter(|r| r.decision.wisp_tx).count() as f64;
            let ble_periods = records.iter().filter(|r| r.decision.ble_tx).count() as f64;
            let total: f64 = records.iter().map(PeriodRecord::total_energy_uj).sum();
            assert_eq!(total, wisp_periods * 10.0 * 2080.0 + ble_periods * 10.0 * 8736.0);
            assert_eq!(m.total_energy_uj(), total);
            for r in &records {
                assert_eq!(r.wisp_energy_uj > 0.0, r.decision.wisp_tx);
                assert_eq!(r.ble_energy_uj > 0.0, r.decision.ble_tx);
                assert!(r.decision.wisp_tx || r.decision.ble_tx);
            }
            assert!(m.unique_messages <= s.generated_messages());
        }
    }

    #[test]
    fn idle_power_is_accounted_separately() {
        let mut s = scenario(MobilityTrace::constant(5.0, 10.0, 5.0).unwrap());
        s.ble_idle_power_uw = 3.0;
        let (records, m) = run(&s).unwrap();
        assert!(records.iter().all(|r| r.ble_idle_energy_uj == 3.0 && r.ble_energy_uj == 0.0));
        assert_eq!(m.energy_uj_per_radio["ble"], 30.0);
    }

    #[test]
    fn perfect_channel_naive_equals_wisp_only_baseline() {
        let s = scenario(MobilityTrace::constant(2.0, 120.0, 5.0).unwrap());
        let (_, blisp) = run_with(&s, Setup::Blisp(Policy::naive()), 0).unwrap();
        let (_, wisp) = run_with(&s, Setup::WispOnly, 0).unwrap();
        assert_eq!(blisp.total_energy_uj(), wisp.total_energy_uj());
        assert_eq!(blisp.energy_uj_per_radio["ble"], 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let mut s = scenario(MobilityTrace::constant(25.0, 120.0, 5.0).unwrap());
        s.policy = Policy::random(3);
        s.seed = 42;
        let a = run_with(&s, Setup::Blisp(s.policy), 1).unwrap().0;
        let b = run_with(&s, Setup::Blisp(s.policy), 1).unwrap().0;
        assert_eq!(a, b);
        let c = run_with(&s, Setup::Blisp(s.policy), 2).unwrap().0;
        assert_ne!(a, c);
    }

    #[test]
    fn asymmetric_downlink() {
        let mut s = scenario(MobilityTrace::constant(5.0, 10.0, 5.0).unwrap());
        let mut down = RadioModel::wisp();
        down.a = 1.0; // interrogator->tag dead at 5 m
        s.wisp_downlink_model = Some(down);
        let (records, _) = run_with(&s, Setup::WispOnly, 0).unwrap();
        assert!(records.iter().flat_map(|r| &r.outcomes).all(|o| o.rn16_delivered && !o.ack_received));
    }

    #[test]
    fn invalid_scenario_fails_before_running() {
        let mut s = scenario(MobilityTrace::constant(5.0, 10.0, 5.0).unwrap());
        s.frames_per_transmission = 0;
        assert!(run(&s).is_err());
    }
}
