//! Inventory-round and BLE advertising link simulation.
//!
//! Every backscatter frame goes through a three-stage handshake: the tag
//! answers the interrogator's query with an RN16, the interrogator
//! acknowledges it, and the tag then replies with the EPC field that carries
//! the sensor payload. The ACK count per round is the channel estimate the
//! radio controller feeds on.
//!
//! Random draws are made unconditionally (3 per backscatter frame, 1 per BLE
//! frame) so that a trace stays aligned with its seed whatever the outcomes.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Result of one Query/RN16/ACK/EPC exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub rn16_delivered: bool,
    pub ack_received: bool,
    pub epc_delivered: bool,
}

impl FrameOutcome {
    /// `epc_delivered => ack_received => rn16_delivered`.
    pub fn is_consistent(&self) -> bool {
        (!self.epc_delivered || self.ack_received) && (!self.ack_received || self.rn16_delivered)
    }
}

/// Frame success probabilities of both backscatter directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSample {
    /// tag -> interrogator
    pub p_up: f64,
    /// interrogator -> tag
    pub p_down: f64,
}

impl ChannelSample {
    pub fn new(p_up: f64, p_down: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p_up) && (0.0..=1.0).contains(&p_down));
        Self { p_up, p_down }
    }

    pub fn symmetric(p: f64) -> Self {
        Self::new(p, p)
    }
}

#[inline]
fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    // gen::<f64>() is in [0, 1): p = 1 always succeeds, p = 0 never does.
    rng.gen::<f64>() < p
}

/// Runs `frames` handshakes over the channel `ch`.
pub fn inventory_round<R: Rng + ?Sized>(
    ch: ChannelSample,
    frames: usize,
    rng: &mut R,
) -> Vec<FrameOutcome> {
    (0..frames)
        .map(|_| {
            let rn16 = bernoulli(rng, ch.p_up);
            let ack = bernoulli(rng, ch.p_down);
            let epc = bernoulli(rng, ch.p_up);
            let rn16_delivered = rn16;
            let ack_received = rn16_delivered && ack;
            FrameOutcome {
                rn16_delivered,
                ack_received,
                epc_delivered: ack_received && epc,
            }
        })
        .collect()
}

/// Number of acknowledged frames in a round.
pub fn ack_count(outcomes: &[FrameOutcome]) -> usize {
    outcomes.iter().filter(|o| o.ack_received).count()
}

/// One BLE advertising frame; delivered with probability `p`.
pub fn ble_advertise<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    bernoulli(rng, p)
}
