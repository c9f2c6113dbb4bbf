//! Per-period radio selection driven by the previous period's ACK count.
//!
//! The backscatter channel is considered good when every frame planned in
//! the last probing period was acknowledged. While it is good only the
//! backscatter radio transmits. When it goes bad, BLE takes over and the
//! backscatter radio is re-probed after a uniformly random backoff of
//! `0..=max_backoff` silent periods (`max_backoff = 0` re-probes every period).

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Switching policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    /// Largest random backoff window in periods. 0 is the naive policy.
    pub max_backoff: u32,
    /// Re-evaluate the channel verdict every period, even after periods in
    /// which nothing was sent on the backscatter radio. In that reading a
    /// silent period yields `0 == 0` and clears the verdict, so backoffs
    /// never last longer than one period.
    #[serde(default)]
    pub literal_alg1: bool,
}

impl Policy {
    pub const fn naive() -> Self {
        Self {
            max_backoff: 0,
            literal_alg1: false,
        }
    }

    pub const fn random(max_backoff: u32) -> Self {
        Self {
            max_backoff,
            literal_alg1: false,
        }
    }

    pub fn is_naive(&self) -> bool {
        self.max_backoff == 0
    }
}

impl Default for Policy {
    fn default() -> Self {
        Self::naive()
    }
}

/// Which radios transmit in a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub wisp_tx: bool,
    pub ble_tx: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerState {
    /// Remaining silent periods.
    pub backoff: u32,
    pub wisp_ok: bool,
    /// Frames planned in the most recent backscatter period.
    pub last_planned: usize,
    /// ACKs received in that period.
    pub last_acked: usize,
}

impl Default for ControllerState {
    /// Optimistic start: the first period always probes the backscatter radio.
    fn default() -> Self {
        Self {
            backoff: 0,
            wisp_ok: true,
            last_planned: 0,
            last_acked: 0,
        }
    }
}

impl ControllerState {
    /// Decides the radios for the coming period.
    ///
    /// Draws one random number exactly when a retry slot is taken with a bad
    /// channel verdict.
    pub fn step<R: Rng + ?Sized>(&self, policy: &Policy, rng: &mut R) -> (Decision, Self) {
        let mut next = *self;
        if policy.literal_alg1 || next.last_planned > 0 {
            next.wisp_ok = next.last_acked == next.last_planned;
        }
        if next.wisp_ok {
            next.backoff = 0;
        }
        let wisp_tx = if next.backoff == 0 {
            if !next.wisp_ok {
                next.backoff = rng.gen_range(0..=policy.max_backoff);
            }
            true
        } else {
            next.backoff -= 1;
            false
        };
        let decision = Decision {
            wisp_tx,
            ble_tx: !next.wisp_ok,
        };
        (decision, next)
    }

    /// Records the counts of the period that just ended.
    ///
    /// A period without backscatter frames leaves the last counts in place.
    ///
    /// # Panics
    /// If `acked > planned`.
    pub fn feed_back(&self, planned: usize, acked: usize) -> Self {
        assert!(acked <= planned, "acked {acked} > planned {planned}");
        if planned == 0 {
            return *self;
        }
        Self {
            last_planned: planned,
            last_acked: acked,
            ..*self
        }
    }

    /// Records counts unconditionally, including empty periods.
    pub fn feed_back_literal(&self, planned: usize, acked: usize) -> Self {
        assert!(acked <= planned, "acked {acked} > planned {planned}");
        Self {
            last_planned: planned,
            last_acked: acked,
            ..*self
        }
    }
}

/// A policy together with its running state, one per simulated node.
#[derive(Debug, Clone)]
pub struct Controller {
    policy: Policy,
    state: ControllerState,
}

impl Controller {
    pub fn new(policy: Policy) -> Self {
        Self {
            policy,
            state: ControllerState::default(),
        }
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Decision {
        let (decision, next) = self.state.step(&self.policy, rng);
        self.state = next;
        decision
    }

    pub fn feed_back(&mut self, planned: usize, acked: usize) {
        self.state = if self.policy.literal_alg1 {
            self.state.feed_back_literal(planned, acked)
        } else {
            self.state.feed_back(planned, acked)
        };
    }
}
