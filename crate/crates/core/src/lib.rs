//! Hybrid backscatter/BLE radio node: energy-per-byte link model, RN16/ACK
//! channel estimation and radio switching, plus a deterministic
//! discrete-period simulator for range experiments.

pub mod config;
pub mod controller;
pub mod link_model;
pub mod protocol;
pub mod report;
pub mod sim;

pub use controller::{Controller, ControllerState, Decision, Policy};
pub use link_model::{EnergyPerByte, LinkError, RadioModel};
pub use report::{CountMode, RunMetrics};
pub use sim::{MobilityTrace, PeriodRecord, Scenario, Setup, SimError};
