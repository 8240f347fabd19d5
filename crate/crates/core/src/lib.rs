//! Ultrasonic threshold detection: a near-ultrasonic data-over-sound modem,
//! a two-space propagation simulator, the presence protocol built on them,
//! reference lock and logging services, and the evaluation harness.

pub mod channel_sim;
pub mod harness;
pub mod modem;
pub mod protocol;
pub mod services;
