//! Two-space propagation simulator.
//!
//! Stands in for the physical testbed: a scene places devices on either side
//! of one door, [`path_loss_db`] turns geometry, door state and carry context
//! into attenuation, and [`transmit`] applies it to audio with seeded white
//! noise. RF is a pure range predicate that ignores the door.

mod propagation;
mod scene;

pub use propagation::{
    device_distance_ft, noise_sigma, path_loss_db, propagate, rf_visible, transmit,
    NOISE_REFERENCE_BANDWIDTH_HZ,
};
pub use scene::{
    AcousticScene, CarryContext, ContextLoss, DevicePlacement, DoorState, LossModel, RfModel,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("unknown device {0:?}")]
    UnknownDevice(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("scene parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}
