//! Presence protocol: device roles, channel allocation, beacon scheduling and
//! the presence state machine that turns RF and ultrasonic sightings into
//! AWAY / NEARBY_OUTSIDE / PRESENT.

mod channels;
mod presence;

pub use channels::ChannelAssignment;
pub use presence::{observe, Observation, Presence, PresenceState, Transition, UsSource};

use serde::{Deserialize, Serialize};

use crate::modem::{HexPayload, UsFrame};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProtocolError {
    #[error("all {0} channels are assigned")]
    ChannelsExhausted(usize),

    #[error("unknown mobile {0:?}")]
    UnknownMobile(String),

    #[error("time went backwards for {device:?}: {now} < {last}")]
    TimeRegression { device: String, now: f64, last: f64 },

    #[error("device {0:?} has no channel assigned")]
    NotReady(String),

    #[error("invalid timers: {0}")]
    InvalidTimers(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    /// Mobiles beacon, the fixed device listens.
    #[serde(rename = "A_MOBILE_BEACON")]
    MobileBeacon,
    /// The fixed device beacons, mobiles listen.
    #[serde(rename = "B_MOBILE_RECEIVER")]
    MobileReceiver,
    /// Interior and exterior fixed receivers, no RF.
    #[serde(rename = "C_DUAL_FIXED_NO_RF")]
    DualFixedNoRf,
}

impl Configuration {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MobileBeacon => "A_MOBILE_BEACON",
            Self::MobileReceiver => "B_MOBILE_RECEIVER",
            Self::DualFixedNoRf => "C_DUAL_FIXED_NO_RF",
        }
    }

    pub fn uses_rf(self) -> bool {
        !matches!(self, Self::DualFixedNoRf)
    }

    pub fn mode_of(self, role: Role) -> Mode {
        match (self, role) {
            (Self::MobileReceiver, Role::Mobile) => Mode::Receiver,
            (Self::MobileReceiver, _) => Mode::Beacon,
            (_, Role::Mobile) => Mode::Beacon,
            (_, _) => Mode::Receiver,
        }
    }

    pub fn role(self, role: Role) -> DeviceRole {
        DeviceRole {
            role,
            mode: self.mode_of(role),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    Mobile,
    FixedInterior,
    FixedExterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    Beacon,
    Receiver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceRole {
    pub role: Role,
    pub mode: Mode,
}

/// Protocol timing, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTimers {
    /// Beacon repeat interval.
    pub message_period: f64,
    /// Silence after which a sighting is stale.
    pub absence_timeout: f64,
    /// Delay after the last RF sighting before a channel is released.
    pub rf_grace: f64,
}

impl Default for ProtocolTimers {
    fn default() -> Self {
        Self {
            message_period: 1.0,
            absence_timeout: 3.0,
            rf_grace: 5.0,
        }
    }
}

impl ProtocolTimers {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(self.message_period) && ok(self.absence_timeout) && ok(self.rf_grace)) {
            return Err(ProtocolError::InvalidTimers(
                "timers must be positive".into(),
            ));
        }
        if self.absence_timeout <= self.message_period {
            return Err(ProtocolError::InvalidTimers(
                "absence_timeout must exceed message_period".into(),
            ));
        }
        Ok(())
    }

    pub fn is_fresh(&self, last: Option<f64>, now: f64) -> bool {
        last.is_some_and(|t| now - t <= self.absence_timeout)
    }
}

/// A device that repeats one payload on its assigned channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Beacon {
    pub device_id: String,
    pub payload: HexPayload,
}

impl Beacon {
    pub fn new(device_id: impl Into<String>) -> Self {
        Self {
            device_id: device_id.into(),
            payload: "aa".parse().expect("literal payload"),
        }
    }

    pub fn with_payload(mut self, payload: HexPayload) -> Self {
        self.payload = payload;
        self
    }

    /// Frames sent from `start` (inclusive) to `end` (exclusive), one per
    /// message period.
    pub fn run(
        &self,
        assignments: &ChannelAssignment,
        start: f64,
        end: f64,
        timers: &ProtocolTimers,
    ) -> Result<impl Iterator<Item = (f64, UsFrame)> + '_, ProtocolError> {
        timers.validate()?;
        let channel = assignments
            .channel_of(&self.device_id)
            .ok_or_else(|| ProtocolError::NotReady(self.device_id.clone()))?;
        let period = timers.message_period;
        Ok((0u64..)
            .map(move |k| start + k as f64 * period)
            .take_while(move |&t| t < end)
            .map(move |t| {
                (
                    t,
                    UsFrame {
                        channel,
                        payload: self.payload.clone(),
                    },
                )
            }))
    }
}
