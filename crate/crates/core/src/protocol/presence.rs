use serde::{Deserialize, Serialize};

use super::{Configuration, ProtocolError, ProtocolTimers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Presence {
    Away,
    NearbyOutside,
    Present,
}

/// Which fixed receiver heard the ultrasonic frame. Only the dual-fixed
/// configuration distinguishes the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UsSource {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observation {
    RfSeen,
    UsSeen(UsSource),
    Tick,
}

/// One line of the transition log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub device: String,
    pub from: Presence,
    pub to: Presence,
    pub config: Configuration,
}

/// Inference state for one mobile.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceState {
    pub device: String,
    pub config: Configuration,
    pub state: Presence,
    pub last_rf: Option<f64>,
    /// Last ultrasonic sighting in the fixed device's space; the interior
    /// receiver in the dual-fixed configuration.
    pub last_us: Option<f64>,
    pub last_us_exterior: Option<f64>,
    pub last_event: Option<f64>,
}

impl PresenceState {
    pub fn new(device: impl Into<String>, config: Configuration) -> Self {
        Self {
            device: device.into(),
            config,
            state: Presence::Away,
            last_rf: None,
            last_us: None,
            last_us_exterior: None,
            last_event: None,
        }
    }

    /// State implied by the sighting timestamps at `now`.
    pub fn infer(&self, now: f64, timers: &ProtocolTimers) -> Presence {
        let fresh = |t| timers.is_fresh(t, now);
        let nearby = if self.config.uses_rf() {
            fresh(self.last_rf)
        } else {
            fresh(self.last_us_exterior)
        };
        if fresh(self.last_us) {
            Presence::Present
        } else if nearby {
            Presence::NearbyOutside
        } else {
            Presence::Away
        }
    }
}

/// Applies one observation at time `now`.
///
/// The result depends only on the inputs, so replaying an event log always
/// reproduces the same transitions. In the dual-fixed configuration RF
/// sightings are ignored entirely.
pub fn observe(
    state: &PresenceState,
    event: Observation,
    now: f64,
    timers: &ProtocolTimers,
) -> Result<(PresenceState, Option<Transition>), ProtocolError> {
    if let Some(last) = state.last_event {
        if now < last {
            return Err(ProtocolError::TimeRegression {
                device: state.device.clone(),
                now,
                last,
            });
        }
    }
    if event == Observation::RfSeen && !state.config.uses_rf() {
        return Ok((state.clone(), None));
    }

    let mut next = state.clone();
    next.last_event = Some(now);
    match (event, state.config) {
        (Observation::RfSeen, _) => next.last_rf = Some(now),
        (Observation::UsSeen(UsSource::Exterior), Configuration::DualFixedNoRf) => {
            next.last_us_exterior = Some(now)
        }
        (Observation::UsSeen(_), _) => next.last_us = Some(now),
        (Observation::Tick, _) => {}
    }
    next.state = next.infer(now, timers);

    let transition = (next.state != state.state).then(|| Transition {
        t: now,
        device: state.device.clone(),
        from: state.state,
        to: next.state,
        config: state.config,
    });
    Ok((next, transition))
}
