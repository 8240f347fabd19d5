use std::collections::BTreeMap;

use super::{ProtocolError, ProtocolTimers};

/// Which mobile owns which ultrasonic channel. Owned by the fixed device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelAssignment {
    channel_count: usize,
    owners: BTreeMap<String, usize>,
}

impl ChannelAssignment {
    pub fn new(channel_count: usize) -> Self {
        Self {
            channel_count,
            owners: BTreeMap::new(),
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn channel_of(&self, mobile: &str) -> Option<usize> {
        self.owners.get(mobile).copied()
    }

    pub fn assigned(&self) -> impl Iterator<Item = (&str, usize)> {
        self.owners.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn free(&self) -> Vec<usize> {
        (0..self.channel_count)
            .filter(|c| !self.owners.values().any(|v| v == c))
            .collect()
    }

    /// Assigns the lowest free channel. Re-allocating returns the existing one.
    pub fn allocate(&mut self, mobile: &str) -> Result<usize, ProtocolError> {
        if let Some(c) = self.channel_of(mobile) {
            return Ok(c);
        }
        let c = *self
            .free()
            .first()
            .ok_or(ProtocolError::ChannelsExhausted(self.channel_count))?;
        self.owners.insert(mobile.to_string(), c);
        Ok(c)
    }

    /// Frees the mobile's channel once RF has been silent for `rf_grace`.
    /// Returns whether the channel was released.
    pub fn release(
        &mut self,
        mobile: &str,
        now: f64,
        last_rf: f64,
        timers: &ProtocolTimers,
    ) -> Result<bool, ProtocolError> {
        if !self.owners.contains_key(mobile) {
            return Err(ProtocolError::UnknownMobile(mobile.to_string()));
        }
        if now - last_rf >= timers.rf_grace {
            self.owners.remove(mobile);
            return Ok(true);
        }
        Ok(false)
    }
}
